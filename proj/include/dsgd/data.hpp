// data.hpp — dataset synthesis and text ingestion.
//
// Synthetic features are isotropic Gaussians clipped to the B-ball
// (projected to the B-sphere when the raw draw exceeds it). Labels follow
// either the sign of <x, w_true> with flip noise (classification families)
// or <x, w_true> plus Gaussian noise (the quadratic family). Every draw is
// keyed, so a dataset is a pure function of its spec, and replacement
// samples for neighboring datasets come from the same distribution under a
// dedicated sub-stream.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsgd/common.hpp"
#include "dsgd/losses.hpp"

namespace dsgd::harness {

enum class LabelRule { kSignFlip, kLinearNoise };

inline const char* label_rule_name(LabelRule r) {
  return r == LabelRule::kSignFlip ? "sign-flip" : "linear-noise";
}

struct SyntheticSpec {
  int m = 1;
  int n = 1;
  int dim = 1;
  double feature_bound = 1.0;
  LabelRule rule = LabelRule::kSignFlip;
  std::uint64_t seed = 1;
  double flip_rate = 0.1;
  double noise = 0.1;
};

namespace detail {

inline constexpr std::uint64_t kStreamTruth = 0x77747275ULL;
inline constexpr std::uint64_t kStreamSample = 0x73616d70ULL;
inline constexpr std::uint64_t kStreamReplacement = 0x7265706cULL;

inline Eigen::VectorXd ground_truth(const SyntheticSpec& spec) {
  rng::Stream stream(rng::key_of(spec.seed, kStreamTruth));
  Eigen::VectorXd w(spec.dim);
  for (int i = 0; i < spec.dim; ++i) w(i) = stream.next_gaussian();
  const double nrm = w.norm();
  return nrm > 0 ? Eigen::VectorXd(w / nrm) : Eigen::VectorXd::Unit(spec.dim, 0);
}

inline losses::Sample draw_sample(const SyntheticSpec& spec,
                                  const Eigen::VectorXd& w_true,
                                  std::uint64_t stream_tag, std::uint64_t index) {
  rng::Stream stream(rng::key_of(spec.seed, stream_tag, index));
  losses::Sample z;
  z.x.resize(spec.dim);
  for (int i = 0; i < spec.dim; ++i) z.x(i) = stream.next_gaussian();
  const double nrm = z.x.norm();
  if (nrm > spec.feature_bound) z.x *= spec.feature_bound / nrm;
  if (spec.rule == LabelRule::kSignFlip) {
    const double margin = z.x.dot(w_true);
    z.y = margin >= 0.0 ? 1.0 : -1.0;
    if (stream.next_double() < spec.flip_rate) z.y = -z.y;
  } else {
    z.y = z.x.dot(w_true) + spec.noise * stream.next_gaussian();
  }
  return z;
}

}  // namespace detail

struct SyntheticResult {
  losses::PartitionedDataset dataset;
  Eigen::VectorXd w_true;
};

inline SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 1 || spec.n < 1 || spec.dim < 1)
    throw ConfigError("generate_synthetic: positive sizes required");
  const Eigen::VectorXd w_true = detail::ground_truth(spec);
  std::vector<losses::Sample> samples;
  samples.reserve(static_cast<std::size_t>(spec.m) * static_cast<std::size_t>(spec.n));
  for (std::uint64_t idx = 0;
       idx < static_cast<std::uint64_t>(spec.m) * static_cast<std::uint64_t>(spec.n); ++idx)
    samples.push_back(detail::draw_sample(spec, w_true, detail::kStreamSample, idx));
  return {losses::PartitionedDataset(spec.m, spec.n, std::move(samples),
                                     spec.feature_bound, spec.seed),
          w_true};
}

// Fresh i.i.d. replacement draw from the same distribution, on a stream
// keyed by (r, k) so distinct neighbor positions get independent samples.
inline losses::Sample fresh_replacement(const SyntheticSpec& spec, int r, int k) {
  const Eigen::VectorXd w_true = detail::ground_truth(spec);
  const std::uint64_t index = static_cast<std::uint64_t>(r) * 1000003ULL +
                              static_cast<std::uint64_t>(k);
  return detail::draw_sample(spec, w_true, detail::kStreamReplacement, index);
}

// ── libsvm-style text files ───────────────────────────────────────────────
//
//   <label> <index>:<value> <index>:<value> ...
//
// Indices are 1-based. The first m*n rows are partitioned row-major into m
// nodes of n samples; features are rescaled so the maximum norm equals B.

inline losses::PartitionedDataset ingest_libsvm(const std::string& path, int m, int n,
                                                double B) {
  if (m < 1 || n < 1) throw ConfigError("ingest_libsvm: positive sizes required");
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  struct Row {
    double y;
    std::vector<std::pair<int, double>> feats;
  };
  std::vector<Row> rows;
  const std::size_t wanted = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  std::string line;
  long line_no = 0;
  int max_index = 0;
  while (rows.size() < wanted && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Row row;
    if (!(ls >> row.y))
      throw IngestError("line " + std::to_string(line_no) + ": missing label");
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw IngestError("line " + std::to_string(line_no) + ": malformed token '" +
                          tok + "'");
      try {
        const int idx = std::stoi(tok.substr(0, colon));
        const double val = std::stod(tok.substr(colon + 1));
        if (idx < 1) throw std::invalid_argument("index");
        row.feats.emplace_back(idx, val);
        max_index = std::max(max_index, idx);
      } catch (const std::exception&) {
        throw IngestError("line " + std::to_string(line_no) + ": malformed token '" +
                          tok + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < wanted)
    throw IngestError("need " + std::to_string(wanted) + " rows, file has " +
                      std::to_string(rows.size()));
  const int dim = std::max(max_index, 1);
  std::vector<losses::Sample> samples;
  samples.reserve(wanted);
  double max_norm = 0.0;
  for (const auto& row : rows) {
    losses::Sample z;
    z.x = Eigen::VectorXd::Zero(dim);
    for (const auto& [idx, val] : row.feats) z.x(idx - 1) = val;
    z.y = row.y;
    max_norm = std::max(max_norm, z.x.norm());
    samples.push_back(std::move(z));
  }
  if (max_norm == 0.0) throw IngestError("all feature vectors are zero");
  for (auto& z : samples) z.x *= B / max_norm;
  return {m, n, std::move(samples), B};
}

inline void write_libsvm(const std::string& path,
                         const losses::PartitionedDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write '" + path + "'");
  out.precision(17);
  for (int i = 0; i < ds.nodes(); ++i) {
    for (int k = 0; k < ds.per_node(); ++k) {
      const auto& z = ds.at(i, k);
      out << z.y;
      for (Eigen::Index d = 0; d < z.x.size(); ++d)
        if (z.x(d) != 0.0) out << ' ' << (d + 1) << ':' << z.x(d);
      out << '\n';
    }
  }
}

}  // namespace dsgd::harness
