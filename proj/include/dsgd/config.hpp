// config.hpp — the experiment configuration document.
//
// One JSON document describes one experiment; --set key=value overrides
// leaf keys by dotted path. Validation is strict: unknown keys anywhere in
// the document are rejected before any computation runs.

#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsgd/common.hpp"
#include "dsgd/data.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/topology.hpp"

namespace dsgd::harness {

using json = nlohmann::json;

namespace cfg_detail {

inline void check_keys(const json& obj, const std::string& path,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("'" + path + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

template <typename T>
T require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + path + "." + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + path + "." + key + "' has the wrong type");
  }
}

}  // namespace cfg_detail

// ── Leaf builders ─────────────────────────────────────────────────────────

inline losses::LossModel parse_model(const json& j) {
  cfg_detail::check_keys(j, "run.model",
                         {"family", "dim", "domain_radius", "feature_bound", "mu",
                          "label_bound"});
  const auto family_str = cfg_detail::require<std::string>(j, "run.model", "family");
  losses::Family family;
  if (family_str == "logistic") family = losses::Family::kLogistic;
  else if (family_str == "ridge-logistic") family = losses::Family::kRidgeLogistic;
  else if (family_str == "quadratic") family = losses::Family::kQuadratic;
  else if (family_str == "saturating-nonconvex") family = losses::Family::kSaturating;
  else throw ConfigError("unknown loss family '" + family_str + "'");
  return losses::make_model(family, cfg_detail::require<int>(j, "run.model", "dim"),
                            cfg_detail::require<double>(j, "run.model", "domain_radius"),
                            cfg_detail::require<double>(j, "run.model", "feature_bound"),
                            cfg_detail::get_or<double>(j, "mu", 0.0),
                            cfg_detail::get_or<double>(j, "label_bound", 1.0));
}

inline topology::GossipMatrix parse_one_topology(const json& j, const std::string& path);

inline topology::GossipMatrix build_named_topology(const std::string& kind, int m,
                                                   const json& j, const std::string& path) {
  if (kind == "complete") return topology::complete(m);
  if (kind == "ring") return topology::ring(m);
  if (kind == "path") return topology::path(m);
  if (kind == "torus2d") return topology::torus2d(m);
  if (kind == "random-regular")
    return topology::random_regular(
        m, cfg_detail::require<int>(j, path, "degree"),
        cfg_detail::get_or<std::uint64_t>(j, "seed", 1));
  if (kind == "explicit") {
    const auto rows = cfg_detail::require<std::vector<std::vector<double>>>(j, path, "matrix");
    Eigen::MatrixXd M(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size())
        throw ConfigError("'" + path + ".matrix' must be square");
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    return topology::explicit_matrix(M);
  }
  throw ConfigError("unknown topology kind '" + kind + "'");
}

inline topology::GossipMatrix parse_one_topology(const json& j, const std::string& path) {
  cfg_detail::check_keys(j, path, {"kind", "m", "degree", "seed", "matrix"});
  const auto kind = cfg_detail::require<std::string>(j, path, "kind");
  const int m = kind == "explicit" ? 0 : cfg_detail::require<int>(j, path, "m");
  return build_named_topology(kind, m, j, path);
}

inline std::shared_ptr<const topology::TopologySchedule> parse_topology(const json& j) {
  cfg_detail::check_keys(j, "run.topology",
                         {"kind", "m", "degree", "seed", "matrix", "cycle", "list"});
  const auto kind = cfg_detail::require<std::string>(j, "run.topology", "kind");
  if (kind == "cycle" || kind == "list") {
    const char* key = kind == "cycle" ? "cycle" : "list";
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty())
      throw ConfigError("topology '" + kind + "' needs a nonempty '" +
                        std::string(key) + "' array");
    std::vector<topology::GossipMatrix> mats;
    for (const auto& sub : j.at(key))
      mats.push_back(parse_one_topology(sub, "run.topology." + std::string(key)));
    return std::make_shared<const topology::TopologySchedule>(
        kind == "cycle" ? topology::TopologySchedule::cycle(std::move(mats))
                        : topology::TopologySchedule::explicit_list(std::move(mats)));
  }
  return std::make_shared<const topology::TopologySchedule>(
      topology::TopologySchedule::fixed(parse_one_topology(j, "run.topology")));
}

inline engine::StepSchedule parse_schedule(const json& j, const losses::LossModel& model) {
  cfg_detail::check_keys(j, "run.schedule", {"kind", "eta", "mu", "beta", "gamma"});
  const auto kind = cfg_detail::require<std::string>(j, "run.schedule", "kind");
  if (kind == "constant")
    return engine::StepSchedule::constant(
        cfg_detail::require<double>(j, "run.schedule", "eta"));
  if (kind == "inv-t") return engine::StepSchedule::inv_t();
  const auto c = losses::constants(model);
  if (kind == "inv-t-mu")
    return engine::StepSchedule::inv_t_mu(cfg_detail::get_or<double>(j, "mu", c.mu));
  if (kind == "inv-t-beta")
    return engine::StepSchedule::inv_t_beta(cfg_detail::get_or<double>(j, "beta", c.beta));
  if (kind == "inv-t-gamma")
    return engine::StepSchedule::inv_t_gamma(cfg_detail::get_or<double>(j, "gamma", c.gamma));
  throw ConfigError("unknown schedule kind '" + kind + "'");
}

struct BuiltRun {
  engine::RunConfig run;
  SyntheticSpec synthetic;  // valid when data.source == "synthetic"
  bool is_synthetic = true;
};

inline BuiltRun parse_run(const json& j) {
  cfg_detail::check_keys(j, "run",
                         {"model", "data", "topology", "schedule", "iterations",
                          "update_order", "projected", "master_seed", "record_stride",
                          "regime", "initial"});
  BuiltRun built;
  engine::RunConfig& cfg = built.run;
  if (!j.contains("model")) throw ConfigError("missing key 'run.model'");
  cfg.model = parse_model(j.at("model"));
  if (!j.contains("topology")) throw ConfigError("missing key 'run.topology'");
  cfg.topology = parse_topology(j.at("topology"));
  if (!j.contains("schedule")) throw ConfigError("missing key 'run.schedule'");
  cfg.schedule = parse_schedule(j.at("schedule"), cfg.model);
  cfg.iterations = cfg_detail::require<long>(j, "run", "iterations");
  const auto order = cfg_detail::get_or<std::string>(j, "update_order", "gossip-then-grad");
  if (order == "gossip-then-grad") cfg.order = engine::UpdateOrder::kGossipThenGrad;
  else if (order == "grad-inside-gossip") cfg.order = engine::UpdateOrder::kGradInsideGossip;
  else throw ConfigError("unknown update_order '" + order + "'");
  cfg.projected = cfg_detail::get_or<bool>(j, "projected", false);
  cfg.master_seed = cfg_detail::get_or<std::uint64_t>(j, "master_seed", 1);
  cfg.record_stride = cfg_detail::get_or<long>(j, "record_stride", 1);
  cfg.regime = cfg_detail::get_or<std::string>(j, "regime", "");
  if (j.contains("initial")) {
    const auto vals = j.at("initial").get<std::vector<double>>();
    cfg.initial.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
      cfg.initial(static_cast<Eigen::Index>(i)) = vals[i];
  }

  if (!j.contains("data")) throw ConfigError("missing key 'run.data'");
  const json& d = j.at("data");
  cfg_detail::check_keys(d, "run.data",
                         {"source", "n", "label_rule", "seed", "flip_rate", "noise",
                          "path"});
  const auto source = cfg_detail::get_or<std::string>(d, "source", "synthetic");
  const int m = cfg.topology->size();
  const int n = cfg_detail::require<int>(d, "run.data", "n");
  if (source == "synthetic") {
    SyntheticSpec& spec = built.synthetic;
    spec.m = m;
    spec.n = n;
    spec.dim = cfg.model.dim;
    spec.feature_bound = cfg.model.feature_bound;
    spec.seed = cfg_detail::get_or<std::uint64_t>(d, "seed", cfg.master_seed);
    spec.flip_rate = cfg_detail::get_or<double>(d, "flip_rate", 0.1);
    spec.noise = cfg_detail::get_or<double>(d, "noise", 0.1);
    const auto rule = cfg_detail::get_or<std::string>(
        d, "label_rule",
        cfg.model.family == losses::Family::kQuadratic ? "linear-noise" : "sign-flip");
    if (rule == "sign-flip") spec.rule = LabelRule::kSignFlip;
    else if (rule == "linear-noise") spec.rule = LabelRule::kLinearNoise;
    else throw ConfigError("unknown label_rule '" + rule + "'");
    built.is_synthetic = true;
    cfg.dataset = std::make_shared<const losses::PartitionedDataset>(
        generate_synthetic(spec).dataset);
  } else if (source == "libsvm") {
    built.is_synthetic = false;
    cfg.dataset = std::make_shared<const losses::PartitionedDataset>(
        ingest_libsvm(cfg_detail::require<std::string>(d, "run.data", "path"), m, n,
                      cfg.model.feature_bound));
  } else {
    throw ConfigError("unknown data source '" + source + "'");
  }
  return built;
}

// ── The experiment document ───────────────────────────────────────────────

enum class ExperimentKind { kSingleRun, kTwin, kBoundEval, kSweep, kVerifySuite };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSingleRun;
  json document;  // canonical echo

  static ExperimentConfig parse(const json& j) {
    cfg_detail::check_keys(
        j, "", {"kind", "run", "twin", "bounds", "sweep", "output", "jobs", "seeds"});
    ExperimentConfig out;
    out.document = j;
    const auto kind = cfg_detail::require<std::string>(j, "", "kind");
    if (kind == "single-run") out.kind = ExperimentKind::kSingleRun;
    else if (kind == "twin") out.kind = ExperimentKind::kTwin;
    else if (kind == "bound-eval") out.kind = ExperimentKind::kBoundEval;
    else if (kind == "sweep") out.kind = ExperimentKind::kSweep;
    else if (kind == "verify-suite") out.kind = ExperimentKind::kVerifySuite;
    else throw ConfigError("unknown experiment kind '" + kind + "'");

    // Validate sub-documents eagerly so bad configs fail before work starts.
    if (out.kind == ExperimentKind::kSingleRun || out.kind == ExperimentKind::kTwin ||
        out.kind == ExperimentKind::kSweep) {
      if (!j.contains("run")) throw ConfigError("missing key 'run'");
      parse_run(j.at("run"));
    }
    if (out.kind == ExperimentKind::kTwin) {
      if (!j.contains("twin")) throw ConfigError("missing key 'twin'");
      cfg_detail::check_keys(j.at("twin"), "twin", {"r", "k", "sweep", "replacement"});
      if (j.at("twin").contains("replacement"))
        cfg_detail::check_keys(j.at("twin").at("replacement"), "twin.replacement",
                               {"x", "y"});
    }
    if (out.kind == ExperimentKind::kBoundEval) {
      if (!j.contains("bounds")) throw ConfigError("missing key 'bounds'");
      cfg_detail::check_keys(j.at("bounds"), "bounds",
                             {"L", "beta", "mu", "gamma", "M", "sigma", "m", "n", "T",
                              "lambda", "delta", "schedule"});
    }
    if (out.kind == ExperimentKind::kSweep) {
      if (!j.contains("sweep")) throw ConfigError("missing key 'sweep'");
      cfg_detail::check_keys(j.at("sweep"), "sweep", {"grid"});
      cfg_detail::check_keys(j.at("sweep").at("grid"), "sweep.grid",
                             {"m", "n", "T", "eta", "topology", "seed"});
    }
    if (j.contains("output"))
      cfg_detail::check_keys(j.at("output"), "output", {"dir", "formats"});
    if (j.contains("seeds") && !j.at("seeds").is_array())
      cfg_detail::check_keys(j.at("seeds"), "seeds", {"count", "base"});
    return out;
  }

  // The seed batch: an explicit list, a {count, base} range, or empty
  // (meaning: run once with the seeds already inside the document).
  std::vector<std::uint64_t> seed_batch() const {
    std::vector<std::uint64_t> seeds;
    if (!document.contains("seeds")) return seeds;
    const json& s = document.at("seeds");
    if (s.is_array()) {
      for (const auto& v : s) seeds.push_back(v.get<std::uint64_t>());
    } else {
      const auto count = cfg_detail::require<long>(s, "seeds", "count");
      const auto base = cfg_detail::get_or<std::uint64_t>(s, "base", 1);
      for (long i = 0; i < count; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    if (seeds.empty()) throw ConfigError("'seeds' must name at least one seed");
    return seeds;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse(j);
  }
};

// Dotted-path override: "run.schedule.eta=0.2". The value is parsed as a
// JSON literal when possible and as a string otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // plain string
  }
  json* node = &doc;
  std::istringstream ps(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ps, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("--set has an empty key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  (*node)[parts.back()] = value;
}

}  // namespace dsgd::harness
