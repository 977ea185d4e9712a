// stability.hpp — coupled twin trajectories on neighboring datasets.
//
// S^{(rk)} replaces the k-th sample on node r. A twin run executes D-SGD
// on S and S^{(rk)} with shared sampling keys, so both trajectories draw
// the same j_t(i) at every node and step; divergence can only start when
// node r first draws index k (an "indicator hit"). Recorded per step:
//   d_t      = || w-bar^t - v-bar^t ||          (averaged weights)
//   delta^t  = ( || w^t(i) - v^t(i) || )_i     (per node)
// and at the end the two stability estimates
//   surrogate = L || w^{T+1} - v^{T+1} ||      (what the closed forms control)
//   direct    = max over a finite pool of |f(w;Z) - f(v;Z)|.
//
// Node index r and sample index k are 1-based here, matching the
// (r, k) in the stability definitions; dataset storage is 0-based.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsgd/common.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/losses.hpp"

namespace dsgd::stability {

struct NeighborSpec {
  int r = 1;  // node index, 1 <= r <= m
  int k = 1;  // sample index, 1 <= k <= n

  void check(int m, int n) const {
    if (r < 1 || r > m || k < 1 || k > n)
      throw RangeError("neighbor (r=" + std::to_string(r) + ", k=" +
                       std::to_string(k) + ") outside [1," + std::to_string(m) +
                       "] x [1," + std::to_string(n) + "]");
  }
};

inline losses::PartitionedDataset make_neighbor(
    const losses::PartitionedDataset& ds, const NeighborSpec& spec,
    const losses::Sample& replacement) {
  spec.check(ds.nodes(), ds.per_node());
  return ds.with_replacement(spec.r - 1, spec.k - 1, replacement);
}

// ── Pointwise stability estimates ─────────────────────────────────────────

struct EpsEstimates {
  double surrogate = 0.0;  // L * || w - v ||
  double direct = 0.0;     // finite-pool sup of |f(w;Z) - f(v;Z)|
  double grad_direct = 0.0;  // finite-pool sup of ||grad f(w;Z) - grad f(v;Z)||
  bool pool_was_empty = false;  // direct sup used training samples only
};

inline EpsEstimates pointwise_eps(const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                  const losses::LossModel& model,
                                  const losses::PartitionedDataset& train,
                                  const losses::Sample& replacement,
                                  const std::vector<losses::Sample>& eval_pool) {
  EpsEstimates out;
  out.surrogate = losses::constants(model).L * (w - v).norm();
  out.pool_was_empty = eval_pool.empty();
  auto consider = [&](const losses::Sample& z) {
    out.direct = std::max(out.direct, std::abs(losses::loss_eval(model, w, z) -
                                               losses::loss_eval(model, v, z)));
    out.grad_direct = std::max(
        out.grad_direct,
        (losses::loss_grad(model, w, z) - losses::loss_grad(model, v, z)).norm());
  };
  for (int i = 0; i < train.nodes(); ++i)
    for (int k = 0; k < train.per_node(); ++k) consider(train.at(i, k));
  consider(replacement);
  for (const auto& z : eval_pool) consider(z);
  return out;
}

// ── Twin runs ─────────────────────────────────────────────────────────────

struct StabilityTrace {
  long T = 0;
  int m = 0;
  std::vector<double> d;               // d_t for t = 1..T+1 (index t-1)
  std::vector<Eigen::VectorXd> delta;  // per-node divergence vectors, t = 1..T+1
  std::vector<long> hits;              // steps with j_t(r) == k
  std::vector<std::vector<int>> indices;  // shared sample indices per step
  Eigen::VectorXd final_w, final_v;    // averaged outputs w^{T+1}, v^{T+1}
  EpsEstimates eps;
  double max_grad_norm = 0.0;
  std::vector<std::string> warnings;

  bool hit_at(long t) const {
    return std::binary_search(hits.begin(), hits.end(), t);
  }
};

// Runs the coupled pair. cfg describes the base run on S; the neighbor is
// built from `spec` and `replacement`. Sampling uses role twin-shared for
// both trajectories regardless of cfg.role.
inline StabilityTrace twin_run(engine::RunConfig cfg, const NeighborSpec& spec,
                               const losses::Sample& replacement,
                               const std::vector<losses::Sample>& eval_pool = {}) {
  if (cfg.record_stride != 1)
    throw InsufficientTraceError("twin_run needs record_stride 1");
  cfg.role = engine::SampleRole::kTwinShared;
  const auto neighbor = std::make_shared<const losses::PartitionedDataset>(
      make_neighbor(*cfg.dataset, spec, replacement));

  engine::RunConfig cfg_v = cfg;
  cfg_v.dataset = neighbor;

  engine::Runner a(cfg);
  engine::Runner b(cfg_v);

  StabilityTrace out;
  out.T = cfg.iterations;
  out.m = cfg.dataset->nodes();
  out.warnings = a.warnings();

  auto record = [&] {
    const Eigen::MatrixXd& W = a.weights();
    const Eigen::MatrixXd& V = b.weights();
    Eigen::VectorXd node_div(out.m);
    for (int i = 0; i < out.m; ++i) node_div(i) = (W.row(i) - V.row(i)).norm();
    out.delta.push_back(std::move(node_div));
    out.d.push_back((a.average() - b.average()).norm());
  };
  record();  // t = 1, identical initialization
  for (long t = 1; t <= cfg.iterations; ++t) {
    a.step();
    b.step();
    if (a.last_indices() != b.last_indices())
      throw NumericsError("twin coupling broke: diverging sample indices");
    out.indices.push_back(a.last_indices());
    if (a.last_indices()[static_cast<std::size_t>(spec.r - 1)] == spec.k - 1)
      out.hits.push_back(t);
    record();
  }
  out.final_w = a.average();
  out.final_v = b.average();
  out.max_grad_norm = std::max(a.max_grad_norm(), b.max_grad_norm());
  out.eps = pointwise_eps(out.final_w, out.final_v, cfg.model, *cfg.dataset,
                          replacement, eval_pool);
  return out;
}

// The local-model view of the same coupling: the per-node divergence
// sequence plus the r-th component the local-model bounds control. Works under
// time-varying topologies; the stepsize cap eta_t <= 2 P^t_rr / beta is
// checked by engine::validate when cfg.regime is set to "local-convex".
struct LocalTrace {
  StabilityTrace trace;
  std::vector<double> delta_r;  // delta^t(r) for t = 1..T+1
};

inline LocalTrace local_trace(const engine::RunConfig& cfg, const NeighborSpec& spec,
                              const losses::Sample& replacement) {
  LocalTrace out{twin_run(cfg, spec, replacement), {}};
  out.delta_r.reserve(out.trace.delta.size());
  for (const auto& v : out.trace.delta)
    out.delta_r.push_back(v(spec.r - 1));
  return out;
}

// ── Aggregation over a full (r, k) sweep ──────────────────────────────────

struct StabilityAggregate {
  Eigen::MatrixXd eps;      // m x n matrix of eps_rk
  double delta_mean = 0.0;  // (1/mn) sum eps_rk
  double delta_sq = 0.0;    // (1/mn) sum eps_rk^2
  double rms = 0.0;         // sqrt(delta_sq)
  double eps_uniform = 0.0; // max eps_rk
};

inline StabilityAggregate aggregate(const Eigen::MatrixXd& eps) {
  if (eps.size() == 0) throw ShapeError("aggregate: empty eps matrix");
  if ((eps.array() < 0.0).any())
    throw ValidationError("aggregate: eps entries must be nonnegative");
  StabilityAggregate out;
  out.eps = eps;
  const double mn = static_cast<double>(eps.rows()) * static_cast<double>(eps.cols());
  out.delta_mean = eps.sum() / mn;
  out.delta_sq = eps.array().square().sum() / mn;
  out.rms = std::sqrt(out.delta_sq);
  out.eps_uniform = eps.maxCoeff();
  return out;
}

}  // namespace dsgd::stability
