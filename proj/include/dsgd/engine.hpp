// engine.hpp — the D-SGD iteration itself.
//
// One step, per node i ("gossip-then-grad", the default):
//   w^{t+1}(i) = sum_l P^t_il w^t(l) - eta_t grad f(w^t(i); Z_{j_t(i)})
// or ("grad-inside-gossip"):
//   w^{t+1}(i) = sum_l P^t_il [ w^t(l) - eta_t grad f(w^t(l); Z_{j_t(l)}) ]
// followed by an optional Euclidean projection of each node onto the
// W_max ball.
//
// Sampling is a pure function of (master_seed, role, node, step), so a
// trajectory is a pure function of its RunConfig: twin runs couple by key
// sharing, and sweeps parallelize without touching the stream.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsgd/common.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/topology.hpp"

namespace dsgd::engine {

// ── Stepsize schedules ────────────────────────────────────────────────────

enum class ScheduleKind { kConstant, kInvT, kInvTMu, kInvTBeta, kInvTGamma };

inline const char* schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kInvT: return "inv-t";
    case ScheduleKind::kInvTMu: return "inv-t-mu";
    case ScheduleKind::kInvTBeta: return "inv-t-beta";
    case ScheduleKind::kInvTGamma: return "inv-t-gamma";
  }
  return "?";
}

struct StepSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double eta = 0.0;    // constant schedule value
  double scale = 1.0;  // mu, beta or gamma for the decreasing kinds
  // For the constant schedule, which regime cap it was checked against
  // (informational; violations warn rather than fail).
  std::string cap_context;

  // eta = 0 is accepted so pure-mixing runs stay expressible; the bound
  // formulas all assume eta > 0.
  static StepSchedule constant(double eta, std::string cap_context = "") {
    if (!(eta >= 0.0)) throw ConfigError("constant schedule needs eta >= 0");
    return {ScheduleKind::kConstant, eta, 1.0, std::move(cap_context)};
  }
  static StepSchedule inv_t() { return {ScheduleKind::kInvT, 0.0, 1.0, ""}; }
  static StepSchedule inv_t_mu(double mu) {
    if (!(mu > 0.0)) throw ConfigError("inv-t-mu schedule needs mu > 0");
    return {ScheduleKind::kInvTMu, 0.0, mu, ""};
  }
  static StepSchedule inv_t_beta(double beta) {
    if (!(beta > 0.0)) throw ConfigError("inv-t-beta schedule needs beta > 0");
    return {ScheduleKind::kInvTBeta, 0.0, beta, ""};
  }
  static StepSchedule inv_t_gamma(double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("inv-t-gamma schedule needs gamma > 0");
    return {ScheduleKind::kInvTGamma, 0.0, gamma, ""};
  }

  // eta_t for t >= 1.
  double at(long t) const {
    if (t < 1) throw RangeError("schedule step must be >= 1");
    const double tp1 = static_cast<double>(t) + 1.0;
    switch (kind) {
      case ScheduleKind::kConstant: return eta;
      case ScheduleKind::kInvT: return 1.0 / tp1;
      case ScheduleKind::kInvTMu: return 2.0 / (scale * tp1);
      case ScheduleKind::kInvTBeta: return 1.0 / (scale * tp1);
      case ScheduleKind::kInvTGamma: return 2.0 / (scale * tp1);
    }
    throw ConfigError("unknown schedule kind");
  }

  double sum(long T) const {
    double acc = 0.0;
    for (long t = 1; t <= T; ++t) acc += at(t);
    return acc;
  }
};

// ── Sampling ──────────────────────────────────────────────────────────────

enum class SampleRole : std::uint64_t { kPrimary = 1, kTwinShared = 2 };

// Uniform index in [0, n), a pure function of its arguments. Coupled twin
// trajectories call this with identical keys and therefore draw identical
// indices at every (node, step).
inline int sample_index(std::uint64_t master_seed, SampleRole role, int node,
                        long step, int n) {
  if (n < 1) throw RangeError("sample_index: n must be >= 1");
  rng::Stream stream(rng::key_of(master_seed, static_cast<std::uint64_t>(role),
                                 static_cast<std::uint64_t>(node),
                                 static_cast<std::uint64_t>(step)));
  return static_cast<int>(stream.next_below(static_cast<std::uint64_t>(n)));
}

// ── Run configuration ─────────────────────────────────────────────────────

enum class UpdateOrder { kGossipThenGrad, kGradInsideGossip };

struct RunConfig {
  losses::LossModel model;
  std::shared_ptr<const losses::PartitionedDataset> dataset;
  StepSchedule schedule;
  std::shared_ptr<const topology::TopologySchedule> topology;
  long iterations = 0;  // T
  UpdateOrder order = UpdateOrder::kGossipThenGrad;
  bool projected = false;
  std::uint64_t master_seed = 1;
  SampleRole role = SampleRole::kPrimary;
  Eigen::VectorXd initial;   // empty means the zero vector
  long record_stride = 1;
  // Optional regime context; stepsize-cap violations warn, never fail.
  std::string regime;
};

// Stepsize-cap warnings for the declared regime. Experiments outside the
// regime preconditions are allowed; reports carry the flag.
inline std::vector<std::string> validate(const RunConfig& cfg) {
  if (!cfg.dataset) throw ConfigError("run config has no dataset");
  if (!cfg.topology) throw ConfigError("run config has no topology");
  if (cfg.dataset->nodes() != cfg.topology->size())
    throw ConfigError("dataset has " + std::to_string(cfg.dataset->nodes()) +
                      " nodes but topology has " + std::to_string(cfg.topology->size()));
  if (cfg.dataset->dim() != cfg.model.dim)
    throw ShapeError("dataset dim does not match model dim");
  if (cfg.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (cfg.iterations > cfg.topology->horizon())
    throw RangeError("iterations exceed topology horizon");
  if (cfg.record_stride < 1) throw ConfigError("record_stride must be >= 1");
  if (cfg.initial.size() != 0 && cfg.initial.size() != cfg.model.dim)
    throw ShapeError("initial weight dimension mismatch");
  if (cfg.projected && !(cfg.model.domain_radius > 0.0))
    throw ConfigError("projected run needs domain_radius > 0");

  std::vector<std::string> warnings;
  if (cfg.regime.empty()) return warnings;
  const auto c = losses::constants(cfg.model);
  auto warn_if = [&](bool bad, const std::string& msg) {
    if (bad) warnings.push_back(msg);
  };
  warn_if(cfg.regime == "strongly-convex" && !cfg.projected,
          "strongly-convex regime assumes the projected update; projected=false");
  warn_if((cfg.regime == "strongly-convex" || cfg.regime == "local-strongly-convex") &&
              !(c.mu > 0.0),
          "regime '" + cfg.regime + "' declared but the model has mu = 0");
  const double slack = 1e-12;
  for (long t = 1; t <= std::max<long>(cfg.iterations, 1); ++t) {
    const double eta = cfg.schedule.at(t);
    bool bad = false;
    std::string cap;
    if (cfg.regime == "convex") {
      bad = eta > 2.0 / c.beta + slack;
      cap = "2/beta";
    } else if (cfg.regime == "strongly-convex") {
      bad = eta > 1.0 / c.beta + slack;
      cap = "1/beta";
    } else if (cfg.regime == "nonconvex-opt") {
      bad = eta > 1.0 / (3.0 * c.beta) + slack;
      cap = "1/(3 beta)";
    } else if (cfg.regime == "local-convex") {
      bad = eta > 2.0 * cfg.topology->at(t).min_diagonal() / c.beta + slack;
      cap = "2 P^t_rr / beta";
    } else if (cfg.regime == "local-strongly-convex") {
      bad = eta > cfg.topology->at(t).min_diagonal() / c.beta + slack;
      cap = "P^t_rr / beta";
    } else if (cfg.regime == "nonconvex") {
      break;  // the nonconvex regime carries no cap
    } else {
      throw ConfigError("unknown regime '" + cfg.regime + "'");
    }
    if (bad) {
      warn_if(true, "eta_" + std::to_string(t) + " = " + std::to_string(eta) +
                        " violates the " + cfg.regime + " cap " + cap);
      break;  // one warning is enough
    }
    if (cfg.schedule.kind == ScheduleKind::kConstant) break;  // same every step
  }
  return warnings;
}

// ── Trajectory ────────────────────────────────────────────────────────────

struct Trajectory {
  long T = 0;
  int m = 0;
  int dim = 0;
  long stride = 1;
  // Recorded state indices t (state w^t); always contains 1 and T+1.
  std::vector<long> steps;
  std::vector<Eigen::VectorXd> avg;        // averaged weight at recorded t
  std::vector<Eigen::MatrixXd> nodes;      // m x dim node weights at recorded t
  std::vector<double> consensus;           // measured consensus error at recorded t
  std::vector<std::vector<int>> indices;   // j_t(i) for recorded update steps t <= T
  double max_grad_norm = 0.0;              // observed sup ||grad f|| along the run
  std::vector<std::string> warnings;

  const Eigen::VectorXd& final_avg() const { return avg.back(); }
  const Eigen::MatrixXd& final_nodes() const { return nodes.back(); }
};

inline double consensus_error(const Eigen::MatrixXd& W) {
  const Eigen::RowVectorXd mean = W.colwise().mean();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    acc += (W.row(i) - mean).squaredNorm();
  return std::sqrt(acc);
}

// Closed-form consensus envelope: 2 sqrt(m) L sum_{q=1}^{t} eta_q lambda^{t-q},
// bounding the consensus error of the state w^{t+1}.
inline double consensus_bound(long t, const StepSchedule& schedule, double lambda,
                              double L, int m) {
  if (t < 1) throw RangeError("consensus_bound: t >= 1");
  double geo = 0.0;  // sum eta_q lambda^{t-q}, built backwards
  for (long q = 1; q <= t; ++q) geo = lambda * geo + schedule.at(q);
  return 2.0 * std::sqrt(static_cast<double>(m)) * L * geo;
}

// ── The iteration ─────────────────────────────────────────────────────────

class Runner {
 public:
  explicit Runner(RunConfig cfg) : cfg_(std::move(cfg)) {
    warnings_ = validate(cfg_);
    const int m = cfg_.dataset->nodes();
    const int dim = cfg_.model.dim;
    Eigen::VectorXd w1 = cfg_.initial.size() ? cfg_.initial
                                             : Eigen::VectorXd::Zero(dim);
    W_ = w1.transpose().replicate(m, 1);  // all nodes share w^1
    monitor_domain_ = !cfg_.projected &&
                      (cfg_.model.family == losses::Family::kQuadratic ||
                       cfg_.model.family == losses::Family::kRidgeLogistic);
  }

  long t() const { return t_; }  // state index: weights() is w^t
  const Eigen::MatrixXd& weights() const { return W_; }
  Eigen::VectorXd average() const {
    return W_.colwise().mean().transpose();
  }
  const std::vector<int>& last_indices() const { return j_; }
  double max_grad_norm() const { return max_grad_norm_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const RunConfig& config() const { return cfg_; }

  // Advances w^t -> w^{t+1} using eta_t and P^t.
  void step() {
    const long t = t_;
    const auto& ds = *cfg_.dataset;
    const int m = ds.nodes();
    const double eta = cfg_.schedule.at(t);
    const Eigen::MatrixXd& P = cfg_.topology->at(t).entries();

    j_.resize(static_cast<std::size_t>(m));
    Eigen::MatrixXd G(m, cfg_.model.dim);
    for (int i = 0; i < m; ++i) {
      j_[static_cast<std::size_t>(i)] = sample_index(cfg_.master_seed, cfg_.role,
                                                     i, t, ds.per_node());
      const Eigen::VectorXd g = losses::loss_grad(
          cfg_.model, W_.row(i).transpose(), ds.at(i, j_[static_cast<std::size_t>(i)]));
      max_grad_norm_ = std::max(max_grad_norm_, g.norm());
      G.row(i) = g.transpose();
    }

    const Eigen::VectorXd prev_mean = average();
    Eigen::MatrixXd next;
    if (cfg_.order == UpdateOrder::kGossipThenGrad) {
      next = P * W_ - eta * G;
    } else {
      next = P * (W_ - eta * G);
    }
    if (!next.allFinite())
      throw NumericsError("non-finite weight at step " + std::to_string(t));

    // Gossip preserves the average: w-bar^{t+1} = w-bar^t - (eta/m) sum_i g_i
    // (for grad-inside-gossip the gradient index is relabeled under the same sum).
    const Eigen::VectorXd expect =
        prev_mean - (eta / m) * G.colwise().sum().transpose();
    const Eigen::VectorXd got = next.colwise().mean().transpose();
    if ((got - expect).norm() > 1e-12 * std::max(1.0, prev_mean.norm()))
      throw NumericsError("averaged-weight identity violated at step " +
                          std::to_string(t));

    if (cfg_.projected) {
      for (int i = 0; i < m; ++i)
        next.row(i) = losses::project(next.row(i).transpose(),
                                      cfg_.model.domain_radius).transpose();
    } else if (monitor_domain_ && cfg_.model.domain_radius > 0.0) {
      for (int i = 0; i < m; ++i) {
        if (next.row(i).norm() > cfg_.model.domain_radius)
          throw DomainExitError(
              "node " + std::to_string(i) + " left the W_max ball at step " +
              std::to_string(t) + "; Lipschitz constants no longer certified");
      }
    }
    W_ = std::move(next);
    ++t_;
  }

 private:
  RunConfig cfg_;
  Eigen::MatrixXd W_;
  std::vector<int> j_;
  long t_ = 1;
  double max_grad_norm_ = 0.0;
  bool monitor_domain_ = false;
  std::vector<std::string> warnings_;
};

inline Trajectory run(const RunConfig& cfg) {
  Runner runner(cfg);
  Trajectory out;
  out.T = cfg.iterations;
  out.m = cfg.dataset->nodes();
  out.dim = cfg.model.dim;
  out.stride = cfg.record_stride;
  out.warnings = runner.warnings();

  auto record_state = [&](long t) {
    out.steps.push_back(t);
    out.avg.push_back(runner.average());
    out.nodes.push_back(runner.weights());
    out.consensus.push_back(consensus_error(runner.weights()));
  };
  record_state(1);
  for (long t = 1; t <= cfg.iterations; ++t) {
    runner.step();
    if (t % cfg.record_stride == 0 || t == cfg.iterations) {
      out.indices.push_back(runner.last_indices());
      record_state(t + 1);
    }
  }
  out.max_grad_norm = runner.max_grad_norm();
  return out;
}

// Stepsize-weighted average of the recorded averaged weights:
//   w-bar^{T+1} = sum_{t=1}^{T+1} eta_t w^t / sum eta_t.
inline Eigen::VectorXd average_iterate(const Trajectory& traj,
                                       const StepSchedule& schedule) {
  if (traj.stride != 1)
    throw InsufficientTraceError("average_iterate needs record_stride 1");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(traj.dim);
  double total = 0.0;
  for (std::size_t idx = 0; idx < traj.steps.size(); ++idx) {
    const double eta = schedule.at(traj.steps[idx]);
    acc += eta * traj.avg[idx];
    total += eta;
  }
  return acc / total;
}

}  // namespace dsgd::engine
