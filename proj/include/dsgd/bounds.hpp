// bounds.hpp — closed-form stability / generalization / optimization bounds.
//
// Conventions shared by every formula here:
//   * steps are 1-based; schedules supply eta_t;
//   * the consensus weight s_t = sum_{q=1}^{t-1} eta_q lambda^{t-q-1} uses
//     0^0 := 1 (the q = t-1 term survives at lambda = 0), matching the
//     geometric-series limits in the constant-step corollaries;
//   * per-step recursion factors are
//       convex           a_t = 1
//       strongly convex  a_t = 1 - eta_t mu / 2
//       nonconvex        a_t = 1 + beta eta_t
//   * an indicator hit at step t contributes (2 eta_t L / m);
//   * quantities prone to overflow, (1 + beta eta)^T and (T+1)^beta, are
//     evaluated in the log domain and flagged when not representable.
//
// C_lambda = 1/(lambda log(1/lambda)) (8/(e^2 log(1/lambda)) + 2) is the
// summation-lemma constant; it is singular at lambda = 0, where the exact
// sum sum_{q<t} lambda^{t-1-q}/(q+1) collapses to 1/t and the limit
// constant 1 is used instead.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dsgd/common.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/topology.hpp"

namespace dsgd::bounds {

enum class Regime { kConvex, kStronglyConvex, kNonconvex };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kConvex: return "convex";
    case Regime::kStronglyConvex: return "strongly-convex";
    case Regime::kNonconvex: return "nonconvex";
  }
  return "?";
}

struct BoundParams {
  double L = 0, beta = 0, mu = 0, gamma = 0, M = 0, sigma = 0;
  int m = 1, n = 1;
  long T = 0;
  double lambda = 0.0;
  engine::StepSchedule schedule = engine::StepSchedule::constant(1.0);
  double delta_conf = 0.1;

  double mn() const { return static_cast<double>(m) * static_cast<double>(n); }
  void check() const {
    if (!(L > 0) || !(beta > 0)) throw ConfigError("bounds need L > 0, beta > 0");
    if (m < 1 || n < 1 || T < 0) throw ConfigError("bounds need m, n >= 1, T >= 0");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ConfigError("bounds need lambda in [0,1)");
    if (!(delta_conf > 0.0 && delta_conf < 1.0))
      throw ConfigError("bounds need delta_conf in (0,1)");
  }
};

// ── C_lambda ──────────────────────────────────────────────────────────────

inline double c_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw DomainError("c_lambda is defined for 0 < lambda < 1");
  const double lg = std::log(1.0 / lambda);
  const double e2 = std::exp(2.0);
  return (8.0 / (e2 * lg) + 2.0) / (lambda * lg);
}

// Limit constant for the decreasing-step forms: exact value of
// t * sum_{q<t} lambda^{t-1-q}/(q+1) at lambda = 0.
inline double c_lambda_or_limit(double lambda) {
  return lambda == 0.0 ? 1.0 : c_lambda(lambda);
}

// ── Shared recursion machinery ────────────────────────────────────────────

namespace detail {

inline double contraction(Regime regime, double eta, const BoundParams& p) {
  switch (regime) {
    case Regime::kConvex: return 1.0;
    case Regime::kStronglyConvex: return 1.0 - eta * p.mu / 2.0;
    case Regime::kNonconvex: return 1.0 + p.beta * eta;
  }
  return 1.0;
}

}  // namespace detail

// Per-step envelope: the exact solution of the regime's divergence
// recursion on a given indicator-hit pattern. e[t-1] holds e_t for
// t = 1..T+1 with e_1 = 0; a coupled twin run must satisfy d_t <= e_t.
inline std::vector<double> per_step_envelope(Regime regime, const BoundParams& p,
                                             const std::vector<long>& hits) {
  p.check();
  std::vector<double> e(static_cast<std::size_t>(p.T) + 1, 0.0);
  std::vector<char> hit(static_cast<std::size_t>(p.T) + 1, 0);
  for (long h : hits) {
    if (h < 1 || h > p.T) throw RangeError("envelope hit outside [1, T]");
    hit[static_cast<std::size_t>(h)] = 1;
  }
  double s = 0.0;  // s_t = sum_{q=1}^{t-1} eta_q lambda^{t-1-q}
  for (long t = 1; t <= p.T; ++t) {
    const double eta = p.schedule.at(t);
    const double a = detail::contraction(regime, eta, p);
    e[static_cast<std::size_t>(t)] =
        a * e[static_cast<std::size_t>(t - 1)] + 4.0 * eta * p.beta * p.L * s +
        (hit[static_cast<std::size_t>(t)] ? 2.0 * eta * p.L / p.m : 0.0);
    s = p.lambda * s + eta;
  }
  return e;
}

// Per-pair epsilon_rk from the general-form expression, exact partial sums:
//   2 L^2 sum_t [ 2 beta eta_t s_t + (eta_t/m) I_t ] prod_{s>t} a_s.
// This is L times the terminal envelope value on the same hit pattern.
inline double exact_eps(Regime regime, const BoundParams& p,
                          const std::vector<long>& hits) {
  const std::vector<double> e = per_step_envelope(regime, p, hits);
  return p.L * e.back();
}

// Expectation-form general Delta_rk: indicator terms collapse via
// sum_k I[j_t = k] = 1, i.e. each step contributes (eta_t / mn):
//   4 beta L^2 sum_t eta_t s_t prod_{s>t} a_s
//     + (2 L^2 / mn) sum_t eta_t prod_{s>t} a_s.
inline double exact_delta(Regime regime, const BoundParams& p) {
  p.check();
  // tail_t = prod_{s=t+1}^{T} a_s, built backwards.
  std::vector<double> tail(static_cast<std::size_t>(p.T) + 2, 1.0);
  for (long t = p.T; t >= 1; --t)
    tail[static_cast<std::size_t>(t)] =
        tail[static_cast<std::size_t>(t + 1)] *
        detail::contraction(regime, p.schedule.at(t), p);
  double consensus = 0.0, sampling = 0.0, s = 0.0;
  for (long t = 1; t <= p.T; ++t) {
    const double eta = p.schedule.at(t);
    consensus += eta * s * tail[static_cast<std::size_t>(t + 1)];
    sampling += eta * tail[static_cast<std::size_t>(t + 1)];
    s = p.lambda * s + eta;
  }
  return 4.0 * p.beta * p.L * p.L * consensus +
         2.0 * p.L * p.L / p.mn() * sampling;
}

// Delta^2_rk realized on a full (r, k) sweep's hit patterns.
inline double exact_delta_sq(Regime regime, const BoundParams& p,
                               const std::vector<std::vector<long>>& hits_per_pair) {
  if (hits_per_pair.size() != static_cast<std::size_t>(p.m) * static_cast<std::size_t>(p.n))
    throw ShapeError("exact_delta_sq: need one hit list per (r, k) pair");
  double acc = 0.0;
  for (const auto& hits : hits_per_pair) {
    const double eps = exact_eps(regime, p, hits);
    acc += eps * eps;
  }
  return acc / p.mn();
}

// ── Guarded exponentials ──────────────────────────────────────────────────

struct GuardedValue {
  double value = 0.0;      // inf when overflowed
  double log_value = 0.0;  // natural log, always finite
  bool overflowed = false;
};

inline GuardedValue guarded_exp(double log_value) {
  GuardedValue g;
  g.log_value = log_value;
  if (log_value >= std::log(std::numeric_limits<double>::max()) - 1.0) {
    g.value = std::numeric_limits<double>::infinity();
    g.overflowed = true;
  } else {
    g.value = std::exp(log_value);
  }
  return g;
}

// ── Schedule-specialized closed forms ─────────────────────────────────────

struct ClosedForm {
  double value = 0.0;
  double log_value = 0.0;
  bool overflowed = false;
  bool precondition_met = true;
  std::string formula;
};

namespace detail {
inline void require_constant(const BoundParams& p, const char* who) {
  if (p.schedule.kind != engine::ScheduleKind::kConstant)
    throw ConfigError(std::string(who) + ": constant-stepsize form");
}
inline double eta_of(const BoundParams& p) { return p.schedule.at(1); }
}  // namespace detail

// Convex, constant stepsize: Delta_rk = 2 L^2 eta T (2 eta beta/(1-lambda) + 1/mn).
inline ClosedForm convex_delta_constant(const BoundParams& p) {
  p.check();
  detail::require_constant(p, "convex_delta_constant");
  const double eta = detail::eta_of(p);
  ClosedForm out;
  out.value = 2.0 * p.L * p.L * eta * static_cast<double>(p.T) *
              (2.0 * eta * p.beta / (1.0 - p.lambda) + 1.0 / p.mn());
  out.log_value = std::log(out.value);
  out.precondition_met = eta <= 2.0 / p.beta + 1e-12;
  out.formula = "2 L^2 eta T (2 eta beta/(1-lambda) + 1/(mn))";
  return out;
}

// Convex, eta_t = 1/(t+1). The tight derivation keeps C_lambda in the
// consensus term; a simplified statement of the same bound drops it. The
// C_lambda form is the default, the simplified one sits behind the flag.
inline ClosedForm convex_delta_decreasing(const BoundParams& p,
                                          bool main_text_variant = false) {
  p.check();
  if (p.schedule.kind != engine::ScheduleKind::kInvT)
    throw ConfigError("convex_delta_decreasing: needs the 1/(t+1) schedule");
  const double c = main_text_variant ? 1.0 : c_lambda_or_limit(p.lambda);
  const double Td = static_cast<double>(p.T);
  ClosedForm out;
  out.value = 2.0 * p.L * p.L *
              (2.0 * p.beta * c * Td / (Td + 1.0) + std::log(Td + 1.0) / p.mn());
  out.log_value = std::log(out.value);
  out.formula = main_text_variant
                    ? "2 L^2 (2 beta T/(T+1) + ln(T+1)/(mn))  [main-text variant]"
                    : "2 L^2 (2 beta C_lambda T/(T+1) + ln(T+1)/(mn))";
  return out;
}

// Average-weight proposition, constant: 2 L^2 eta T (eta beta/(1-lambda) + 1/mn).
inline ClosedForm avg_weight_delta_constant(const BoundParams& p) {
  p.check();
  detail::require_constant(p, "avg_weight_delta_constant");
  const double eta = detail::eta_of(p);
  ClosedForm out;
  out.value = 2.0 * p.L * p.L * eta * static_cast<double>(p.T) *
              (eta * p.beta / (1.0 - p.lambda) + 1.0 / p.mn());
  out.log_value = std::log(out.value);
  out.precondition_met = eta <= 2.0 / p.beta + 1e-12;
  out.formula = "2 L^2 eta T (eta beta/(1-lambda) + 1/(mn))";
  return out;
}

// Average-weight proposition, eta_t = 1/(t+1):
//   4 L^2 beta C_lambda + L^2 ln(T+2) / mn.
inline ClosedForm avg_weight_delta_decreasing(const BoundParams& p) {
  p.check();
  if (p.schedule.kind != engine::ScheduleKind::kInvT)
    throw ConfigError("avg_weight_delta_decreasing: needs the 1/(t+1) schedule");
  ClosedForm out;
  out.value = 4.0 * p.L * p.L * p.beta * c_lambda_or_limit(p.lambda) +
              p.L * p.L * std::log(static_cast<double>(p.T) + 2.0) / p.mn();
  out.log_value = std::log(out.value);
  out.formula = "4 L^2 beta C_lambda + L^2 ln(T+2)/(mn)";
  return out;
}

// Strongly convex, constant: (4 L^2 / mu)(2 eta beta/(1-lambda) + 1/mn);
// independent of T.
inline ClosedForm strongly_convex_delta_constant(const BoundParams& p) {
  p.check();
  detail::require_constant(p, "strongly_convex_delta_constant");
  if (!(p.mu > 0.0)) throw ConfigError("strongly convex form needs mu > 0");
  const double eta = detail::eta_of(p);
  ClosedForm out;
  out.value = 4.0 * p.L * p.L / p.mu *
              (2.0 * eta * p.beta / (1.0 - p.lambda) + 1.0 / p.mn());
  out.log_value = std::log(out.value);
  out.precondition_met = eta <= 1.0 / p.beta + 1e-12;
  out.formula = "(4 L^2/mu)(2 eta beta/(1-lambda) + 1/(mn))";
  return out;
}

// Strongly convex, eta_t = 2/(mu (t+1)):
//   (16 beta L^2 C_lambda / (T mu^2)) (ln T + 1) + 4 L^2 / (mu mn).
inline ClosedForm strongly_convex_delta_decreasing(const BoundParams& p) {
  p.check();
  if (p.schedule.kind != engine::ScheduleKind::kInvTMu)
    throw ConfigError("strongly_convex_delta_decreasing: needs eta_t = 2/(mu(t+1))");
  if (!(p.mu > 0.0) || p.T < 1) throw ConfigError("needs mu > 0 and T >= 1");
  const double Td = static_cast<double>(p.T);
  ClosedForm out;
  out.value = 16.0 * p.beta * p.L * p.L * c_lambda_or_limit(p.lambda) /
                  (Td * p.mu * p.mu) * (std::log(Td) + 1.0) +
              4.0 * p.L * p.L / (p.mu * p.mn());
  out.log_value = std::log(out.value);
  out.formula = "(16 beta L^2 C_lambda/(T mu^2))(ln T + 1) + 4 L^2/(mu mn)";
  return out;
}

// Nonconvex, constant: 2 L^2 (2 eta/(1-lambda) + 1/(mn beta)) (1+beta eta)^T.
inline ClosedForm nonconvex_delta_constant(const BoundParams& p) {
  p.check();
  detail::require_constant(p, "nonconvex_delta_constant");
  const double eta = detail::eta_of(p);
  const double base = 2.0 * p.L * p.L *
                      (2.0 * eta / (1.0 - p.lambda) + 1.0 / (p.mn() * p.beta));
  const GuardedValue pow = guarded_exp(std::log(base) +
                                       static_cast<double>(p.T) * std::log1p(p.beta * eta));
  ClosedForm out;
  out.value = pow.value;
  out.log_value = pow.log_value;
  out.overflowed = pow.overflowed;
  out.formula = "2 L^2 (2 eta/(1-lambda) + 1/(mn beta)) (1+beta eta)^T";
  return out;
}

// Nonconvex, eta_t = 1/(t+1): 4 L^2 (T+1)^beta (4 C_lambda + 1/(beta mn)).
inline ClosedForm nonconvex_delta_decreasing(const BoundParams& p) {
  p.check();
  if (p.schedule.kind != engine::ScheduleKind::kInvT)
    throw ConfigError("nonconvex_delta_decreasing: needs the 1/(t+1) schedule");
  const double base = 4.0 * p.L * p.L *
                      (4.0 * c_lambda_or_limit(p.lambda) + 1.0 / (p.beta * p.mn()));
  const GuardedValue pow = guarded_exp(
      std::log(base) + p.beta * std::log(static_cast<double>(p.T) + 1.0));
  ClosedForm out;
  out.value = pow.value;
  out.log_value = pow.log_value;
  out.overflowed = pow.overflowed;
  out.formula = "4 L^2 (T+1)^beta (4 C_lambda + 1/(beta mn))";
  return out;
}

// Nonconvex, the eta_t = 1/(beta (t+1)) variant:
//   4 L^2 (T+1) (2 C_lambda + 1/(beta mn)).
inline ClosedForm nonconvex_delta_decreasing_beta(const BoundParams& p) {
  p.check();
  if (p.schedule.kind != engine::ScheduleKind::kInvTBeta)
    throw ConfigError("nonconvex_delta_decreasing_beta: needs eta_t = 1/(beta(t+1))");
  ClosedForm out;
  out.value = 4.0 * p.L * p.L * (static_cast<double>(p.T) + 1.0) *
              (2.0 * c_lambda_or_limit(p.lambda) + 1.0 / (p.beta * p.mn()));
  out.log_value = std::log(out.value);
  out.formula = "4 L^2 (T+1)(2 C_lambda + 1/(beta mn))";
  return out;
}

// ── Generalization-bound shape (unit universal constant) ─────────────────

struct GeneralizationBound {
  double sampling_term = 0.0;   // M log^{1/2}(1/delta) / sqrt(mn)
  double stability_term = 0.0;  // rms log(mn) log(1/delta)
  double total = 0.0;
  const char* constant = "unit (shape only)";
};

inline GeneralizationBound generalization_bound(double M, long mn, double delta_conf,
                                                double delta_sq_rms) {
  if (mn < 2) throw ConfigError("generalization_bound: mn >= 2");
  if (!(delta_conf > 0.0 && delta_conf < 1.0))
    throw ConfigError("generalization_bound: delta in (0,1)");
  GeneralizationBound g;
  const double log_inv_delta = std::log(1.0 / delta_conf);
  g.sampling_term = M * std::sqrt(log_inv_delta) / std::sqrt(static_cast<double>(mn));
  g.stability_term = delta_sq_rms * std::log(static_cast<double>(mn)) * log_inv_delta;
  g.total = g.sampling_term + g.stability_term;
  return g;
}

// Components of the convex-regime generalization envelope on
// [Delta^2]^{1/2} at constant stepsize:
//   4 sqrt(2) L^2 eta^2 beta T / (1-lambda)
//     + (2 sqrt(2) L^2 eta / m) ((1/(mn)) sum_{r,k} (sum_t I)^2)^{1/2}.
struct RmsEnvelope {
  double consensus_term = 0.0;
  double sampling_term = 0.0;
  double total = 0.0;
};

inline RmsEnvelope gen_convex_rms_components(const BoundParams& p,
                                             const Eigen::MatrixXd& hit_counts) {
  p.check();
  detail::require_constant(p, "gen_convex_rms_components");
  const double eta = detail::eta_of(p);
  RmsEnvelope out;
  out.consensus_term = 4.0 * std::sqrt(2.0) * p.L * p.L * eta * eta * p.beta *
                       static_cast<double>(p.T) / (1.0 - p.lambda);
  const double mean_sq = hit_counts.array().square().sum() /
                         static_cast<double>(hit_counts.size());
  out.sampling_term = 2.0 * std::sqrt(2.0) * p.L * p.L * eta / p.m * std::sqrt(mean_sq);
  out.total = out.consensus_term + out.sampling_term;
  return out;
}

// ── Uniform stability comparisons ─────────────────────────────────────────

// Expected-form uniform bound at constant stepsize:
//   2 L^2 (2 eta^2 beta T/(1-lambda) + eta T/(mn)).
inline double uniform_eps_expected_constant(const BoundParams& p) {
  p.check();
  detail::require_constant(p, "uniform_eps_expected_constant");
  const double eta = detail::eta_of(p);
  return 2.0 * p.L * p.L *
         (2.0 * eta * eta * p.beta * static_cast<double>(p.T) / (1.0 - p.lambda) +
          eta * static_cast<double>(p.T) / p.mn());
}

// Realized-max uniform form on a sweep's hit patterns:
//   4 beta L^2 sum_t eta_t s_t + (2 L^2 / m) max_{r,k} sum_{t in hits} eta_t.
inline double uniform_eps_realized(const BoundParams& p,
                                   const std::vector<std::vector<long>>& hits_per_pair) {
  p.check();
  double consensus = 0.0, s = 0.0;
  for (long t = 1; t <= p.T; ++t) {
    const double eta = p.schedule.at(t);
    consensus += eta * s;
    s = p.lambda * s + eta;
  }
  double max_hit_weight = 0.0;
  for (const auto& hits : hits_per_pair) {
    double acc = 0.0;
    for (long t : hits) acc += p.schedule.at(t);
    max_hit_weight = std::max(max_hit_weight, acc);
  }
  return 4.0 * p.beta * p.L * p.L * consensus +
         2.0 * p.L * p.L / p.m * max_hit_weight;
}

struct OrderingReport {
  double rms = 0.0;
  double eps_uniform_measured = 0.0;
  bool rms_le_uniform = false;
};

inline OrderingReport compare_pointwise_uniform(double rms, double eps_uniform) {
  return {rms, eps_uniform, rms <= eps_uniform};
}

// ── High-probability optimization error ───────────────────────────────────

// Right-hand side of the constant-stepsize optimization bound; controls
// (eta/3) sum_{t=1}^{T+1} ||grad R_S(w^t)||^2 with probability >= 1-delta.
struct OptRhs {
  std::array<double, 6> terms{};
  double total = 0.0;
  double mean_suboptimality = 0.0;  // total / ((4 eta gamma / 3)(T+1)); 0 if gamma = 0
  bool precondition_met = true;     // eta <= 1/(3 beta)
};

inline OptRhs opt_rhs_constant(const BoundParams& p) {
  p.check();
  detail::require_constant(p, "opt_rhs_constant");
  const double eta = detail::eta_of(p);
  const double Tp1 = static_cast<double>(p.T) + 1.0;
  const double log_term = std::log(2.0 / p.delta_conf);
  const double L2 = p.L * p.L;
  OptRhs out;
  out.terms[0] = 2.0 * log_term * std::max(eta * L2, p.sigma * p.sigma / p.beta);
  out.terms[1] = 1.5 * p.beta * L2 * Tp1 * std::pow(eta, 4);
  out.terms[2] = 1.5 * p.beta * p.sigma * p.sigma * Tp1 * eta * eta;
  out.terms[3] = 12.0 * L2 * p.beta * log_term;
  out.terms[4] = 6.0 * std::pow(p.beta, 3) * L2 * Tp1 * std::pow(eta, 4) /
                 ((1.0 - p.lambda) * (1.0 - p.lambda));
  out.terms[5] = 2.0 * p.beta * L2 * eta * eta * Tp1 / (1.0 - p.lambda);
  for (double term : out.terms) out.total += term;
  out.precondition_met = eta <= 1.0 / (3.0 * p.beta) + 1e-12;
  if (p.gamma > 0.0)
    out.mean_suboptimality = out.total / (4.0 * eta * p.gamma / 3.0 * Tp1);
  return out;
}

// ── Local-model bounds ────────────────────────────────────────────────────

// Per-pair:  2 L^2 sum_t Q^{T:t}_rr eta_t I[t in hits]
// Mean-over-k: (2 L^2 / n) sum_t Q^{T:t}_rr eta_t
// with Q the regime's (shifted) per-step matrix and Q^{T:t} = Q^T ... Q^t.
struct LocalBound {
  double per_pair = 0.0;
  double mean_over_k = 0.0;
  bool precondition_met = true;
  std::vector<double> chain_rr;  // Q^{T:t}_rr for t = 1..T
};

inline LocalBound local_bound(Regime regime, const topology::TopologySchedule& schedule,
                              const BoundParams& p, int node_r,
                              const std::vector<long>& hits) {
  p.check();
  if (node_r < 0 || node_r >= schedule.size())
    throw RangeError("local_bound: node index out of range");
  if (p.T < 1) throw ConfigError("local_bound: T >= 1");

  auto step_matrix = [&](long t) -> Eigen::MatrixXd {
    const topology::GossipMatrix& P = schedule.at(t);
    const double eta = p.schedule.at(t);
    switch (regime) {
      case Regime::kConvex: return P.entries();
      case Regime::kStronglyConvex:
        return topology::shifted_strongly_convex(P, eta, p.mu);
      case Regime::kNonconvex:
        return topology::shifted_nonconvex(P, eta, p.beta, node_r);
    }
    throw ConfigError("unknown regime");
  };

  LocalBound out;
  out.chain_rr.assign(static_cast<std::size_t>(p.T), 0.0);
  Eigen::MatrixXd chain = step_matrix(p.T);  // Q^{T:T}
  out.chain_rr[static_cast<std::size_t>(p.T - 1)] = chain(node_r, node_r);
  for (long t = p.T - 1; t >= 1; --t) {
    chain = chain * step_matrix(t);  // Q^{T:t} = Q^{T:t+1} Q^t
    out.chain_rr[static_cast<std::size_t>(t - 1)] = chain(node_r, node_r);
  }

  for (long t = 1; t <= p.T; ++t) {
    const double eta = p.schedule.at(t);
    const double rr = schedule.at(t).entries()(node_r, node_r);
    if (regime == Regime::kConvex && eta > 2.0 * rr / p.beta + 1e-12)
      out.precondition_met = false;
    if (regime == Regime::kStronglyConvex && eta > rr / p.beta + 1e-12)
      out.precondition_met = false;
    out.mean_over_k += out.chain_rr[static_cast<std::size_t>(t - 1)] * eta;
  }
  out.mean_over_k *= 2.0 * p.L * p.L / p.n;
  for (long t : hits) {
    if (t < 1 || t > p.T) throw RangeError("local_bound: hit outside [1, T]");
    out.per_pair += out.chain_rr[static_cast<std::size_t>(t - 1)] * p.schedule.at(t);
  }
  out.per_pair *= 2.0 * p.L * p.L;
  return out;
}

}  // namespace dsgd::bounds
