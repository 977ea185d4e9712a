// verify.hpp — the acceptance suite.
//
// Fifteen criteria, each a self-contained check of a closed form or of a
// simulated quantity against its bound, run at fixed tolerances and seeds.
// Every criterion reports a metrics payload that is a pure function of the
// suite's configuration; criterion 14 replays the whole payload at
// --jobs 1 (twice) and --jobs 8 and demands byte-identical bytes.
//
// Oracle code here (the Jacobi eigensolver, brute-force sums, Monte Carlo
// estimates) is deliberately independent of the library implementations it
// checks.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/common.hpp"
#include "dsgd/data.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/report.hpp"
#include "dsgd/stability.hpp"
#include "dsgd/topology.hpp"

namespace dsgd::harness {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
  json metrics;
};

namespace verify_detail {

using losses::Family;
using losses::make_model;
using losses::PartitionedDataset;
using losses::Sample;

inline std::uint64_t seed_of(int criterion, std::uint64_t a, std::uint64_t b = 0) {
  return rng::key_of(0xd5bdULL + static_cast<std::uint64_t>(criterion), a, b);
}

// Jacobi-sweep eigenvalue oracle (independent of Eigen's solver).
inline double jacobi_lambda(Eigen::MatrixXd A) {
  const auto n = A.rows();
  if (n == 1) return 0.0;
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (std::sqrt(2.0 * off) < 1e-13) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
        J(p, p) = c;
        J(q, q) = c;
        J(p, q) = s;
        J(q, p) = -s;
        A = J.transpose() * A * J;
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = A(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<double>());
  return std::max(std::abs(ev[1]), std::abs(ev.back()));
}

inline Eigen::VectorXd ball_point(rng::Stream& stream, int dim, double radius) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = stream.next_gaussian();
  const double r = radius * std::pow(stream.next_double(), 1.0 / dim);
  const double nrm = v.norm();
  if (nrm > 0) v *= r / nrm;
  return v;
}

inline Sample ball_sample(rng::Stream& stream, int dim, double B) {
  Sample z;
  z.x = ball_point(stream, dim, B);
  z.y = stream.next_double() < 0.5 ? -1.0 : 1.0;
  return z;
}

// Empirical gradient norm and the exact sampling variance in one pass.
struct RiskStats {
  double grad_norm_sq = 0.0;
  double variance = 0.0;
};

inline RiskStats risk_stats(const losses::LossModel& model,
                            const PartitionedDataset& ds, const Eigen::VectorXd& w) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(w.size());
  double var_acc = 0.0;
  for (int i = 0; i < ds.nodes(); ++i) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(w.size());
    double sq = 0.0;
    for (int k = 0; k < ds.per_node(); ++k) {
      const Eigen::VectorXd g = losses::loss_grad(model, w, ds.at(i, k));
      mean += g;
      sq += g.squaredNorm();
    }
    mean /= ds.per_node();
    sq /= ds.per_node();
    var_acc += std::max(0.0, sq - mean.squaredNorm());
    total += mean;
  }
  total /= ds.nodes();
  var_acc /= static_cast<double>(ds.nodes()) * ds.nodes();
  return {total.squaredNorm(), var_acc};
}

// Shared machinery for the stability-grid criteria 5-7 (and the ordering
// checks criterion 8 consumes).
struct GridStats {
  long sweeps = 0;
  long pairs = 0;
  long step_checks = 0;
  long envelope_violations = 0;
  long rms_gt_uniform = 0;
  long direct_gt_surrogate = 0;
  long terminal_violations = 0;  // strongly convex aggregate check only
  double max_envelope_ratio = 0.0;
};

struct GridSpec {
  losses::LossModel model;
  double eta = 0.1;
  long T = 200;
  bool projected = false;
  bounds::Regime regime = bounds::Regime::kConvex;
  bool check_terminal_closed_form = false;
  int criterion = 5;
};

inline GridStats run_stability_grid(const GridSpec& spec, int jobs) {
  GridStats stats;
  const std::vector<int> ms = {2, 4};
  const std::vector<int> ns = {8, 16};
  for (int m : ms) {
    for (int n : ns) {
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticSpec synth;
        synth.m = m;
        synth.n = n;
        synth.dim = spec.model.dim;
        synth.feature_bound = spec.model.feature_bound;
        synth.seed = seed_of(spec.criterion, static_cast<std::uint64_t>(m * 100 + n), seed);
        synth.rule = LabelRule::kSignFlip;

        engine::RunConfig cfg;
        cfg.model = spec.model;
        cfg.dataset = std::make_shared<const PartitionedDataset>(
            generate_synthetic(synth).dataset);
        cfg.schedule = engine::StepSchedule::constant(spec.eta);
        cfg.topology = std::make_shared<const topology::TopologySchedule>(
            topology::TopologySchedule::fixed(topology::ring(m)));
        cfg.iterations = spec.T;
        cfg.projected = spec.projected;
        cfg.master_seed = synth.seed;

        const auto c = losses::constants(spec.model);
        bounds::BoundParams p;
        p.L = c.L;
        p.beta = c.beta;
        p.mu = c.mu;
        p.m = m;
        p.n = n;
        p.T = spec.T;
        p.lambda = cfg.topology->at(1).lambda();
        p.schedule = cfg.schedule;

        const std::size_t pairs = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
        std::vector<stability::StabilityTrace> traces(pairs);
        parallel_for(jobs, pairs, [&](std::size_t idx) {
          const int r = static_cast<int>(idx) / n + 1;
          const int k = static_cast<int>(idx) % n + 1;
          traces[idx] = stability::twin_run(cfg, {r, k}, fresh_replacement(synth, r, k));
        });

        Eigen::MatrixXd eps(m, n);
        ++stats.sweeps;
        for (std::size_t idx = 0; idx < pairs; ++idx) {
          const auto& trace = traces[idx];
          ++stats.pairs;
          const auto envelope = bounds::per_step_envelope(spec.regime, p, trace.hits);
          for (std::size_t i = 0; i < trace.d.size(); ++i) {
            ++stats.step_checks;
            if (trace.d[i] > envelope[i] + 1e-9) ++stats.envelope_violations;
            if (envelope[i] > 0.0)
              stats.max_envelope_ratio =
                  std::max(stats.max_envelope_ratio, trace.d[i] / envelope[i]);
          }
          if (trace.eps.direct > trace.eps.surrogate + 1e-9) ++stats.direct_gt_surrogate;
          eps(static_cast<int>(idx) / n, static_cast<int>(idx) % n) = trace.eps.surrogate;
        }
        const auto agg = stability::aggregate(eps);
        if (agg.rms > agg.eps_uniform) ++stats.rms_gt_uniform;
        if (spec.check_terminal_closed_form) {
          const double closed = bounds::strongly_convex_delta_constant(p).value;
          if (agg.delta_mean > closed + 1e-9) ++stats.terminal_violations;
        }
      }
    }
  }
  return stats;
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

template <typename Fn>
CriterionResult timed(int id, const std::string& name, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult result;
  result.id = id;
  result.name = name;
  body(result);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace verify_detail

// ── Criteria ──────────────────────────────────────────────────────────────

// 1. Topology spectra against the Jacobi oracle.
inline CriterionResult criterion_01_topology(int) {
  using namespace verify_detail;
  return timed(1, "topology spectra", [&](CriterionResult& r) {
    double worst_complete = 0.0;
    for (int m : {2, 4, 8}) {
      const auto P = topology::complete(m);
      worst_complete = std::max(worst_complete, P.lambda());
      worst_complete = std::max(worst_complete, jacobi_lambda(P.entries()));
    }
    const auto ring4 = topology::ring(4);
    const double lib_gap = std::abs(ring4.lambda() - 1.0 / 3.0);
    const double oracle_gap = std::abs(jacobi_lambda(ring4.entries()) - 1.0 / 3.0);
    r.pass = worst_complete <= 1e-12 && lib_gap <= 1e-12 && oracle_gap <= 1e-12;
    r.metrics["complete_lambda_max"] = worst_complete;
    r.metrics["ring4_lambda_error"] = lib_gap;
    r.metrics["ring4_oracle_error"] = oracle_gap;
    std::ostringstream oss;
    oss << "complete lambda <= " << worst_complete << ", ring(4) err " << lib_gap;
    r.detail = oss.str();
  });
}

// 2. Non-expansive operator lemma on 10^4 random pairs per family.
inline CriterionResult criterion_02_nonexpansive(int) {
  using namespace verify_detail;
  return timed(2, "non-expansive operator lemma", [&](CriterionResult& r) {
    long violations = 0;
    const long pairs = 10000;
    const std::vector<losses::LossModel> convex = {
        make_model(Family::kLogistic, 3, 2.0, 1.0),
        make_model(Family::kRidgeLogistic, 3, 2.0, 1.0, 0.5),
        make_model(Family::kQuadratic, 1, 2.0, 1.0, 1.0),
    };
    for (const auto& model : convex) {
      const auto c = losses::constants(model);
      const double eta = 2.0 / c.beta;
      rng::Stream stream(seed_of(2, static_cast<std::uint64_t>(model.family)));
      for (long i = 0; i < pairs; ++i) {
        const Sample z = model.family == Family::kQuadratic
                             ? Sample{Eigen::VectorXd::Ones(1), 2 * stream.next_double() - 1}
                             : ball_sample(stream, model.dim, model.feature_bound);
        const auto w = ball_point(stream, model.dim, model.domain_radius);
        const auto u = ball_point(stream, model.dim, model.domain_radius);
        const double after = (w - eta * losses::loss_grad(model, w, z) - u +
                              eta * losses::loss_grad(model, u, z))
                                 .norm();
        if (after > (w - u).norm() + 1e-9) ++violations;
      }
    }
    const std::vector<losses::LossModel> strong = {
        make_model(Family::kRidgeLogistic, 3, 2.0, 1.0, 0.5),
        make_model(Family::kQuadratic, 1, 2.0, 1.0, 1.0),
    };
    for (const auto& model : strong) {
      const auto c = losses::constants(model);
      const double eta = 1.0 / c.beta;
      rng::Stream stream(seed_of(2, 100 + static_cast<std::uint64_t>(model.family)));
      for (long i = 0; i < pairs; ++i) {
        const Sample z = model.family == Family::kQuadratic
                             ? Sample{Eigen::VectorXd::Ones(1), 2 * stream.next_double() - 1}
                             : ball_sample(stream, model.dim, model.feature_bound);
        const auto w = ball_point(stream, model.dim, model.domain_radius);
        const auto u = ball_point(stream, model.dim, model.domain_radius);
        const double after = (w - eta * losses::loss_grad(model, w, z) - u +
                              eta * losses::loss_grad(model, u, z))
                                 .norm();
        if (after > (1.0 - eta * c.mu / 2.0) * (w - u).norm() + 1e-9) ++violations;
      }
    }
    r.pass = violations == 0;
    r.metrics["pairs"] = pairs * 5;
    r.metrics["violations"] = violations;
    r.detail = std::to_string(pairs * 5) + " pairs, " + std::to_string(violations) +
               " violations";
  });
}

// 3. C_lambda summation lemma, brute force on the full grid.
inline CriterionResult criterion_03_c_lambda(int) {
  using namespace verify_detail;
  return timed(3, "C_lambda summation lemma", [&](CriterionResult& r) {
    long violations = 0;
    long checks = 0;
    double worst_margin = 1e300;
    for (int li = 1; li <= 9; ++li) {
      const double lambda = li / 10.0;
      const double c = bounds::c_lambda(lambda);
      double s = 0.0;  // sum_{q=1}^{t-1} lambda^{t-1-q} / (q+1)
      for (long t = 1; t <= 10000; ++t) {
        ++checks;
        const double cap = c / static_cast<double>(t);
        if (s > cap) ++violations;
        worst_margin = std::min(worst_margin, cap - s);
        s = lambda * s + 1.0 / (static_cast<double>(t) + 1.0);
      }
    }
    r.pass = violations == 0;
    r.metrics["checks"] = checks;
    r.metrics["violations"] = violations;
    r.metrics["worst_margin"] = worst_margin;
    r.detail = std::to_string(checks) + " sums, " + std::to_string(violations) +
               " violations";
  });
}

// 4. Consensus lemma on seeded logistic runs over ring and complete.
inline CriterionResult criterion_04_consensus(int jobs) {
  using namespace verify_detail;
  return timed(4, "consensus lemma", [&](CriterionResult& r) {
    const auto model = make_model(Family::kLogistic, 5, 2.0, 1.0);
    const double L = losses::constants(model).L;
    struct Task {
      bool ring;
      std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      tasks.push_back({true, seed});
      tasks.push_back({false, seed});
    }
    std::vector<long> violations(tasks.size(), 0);
    std::vector<double> ratios(tasks.size(), 0.0);
    parallel_for(jobs, tasks.size(), [&](std::size_t i) {
      SyntheticSpec synth;
      synth.m = 4;
      synth.n = 16;
      synth.dim = 5;
      synth.feature_bound = 1.0;
      synth.seed = seed_of(4, tasks[i].ring ? 1 : 2, tasks[i].seed);
      engine::RunConfig cfg;
      cfg.model = model;
      cfg.dataset = std::make_shared<const PartitionedDataset>(
          generate_synthetic(synth).dataset);
      cfg.schedule = engine::StepSchedule::constant(0.1);
      cfg.topology = std::make_shared<const topology::TopologySchedule>(
          topology::TopologySchedule::fixed(tasks[i].ring ? topology::ring(4)
                                                          : topology::complete(4)));
      cfg.iterations = 500;
      cfg.master_seed = synth.seed;
      const double lambda = cfg.topology->at(1).lambda();
      const auto traj = engine::run(cfg);
      for (std::size_t s = 1; s < traj.steps.size(); ++s) {
        const double bound =
            engine::consensus_bound(traj.steps[s] - 1, cfg.schedule, lambda, L, 4);
        if (traj.consensus[s] > bound + 1e-12) ++violations[i];
        if (bound > 0.0) ratios[i] = std::max(ratios[i], traj.consensus[s] / bound);
      }
    });
    long total = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      total += violations[i];
      worst = std::max(worst, ratios[i]);
    }
    r.pass = total == 0;
    r.metrics["runs"] = tasks.size();
    r.metrics["violations"] = total;
    r.metrics["max_ratio"] = worst;
    std::ostringstream oss;
    oss << tasks.size() << " runs x 500 steps, " << total
        << " violations, max measured/bound " << worst;
    r.detail = oss.str();
  });
}

// 5. Convex stability recursion envelope on the full twin grid.
inline CriterionResult criterion_05_convex(int jobs, verify_detail::GridStats* out = nullptr) {
  using namespace verify_detail;
  return timed(5, "convex stability envelope", [&](CriterionResult& r) {
    GridSpec spec;
    spec.model = make_model(Family::kLogistic, 5, 2.0, 1.0);
    spec.eta = 0.1;  // <= 2/beta = 8
    spec.T = 200;
    spec.regime = bounds::Regime::kConvex;
    spec.criterion = 5;
    const GridStats stats = run_stability_grid(spec, jobs);
    if (out) *out = stats;
    r.pass = stats.envelope_violations == 0;
    r.metrics["pairs"] = stats.pairs;
    r.metrics["step_checks"] = stats.step_checks;
    r.metrics["violations"] = stats.envelope_violations;
    r.metrics["max_ratio"] = stats.max_envelope_ratio;
    std::ostringstream oss;
    oss << stats.pairs << " twin pairs, " << stats.step_checks << " step checks, "
        << stats.envelope_violations << " violations";
    r.detail = oss.str();
  });
}

// 6. Strongly convex envelope with projection, plus the T-free closed form.
inline CriterionResult criterion_06_strongly_convex(int jobs,
                                                    verify_detail::GridStats* out = nullptr) {
  using namespace verify_detail;
  return timed(6, "strongly convex stability envelope", [&](CriterionResult& r) {
    GridSpec spec;
    spec.model = make_model(Family::kRidgeLogistic, 5, 2.0, 1.0, 0.1);
    spec.eta = 0.5;  // <= 1/beta = 1/0.35
    spec.T = 200;
    spec.projected = true;
    spec.regime = bounds::Regime::kStronglyConvex;
    spec.check_terminal_closed_form = true;
    spec.criterion = 6;
    const GridStats stats = run_stability_grid(spec, jobs);
    if (out) *out = stats;

    // The closed-form value carries no T: identical at T=200 and T=2000.
    const auto c = losses::constants(spec.model);
    bounds::BoundParams p;
    p.L = c.L;
    p.beta = c.beta;
    p.mu = c.mu;
    p.m = 4;
    p.n = 16;
    p.lambda = topology::ring(4).lambda();
    p.schedule = engine::StepSchedule::constant(spec.eta);
    p.T = 200;
    const double at200 = bounds::strongly_convex_delta_constant(p).value;
    p.T = 2000;
    const double at2000 = bounds::strongly_convex_delta_constant(p).value;

    r.pass = stats.envelope_violations == 0 && stats.terminal_violations == 0 &&
             at200 == at2000;
    r.metrics["pairs"] = stats.pairs;
    r.metrics["violations"] = stats.envelope_violations;
    r.metrics["terminal_violations"] = stats.terminal_violations;
    r.metrics["closed_form_t200"] = at200;
    r.metrics["closed_form_t2000"] = at2000;
    std::ostringstream oss;
    oss << stats.pairs << " pairs, " << stats.envelope_violations
        << " envelope / " << stats.terminal_violations
        << " terminal violations, closed form T-free: " << (at200 == at2000);
    r.detail = oss.str();
  });
}

// 7. Nonconvex envelope with the (1 + beta eta) expansion factor.
inline CriterionResult criterion_07_nonconvex(int jobs,
                                              verify_detail::GridStats* out = nullptr) {
  using namespace verify_detail;
  return timed(7, "nonconvex stability envelope", [&](CriterionResult& r) {
    GridSpec spec;
    spec.model = make_model(Family::kSaturating, 5, 2.0, 1.0);
    spec.eta = 0.1;
    spec.T = 100;  // kept short: the envelope grows like 1.2^T
    spec.regime = bounds::Regime::kNonconvex;
    spec.criterion = 7;
    const GridStats stats = run_stability_grid(spec, jobs);
    if (out) *out = stats;
    r.pass = stats.envelope_violations == 0;
    r.metrics["pairs"] = stats.pairs;
    r.metrics["violations"] = stats.envelope_violations;
    r.metrics["max_ratio"] = stats.max_envelope_ratio;
    r.detail = std::to_string(stats.pairs) + " pairs, " +
               std::to_string(stats.envelope_violations) + " violations";
  });
}

// 8. Pointwise-vs-uniform ordering across every sweep of criteria 5-7.
inline CriterionResult criterion_08_ordering(int jobs,
                                             const verify_detail::GridStats* convex,
                                             const verify_detail::GridStats* strong,
                                             const verify_detail::GridStats* nonconvex) {
  using namespace verify_detail;
  return timed(8, "pointwise vs uniform ordering", [&](CriterionResult& r) {
    GridStats local_convex, local_strong, local_nonconvex;
    if (!convex || !strong || !nonconvex) {
      // Standalone invocation: re-run the grids of criteria 5-7.
      criterion_05_convex(jobs, &local_convex);
      criterion_06_strongly_convex(jobs, &local_strong);
      criterion_07_nonconvex(jobs, &local_nonconvex);
      convex = &local_convex;
      strong = &local_strong;
      nonconvex = &local_nonconvex;
    }
    const long rms_fail =
        convex->rms_gt_uniform + strong->rms_gt_uniform + nonconvex->rms_gt_uniform;
    const long direct_fail = convex->direct_gt_surrogate + strong->direct_gt_surrogate +
                             nonconvex->direct_gt_surrogate;
    const long sweeps = convex->sweeps + strong->sweeps + nonconvex->sweeps;
    const long pairs = convex->pairs + strong->pairs + nonconvex->pairs;
    r.pass = rms_fail == 0 && direct_fail == 0;
    r.metrics["sweeps"] = sweeps;
    r.metrics["pairs"] = pairs;
    r.metrics["rms_gt_uniform"] = rms_fail;
    r.metrics["direct_gt_surrogate"] = direct_fail;
    std::ostringstream oss;
    oss << sweeps << " sweeps: rms<=uniform failures " << rms_fail
        << ", direct<=surrogate failures " << direct_fail;
    r.detail = oss.str();
  });
}

// 9. Closed-form regression: corollaries vs independent summation, plus
// the pinned spot values and general-sum domination.
inline CriterionResult criterion_09_closed_forms(int) {
  using namespace verify_detail;
  return timed(9, "closed-form regression", [&](CriterionResult& r) {
    long checks = 0, failures = 0;
    auto expect_close = [&](double a, double b, double rel) {
      ++checks;
      if (std::abs(a - b) > rel * std::max({1e-300, std::abs(a), std::abs(b)})) ++failures;
    };
    auto expect_le = [&](double a, double b) {
      ++checks;
      if (a > b * (1.0 + 1e-12)) ++failures;
    };

    // Spot values from the worked example set.
    bounds::BoundParams spot;
    spot.L = 1.0;
    spot.beta = 1.0;
    spot.m = 4;
    spot.n = 25;
    spot.T = 100;
    spot.lambda = 1.0 / 3.0;
    spot.schedule = engine::StepSchedule::constant(0.1);
    ++checks;
    if (std::abs(bounds::convex_delta_constant(spot).value - 6.2) > 1e-9) ++failures;
    ++checks;
    if (std::abs(bounds::avg_weight_delta_constant(spot).value - 3.2) > 1e-9) ++failures;
    {
      bounds::BoundParams sc = spot;
      sc.mu = 0.1;
      sc.schedule = engine::StepSchedule::constant(0.5);
      ++checks;
      if (std::abs(bounds::strongly_convex_delta_constant(sc).value - 60.4) > 1e-9)
        ++failures;
      bounds::BoundParams nc = spot;
      nc.T = 10;
      ++checks;
      if (std::abs(bounds::nonconvex_delta_constant(nc).value - 1.6081) > 1e-4) ++failures;
      expect_close(bounds::nonconvex_delta_constant(nc).value,
                   2.0 * 0.31 * std::pow(1.1, 10), 1e-12);
    }

    rng::Stream stream(seed_of(9, 1));
    for (int trial = 0; trial < 100; ++trial) {
      bounds::BoundParams p;
      p.L = 0.5 + stream.next_double();
      p.beta = 0.2 + stream.next_double();
      p.mu = 0.05 + 0.3 * stream.next_double();
      p.m = 2 + static_cast<int>(stream.next_below(6));
      p.n = 4 + static_cast<int>(stream.next_below(30));
      p.T = 10 + static_cast<long>(stream.next_below(300));
      p.lambda = 0.05 + 0.85 * stream.next_double();
      const double eta = 0.02 + 0.3 * stream.next_double();
      const double Td = static_cast<double>(p.T);
      const double c = bounds::c_lambda(p.lambda);

      // Constant stepsize: per-step increments summed directly.
      p.schedule = engine::StepSchedule::constant(eta);
      double acc = 0.0;
      for (long t = 1; t <= p.T; ++t)
        acc += 4.0 * eta * eta * p.beta * p.L * p.L / (1.0 - p.lambda) +
               2.0 * eta * p.L * p.L / p.mn();
      expect_close(bounds::convex_delta_constant(p).value, acc, 1e-10);
      double avg_acc = 0.0;
      for (long t = 1; t <= p.T; ++t)
        avg_acc += 2.0 * eta * eta * p.beta * p.L * p.L / (1.0 - p.lambda) +
                   2.0 * eta * p.L * p.L / p.mn();
      expect_close(bounds::avg_weight_delta_constant(p).value, avg_acc, 1e-10);
      double geo = 0.0, factor = 1.0;
      const double a = 1.0 - eta * p.mu / 2.0;
      while (factor > 1e-18) {
        geo += factor;
        factor *= a;
      }
      expect_close(bounds::strongly_convex_delta_constant(p).value,
                   (4.0 * eta * eta * p.beta * p.L * p.L / (1.0 - p.lambda) +
                    2.0 * eta * p.L * p.L / p.mn()) *
                       geo,
                   1e-10);
      double pow_t = 1.0;
      for (long t = 0; t < p.T; ++t) pow_t *= 1.0 + p.beta * eta;
      expect_close(
          bounds::nonconvex_delta_constant(p).value,
          2.0 * p.L * p.L * (2.0 * eta / (1.0 - p.lambda) + 1.0 / (p.mn() * p.beta)) * pow_t,
          1e-10);
      // The exact general sums never exceed their closed forms.
      expect_le(bounds::exact_delta(bounds::Regime::kConvex, p),
                bounds::convex_delta_constant(p).value);
      expect_le(bounds::exact_delta(bounds::Regime::kStronglyConvex, p),
                bounds::strongly_convex_delta_constant(p).value);
      expect_le(bounds::exact_delta(bounds::Regime::kNonconvex, p),
                bounds::nonconvex_delta_constant(p).value);

      // Decreasing schedules.
      p.schedule = engine::StepSchedule::inv_t();
      double telescope = 0.0;
      for (long t = 1; t <= p.T; ++t)
        telescope += 1.0 / (static_cast<double>(t) * (static_cast<double>(t) + 1.0));
      expect_close(bounds::convex_delta_decreasing(p).value,
                   4.0 * p.beta * p.L * p.L * c * telescope +
                       2.0 * p.L * p.L * std::log(Td + 1.0) / p.mn(),
                   1e-10);
      expect_close(bounds::avg_weight_delta_decreasing(p).value,
                   4.0 * p.L * p.L * p.beta * c +
                       p.L * p.L * std::log(Td + 2.0) / p.mn(),
                   1e-12);
      expect_close(bounds::nonconvex_delta_decreasing(p).value,
                   4.0 * p.L * p.L * std::exp(p.beta * std::log(Td + 1.0)) *
                       (4.0 * c + 1.0 / (p.beta * p.mn())),
                   1e-10);
      p.schedule = engine::StepSchedule::inv_t_mu(p.mu);
      expect_close(bounds::strongly_convex_delta_decreasing(p).value,
                   16.0 * p.beta * p.L * p.L * c / (Td * p.mu * p.mu) *
                           (std::log(Td) + 1.0) +
                       4.0 * p.L * p.L / (p.mu * p.mn()),
                   1e-12);
      p.schedule = engine::StepSchedule::inv_t_beta(p.beta);
      expect_close(bounds::nonconvex_delta_decreasing_beta(p).value,
                   4.0 * p.L * p.L * (Td + 1.0) * (2.0 * c + 1.0 / (p.beta * p.mn())),
                   1e-12);
    }
    r.pass = failures == 0;
    r.metrics["checks"] = checks;
    r.metrics["failures"] = failures;
    r.detail = std::to_string(checks) + " comparisons, " + std::to_string(failures) +
               " failures";
  });
}

// 10. High-probability optimization bound under gradient dominance.
inline CriterionResult criterion_10_opt_bound(int jobs) {
  using namespace verify_detail;
  return timed(10, "optimization-error bound", [&](CriterionResult& r) {
    const auto model = make_model(Family::kRidgeLogistic, 5, 10.0, 1.0, 0.1);
    const auto c = losses::constants(model);
    const double eta = 1.0 / (3.0 * c.beta);
    const long T = 99;  // T + 1 = 100 states
    const int seeds = 100;
    std::vector<char> held(static_cast<std::size_t>(seeds), 0);
    std::vector<double> margins(static_cast<std::size_t>(seeds), 0.0);
    parallel_for(jobs, static_cast<std::size_t>(seeds), [&](std::size_t s) {
      SyntheticSpec synth;
      synth.m = 4;
      synth.n = 25;
      synth.dim = 5;
      synth.feature_bound = 1.0;
      synth.seed = seed_of(10, s + 1);
      engine::RunConfig cfg;
      cfg.model = model;
      cfg.dataset = std::make_shared<const PartitionedDataset>(
          generate_synthetic(synth).dataset);
      cfg.schedule = engine::StepSchedule::constant(eta);
      cfg.topology = std::make_shared<const topology::TopologySchedule>(
          topology::TopologySchedule::fixed(topology::ring(4)));
      cfg.iterations = T;
      cfg.master_seed = synth.seed;
      engine::Runner runner(cfg);
      double grad_sq_sum = 0.0;
      double sigma_sq = 0.0;
      for (long t = 1; t <= T + 1; ++t) {
        const auto stats = risk_stats(model, *cfg.dataset, runner.average());
        grad_sq_sum += stats.grad_norm_sq;
        sigma_sq = std::max(sigma_sq, stats.variance);
        if (t <= T) runner.step();
      }
      const double lhs = eta / 3.0 * grad_sq_sum;
      bounds::BoundParams p;
      p.L = c.L;
      p.beta = c.beta;
      p.mu = c.mu;
      p.gamma = c.gamma;
      p.sigma = std::sqrt(sigma_sq);
      p.m = 4;
      p.n = 25;
      p.T = T;
      p.lambda = topology::ring(4).lambda();
      p.schedule = cfg.schedule;
      p.delta_conf = 0.1;
      const auto rhs = bounds::opt_rhs_constant(p);
      held[s] = lhs <= rhs.total ? 1 : 0;
      margins[s] = rhs.total > 0 ? lhs / rhs.total : 0.0;
    });
    int held_count = 0;
    double worst = 0.0;
    for (std::size_t s = 0; s < held.size(); ++s) {
      held_count += held[s];
      worst = std::max(worst, margins[s]);
    }
    r.pass = held_count >= 90;
    r.metrics["seeds"] = seeds;
    r.metrics["held"] = held_count;
    r.metrics["max_lhs_over_rhs"] = worst;
    std::ostringstream oss;
    oss << "bound held in " << held_count << "/" << seeds
        << " runs, max LHS/RHS = " << worst;
    r.detail = oss.str();
  });
}

// 11. Decreasing-stepsize optimization: O(1/(T+1)) rate in log-log slope.
inline CriterionResult criterion_11_decreasing_opt(int jobs) {
  using namespace verify_detail;
  return timed(11, "decreasing-step optimization rate", [&](CriterionResult& r) {
    const auto model = make_model(Family::kRidgeLogistic, 5, 30.0, 1.0, 1.0);
    const double gamma = losses::constants(model).gamma;  // mu / 2
    const std::vector<long> horizons = {64, 128, 256, 512, 1024};
    const int seeds = 20;
    // gaps[seed][horizon]
    std::vector<std::vector<double>> gaps(static_cast<std::size_t>(seeds),
                                          std::vector<double>(horizons.size(), 0.0));
    parallel_for(jobs, static_cast<std::size_t>(seeds), [&](std::size_t s) {
      SyntheticSpec synth;
      synth.m = 4;
      synth.n = 16;
      synth.dim = 5;
      synth.feature_bound = 1.0;
      synth.seed = seed_of(11, s + 1);
      const auto data = generate_synthetic(synth);
      const auto ds = std::make_shared<const PartitionedDataset>(data.dataset);
      const auto star = losses::minimizer_oracle(model, *ds, 1e-10);
      for (std::size_t h = 0; h < horizons.size(); ++h) {
        engine::RunConfig cfg;
        cfg.model = model;
        cfg.dataset = ds;
        cfg.schedule = engine::StepSchedule::inv_t_gamma(gamma);
        cfg.topology = std::make_shared<const topology::TopologySchedule>(
            topology::TopologySchedule::fixed(topology::ring(4)));
        cfg.iterations = horizons[h];
        cfg.master_seed = synth.seed;
        const auto traj = engine::run(cfg);
        const double risk = losses::empirical_risk(model, *ds, traj.final_avg());
        gaps[s][h] = std::max(risk - star.risk, 1e-15);
      }
    });
    std::vector<double> log_T, log_gap;
    json medians = json::array();
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      std::vector<double> column;
      for (int s = 0; s < seeds; ++s) column.push_back(gaps[static_cast<std::size_t>(s)][h]);
      const double med = median(column);
      medians.push_back(med);
      log_T.push_back(std::log(static_cast<double>(horizons[h])));
      log_gap.push_back(std::log(med));
    }
    const double slope = regression_slope(log_T, log_gap);
    r.pass = slope <= -0.8;
    r.metrics["slope"] = slope;
    r.metrics["median_gaps"] = medians;
    std::ostringstream oss;
    oss << "log-log slope " << slope << " (need <= -0.8)";
    r.detail = oss.str();
  });
}

// 12. Scaling of the sampling term of the convex generalization envelope.
inline CriterionResult criterion_12_scaling(int) {
  using namespace verify_detail;
  return timed(12, "sampling-term scaling", [&](CriterionResult& r) {
    const double L = 1.0;   // logistic with B = 1
    const double beta = 0.25;
    const int seeds = 20;
    std::vector<double> log_mn, log_term;
    json cells = json::array();
    for (int m : {2, 4, 8}) {
      const double lambda = topology::ring(m).lambda();
      for (int n : {16, 32, 64}) {
        const long T = static_cast<long>(m) * n;
        const double eta = 1.0 / std::sqrt(static_cast<double>(T));
        double term_sum = 0.0;
        for (int s = 1; s <= seeds; ++s) {
          const std::uint64_t seed = seed_of(12, static_cast<std::uint64_t>(m * 1000 + n),
                                             static_cast<std::uint64_t>(s));
          double mean_sq = 0.0;
          for (int rnode = 0; rnode < m; ++rnode) {
            std::vector<long> counts(static_cast<std::size_t>(n), 0);
            for (long t = 1; t <= T; ++t)
              counts[static_cast<std::size_t>(engine::sample_index(
                  seed, engine::SampleRole::kTwinShared, rnode, t, n))]++;
            for (long ck : counts) mean_sq += static_cast<double>(ck) * ck;
          }
          mean_sq /= static_cast<double>(m) * n;
          term_sum += 2.0 * std::sqrt(2.0) * L * L * eta / m * std::sqrt(mean_sq);
        }
        const double term = term_sum / seeds;
        const double consensus_term =
            4.0 * std::sqrt(2.0) * L * L * eta * eta * beta * static_cast<double>(T) /
            (1.0 - lambda);
        json cell;
        cell["m"] = m;
        cell["n"] = n;
        cell["sampling_term"] = term;
        cell["consensus_term"] = consensus_term;  // reported, not asserted
        cells.push_back(cell);
        log_mn.push_back(std::log(static_cast<double>(m) * n));
        log_term.push_back(std::log(term));
      }
    }
    const double slope = regression_slope(log_mn, log_term);
    r.pass = slope >= -0.6 && slope <= -0.4;
    r.metrics["slope"] = slope;
    r.metrics["cells"] = cells;
    std::ostringstream oss;
    oss << "log-log slope " << slope << " (need -0.5 +/- 0.1)";
    r.detail = oss.str();
  });
}

// 13. Local-model chain bound under the alternating ring/complete schedule.
inline CriterionResult criterion_13_local(int jobs) {
  using namespace verify_detail;
  return timed(13, "local-model chain bound", [&](CriterionResult& r) {
    const auto model = make_model(Family::kLogistic, 5, 2.0, 1.0);
    const auto c = losses::constants(model);
    const int m = 4, n = 8;
    const long T = 200;
    const double eta = 0.1;  // <= 2 P^t_rr / beta for both matrices
    long violations = 0;
    long pairs_done = 0;
    double max_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SyntheticSpec synth;
      synth.m = m;
      synth.n = n;
      synth.dim = 5;
      synth.feature_bound = 1.0;
      synth.seed = seed_of(13, seed);
      engine::RunConfig cfg;
      cfg.model = model;
      cfg.dataset = std::make_shared<const PartitionedDataset>(
          generate_synthetic(synth).dataset);
      cfg.schedule = engine::StepSchedule::constant(eta);
      cfg.topology = std::make_shared<const topology::TopologySchedule>(
          topology::TopologySchedule::cycle({topology::ring(m), topology::complete(m)}));
      cfg.iterations = T;
      cfg.master_seed = synth.seed;
      cfg.regime = "local-convex";

      bounds::BoundParams p;
      p.L = c.L;
      p.beta = c.beta;
      p.m = m;
      p.n = n;
      p.T = T;
      p.lambda = cfg.topology->at(1).lambda();
      p.schedule = cfg.schedule;

      const std::size_t pairs = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
      std::vector<double> lhs(pairs, 0.0), rhs(pairs, 0.0);
      parallel_for(jobs, pairs, [&](std::size_t idx) {
        const int rr = static_cast<int>(idx) / n + 1;
        const int k = static_cast<int>(idx) % n + 1;
        const auto local =
            stability::local_trace(cfg, {rr, k}, fresh_replacement(synth, rr, k));
        lhs[idx] = local.delta_r.back();
        rhs[idx] = bounds::local_bound(bounds::Regime::kConvex, *cfg.topology, p, rr - 1,
                                       local.trace.hits)
                       .per_pair;
      });
      for (std::size_t idx = 0; idx < pairs; ++idx) {
        ++pairs_done;
        if (lhs[idx] > rhs[idx] + 1e-9) ++violations;
        if (rhs[idx] > 0.0) max_ratio = std::max(max_ratio, lhs[idx] / rhs[idx]);
      }
    }
    r.pass = violations == 0;
    r.metrics["pairs"] = pairs_done;
    r.metrics["violations"] = violations;
    r.metrics["max_ratio"] = max_ratio;
    std::ostringstream oss;
    oss << pairs_done << " pairs, " << violations << " violations, max lhs/rhs "
        << max_ratio;
    r.detail = oss.str();
  });
}

// 15. exact_variance against a 10^5-draw Monte Carlo estimate.
inline CriterionResult criterion_15_variance(int jobs) {
  using namespace verify_detail;
  return timed(15, "variance estimator vs Monte Carlo", [&](CriterionResult& r) {
    const auto model = make_model(Family::kLogistic, 3, 2.0, 1.0);
    SyntheticSpec synth;
    synth.m = 2;
    synth.n = 8;
    synth.dim = 3;
    synth.feature_bound = 1.0;
    synth.seed = seed_of(15, 1);
    const auto ds = generate_synthetic(synth).dataset;
    const int weights = 10;
    const long draws = 100000;
    std::vector<char> ok(static_cast<std::size_t>(weights), 0);
    std::vector<double> sigmas(static_cast<std::size_t>(weights), 0.0);
    parallel_for(jobs, static_cast<std::size_t>(weights), [&](std::size_t wi) {
      rng::Stream wstream(seed_of(15, 2, wi));
      const Eigen::VectorXd w = ball_point(wstream, 3, 2.0);
      const double exact = losses::exact_variance(model, ds, w);
      Eigen::VectorXd full = Eigen::VectorXd::Zero(3);
      for (int i = 0; i < ds.nodes(); ++i)
        for (int k = 0; k < ds.per_node(); ++k)
          full += losses::loss_grad(model, w, ds.at(i, k));
      full /= static_cast<double>(ds.nodes()) * ds.per_node();
      rng::Stream mc(seed_of(15, 3, wi));
      double mean = 0.0, mean_sq = 0.0;
      for (long d = 0; d < draws; ++d) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
        for (int i = 0; i < ds.nodes(); ++i)
          g += losses::loss_grad(
              model, w, ds.at(i, static_cast<int>(mc.next_below(
                                     static_cast<std::uint64_t>(ds.per_node())))));
        g /= ds.nodes();
        const double v = (g - full).squaredNorm();
        mean += v;
        mean_sq += v * v;
      }
      mean /= draws;
      mean_sq /= draws;
      const double se = std::sqrt(std::max(0.0, mean_sq - mean * mean) / draws);
      ok[wi] = std::abs(exact - mean) <= 3.0 * se + 1e-12 ? 1 : 0;
      sigmas[wi] = exact;
    });
    int passed = 0;
    for (char c15 : ok) passed += c15;
    r.pass = passed == weights;
    r.metrics["weights"] = weights;
    r.metrics["within_three_se"] = passed;
    r.detail = std::to_string(passed) + "/" + std::to_string(weights) +
               " weights within 3 standard errors";
  });
}

// ── Suite assembly ────────────────────────────────────────────────────────

inline std::vector<CriterionResult> run_verify_core(int jobs) {
  using namespace verify_detail;
  std::vector<CriterionResult> results;
  GridStats convex, strong, nonconvex;
  results.push_back(criterion_01_topology(jobs));
  results.push_back(criterion_02_nonexpansive(jobs));
  results.push_back(criterion_03_c_lambda(jobs));
  results.push_back(criterion_04_consensus(jobs));
  results.push_back(criterion_05_convex(jobs, &convex));
  results.push_back(criterion_06_strongly_convex(jobs, &strong));
  results.push_back(criterion_07_nonconvex(jobs, &nonconvex));
  results.push_back(criterion_08_ordering(jobs, &convex, &strong, &nonconvex));
  results.push_back(criterion_09_closed_forms(jobs));
  results.push_back(criterion_10_opt_bound(jobs));
  results.push_back(criterion_11_decreasing_opt(jobs));
  results.push_back(criterion_12_scaling(jobs));
  results.push_back(criterion_13_local(jobs));
  results.push_back(criterion_15_variance(jobs));
  return results;
}

inline std::string metric_payload(const std::vector<CriterionResult>& results) {
  json payload = json::array();
  for (const auto& res : results) {
    json entry;
    entry["id"] = res.id;
    entry["pass"] = res.pass;
    entry["metrics"] = res.metrics;
    payload.push_back(std::move(entry));
  }
  return payload.dump();
}

// 14. Determinism: the core payload twice at --jobs 1 and once at --jobs 8.
inline CriterionResult criterion_14_determinism() {
  using namespace verify_detail;
  return timed(14, "determinism across jobs", [&](CriterionResult& r) {
    const std::string first = metric_payload(run_verify_core(1));
    const std::string second = metric_payload(run_verify_core(1));
    const std::string parallel = metric_payload(run_verify_core(8));
    r.pass = first == second && second == parallel;
    r.metrics["payload_hash_jobs1_a"] = hex64(fnv1a64(first));
    r.metrics["payload_hash_jobs1_b"] = hex64(fnv1a64(second));
    r.metrics["payload_hash_jobs8"] = hex64(fnv1a64(parallel));
    r.detail = r.pass ? "payloads byte-identical across repeats and jobs 1 vs 8"
                      : "payload mismatch";
  });
}

inline std::vector<CriterionResult> run_verify_suite(int jobs, bool with_determinism = true) {
  std::vector<CriterionResult> results = run_verify_core(jobs);
  if (with_determinism) results.push_back(criterion_14_determinism());
  std::sort(results.begin(), results.end(),
            [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
  return results;
}

inline Report verify_report(const std::vector<CriterionResult>& results,
                            const json& config_echo) {
  Report report;
  report.kind = "verify";
  report.config_echo = config_echo;
  report.config_hash = config_hash_of(config_echo);
  CsvTable table{"criteria", {"id", "name", "pass", "seconds", "detail"}, {}};
  bool all = true;
  double total_seconds = 0.0;
  for (const auto& res : results) {
    all = all && res.pass;
    total_seconds += res.seconds;
    table.add_row({std::to_string(res.id), res.name, res.pass ? "1" : "0",
                   format_double(res.seconds), res.detail});
    json entry;
    entry["name"] = res.name;
    entry["pass"] = res.pass;
    entry["metrics"] = res.metrics;
    report.metrics["criteria"][std::to_string(res.id)] = std::move(entry);
  }
  report.metrics["all_pass"] = all;
  report.tables.push_back(std::move(table));
  report.wall_seconds = total_seconds;
  return report;
}

}  // namespace dsgd::harness
