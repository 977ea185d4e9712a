// experiment.hpp — turns a validated config document into reports.
//
// Kinds: single-run (one trajectory), twin (one neighbor pair or the full
// (r,k) sweep), bound-eval (closed forms from raw parameters), sweep (a
// grid of single runs). verify-suite lives in verify.hpp. Sweep cells and
// twin pairs run in parallel into preallocated slots; every reduction is
// fixed-order, so reports are byte-identical for any --jobs value.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/common.hpp"
#include "dsgd/config.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/report.hpp"
#include "dsgd/stability.hpp"
#include "dsgd/verify.hpp"

namespace dsgd::harness {

namespace exp_detail {

inline bounds::Regime regime_of(const engine::RunConfig& cfg) {
  if (cfg.regime == "convex" || cfg.regime == "local-convex") return bounds::Regime::kConvex;
  if (cfg.regime == "strongly-convex" || cfg.regime == "local-strongly-convex")
    return bounds::Regime::kStronglyConvex;
  if (cfg.regime == "nonconvex" || cfg.regime == "nonconvex-opt")
    return bounds::Regime::kNonconvex;
  switch (cfg.model.family) {  // infer from the family
    case losses::Family::kSaturating: return bounds::Regime::kNonconvex;
    case losses::Family::kRidgeLogistic:
    case losses::Family::kQuadratic:
      return cfg.model.mu > 0.0 ? bounds::Regime::kStronglyConvex
                                : bounds::Regime::kConvex;
    default: return bounds::Regime::kConvex;
  }
}

inline bounds::BoundParams params_of(const engine::RunConfig& cfg) {
  const auto c = losses::constants(cfg.model);
  bounds::BoundParams p;
  p.L = c.L;
  p.beta = c.beta;
  p.mu = c.mu;
  p.gamma = c.gamma;
  p.M = c.M;
  p.m = cfg.dataset->nodes();
  p.n = cfg.dataset->per_node();
  p.T = cfg.iterations;
  p.lambda = cfg.topology->at(1).lambda();
  p.schedule = cfg.schedule;
  return p;
}

inline double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace exp_detail

// ── single-run ────────────────────────────────────────────────────────────

inline Report run_single(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const BuiltRun built = parse_run(config.document.at("run"));
  const auto& cfg = built.run;
  const auto traj = engine::run(cfg);
  const auto c = losses::constants(cfg.model);
  const double lambda = cfg.topology->at(1).lambda();

  Report report;
  report.kind = "single-run";
  report.config_echo = config.document;
  report.config_hash = config_hash_of(config.document);
  report.warnings = traj.warnings;

  CsvTable steps{"steps", {"step", "eta", "consensus", "consensus_bound", "avg_norm"}, {}};
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const long t = traj.steps[i];
    steps.add_row({std::to_string(t),
                   format_double(t <= traj.T ? cfg.schedule.at(t) : 0.0),
                   format_double(traj.consensus[i]),
                   format_double(t > 1 ? engine::consensus_bound(t - 1, cfg.schedule,
                                                                 lambda, c.L,
                                                                 cfg.dataset->nodes())
                                       : 0.0),
                   format_double(traj.avg[i].norm())});
  }
  report.tables.push_back(std::move(steps));

  report.metrics["final_risk"] =
      losses::empirical_risk(cfg.model, *cfg.dataset, traj.final_avg());
  report.metrics["final_consensus"] = traj.consensus.back();
  report.metrics["lambda"] = lambda;
  report.metrics["lipschitz_analytic"] = c.L;
  report.metrics["max_grad_norm_observed"] = traj.max_grad_norm;
  report.metrics["precondition_met"] = traj.warnings.empty();
  if (cfg.record_stride == 1)
    report.metrics["average_iterate_norm"] =
        engine::average_iterate(traj, cfg.schedule).norm();
  report.wall_seconds = exp_detail::wall_since(t0);
  return report;
}

// ── twin ──────────────────────────────────────────────────────────────────

inline losses::Sample twin_replacement(const ExperimentConfig& config,
                                       const BuiltRun& built, int r, int k) {
  const json& tw = config.document.at("twin");
  if (tw.contains("replacement")) {
    const json& rep = tw.at("replacement");
    losses::Sample z;
    const auto xs = cfg_detail::require<std::vector<double>>(rep, "twin.replacement", "x");
    z.x.resize(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
      z.x(static_cast<Eigen::Index>(i)) = xs[i];
    z.y = cfg_detail::require<double>(rep, "twin.replacement", "y");
    return z;
  }
  if (!built.is_synthetic)
    throw ConfigError("twin on a file dataset needs an explicit replacement");
  return fresh_replacement(built.synthetic, r, k);
}

inline Report run_twin(const ExperimentConfig& config, int jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  const BuiltRun built = parse_run(config.document.at("run"));
  const auto& cfg = built.run;
  const json& tw = config.document.at("twin");
  const bool sweep = cfg_detail::get_or<bool>(tw, "sweep", false);
  const int m = cfg.dataset->nodes(), n = cfg.dataset->per_node();
  const auto regime = exp_detail::regime_of(cfg);
  const auto params = exp_detail::params_of(cfg);

  Report report;
  report.kind = "twin";
  report.config_echo = config.document;
  report.config_hash = config_hash_of(config.document);

  if (!sweep) {
    const int r = cfg_detail::require<int>(tw, "twin", "r");
    const int k = cfg_detail::require<int>(tw, "twin", "k");
    const auto trace =
        stability::twin_run(cfg, {r, k}, twin_replacement(config, built, r, k));
    const auto envelope = bounds::per_step_envelope(regime, params, trace.hits);
    CsvTable table{"twin-steps", {"step", "eta", "hit", "d", "envelope"}, {}};
    long violations = 0;
    for (std::size_t i = 0; i < trace.d.size(); ++i) {
      const long t = static_cast<long>(i) + 1;
      if (trace.d[i] > envelope[i] + 1e-9) ++violations;
      table.add_row({std::to_string(t),
                     format_double(t <= cfg.iterations ? cfg.schedule.at(t) : 0.0),
                     t > 1 && trace.hit_at(t - 1) ? "1" : "0", format_double(trace.d[i]),
                     format_double(envelope[i])});
    }
    report.tables.push_back(std::move(table));
    report.warnings = trace.warnings;
    report.metrics["r"] = r;
    report.metrics["k"] = k;
    report.metrics["hits"] = trace.hits.size();
    report.metrics["eps_surrogate"] = trace.eps.surrogate;
    report.metrics["eps_direct"] = trace.eps.direct;
    report.metrics["eps_grad_direct"] = trace.eps.grad_direct;
    report.metrics["final_divergence"] = trace.d.back();
    report.metrics["envelope_violations"] = violations;
    report.metrics["regime"] = bounds::regime_name(regime);
    report.wall_seconds = exp_detail::wall_since(t0);
    return report;
  }

  // Full (r, k) sweep.
  std::vector<stability::StabilityTrace> traces(
      static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  parallel_for(jobs, traces.size(), [&](std::size_t idx) {
    const int r = static_cast<int>(idx) / n + 1;
    const int k = static_cast<int>(idx) % n + 1;
    traces[idx] =
        stability::twin_run(cfg, {r, k}, twin_replacement(config, built, r, k));
  });

  Eigen::MatrixXd eps(m, n);
  std::vector<std::vector<long>> hits_per_pair;
  long violations = 0;
  CsvTable table{"twin-pairs",
                 {"r", "k", "hits", "eps_surrogate", "eps_direct", "final_d"},
                 {}};
  for (std::size_t idx = 0; idx < traces.size(); ++idx) {
    const auto& trace = traces[idx];
    const int r = static_cast<int>(idx) / n, k = static_cast<int>(idx) % n;
    eps(r, k) = trace.eps.surrogate;
    hits_per_pair.push_back(trace.hits);
    const auto envelope = bounds::per_step_envelope(regime, params, trace.hits);
    for (std::size_t i = 0; i < trace.d.size(); ++i)
      if (trace.d[i] > envelope[i] + 1e-9) ++violations;
    table.add_row({std::to_string(r + 1), std::to_string(k + 1),
                   std::to_string(trace.hits.size()),
                   format_double(trace.eps.surrogate), format_double(trace.eps.direct),
                   format_double(trace.d.back())});
  }
  report.tables.push_back(std::move(table));
  const auto agg = stability::aggregate(eps);
  report.warnings = traces.front().warnings;
  report.metrics["delta_mean"] = agg.delta_mean;
  report.metrics["delta_sq"] = agg.delta_sq;
  report.metrics["rms"] = agg.rms;
  report.metrics["eps_uniform_measured"] = agg.eps_uniform;
  report.metrics["rms_le_uniform"] =
      bounds::compare_pointwise_uniform(agg.rms, agg.eps_uniform).rms_le_uniform;
  report.metrics["envelope_violations"] = violations;
  report.metrics["regime"] = bounds::regime_name(regime);
  report.metrics["exact_delta"] = bounds::exact_delta(regime, params);
  report.metrics["exact_delta_sq"] =
      bounds::exact_delta_sq(regime, params, hits_per_pair);
  report.metrics["uniform_eps_realized_bound"] =
      bounds::uniform_eps_realized(params, hits_per_pair);
  // Empirical r-dependence, recorded without asserting any (the closed-form
  // bounds carry no r).
  json per_node = json::array();
  for (int r = 0; r < m; ++r) per_node.push_back(eps.row(r).mean());
  report.metrics["per_node_mean_eps"] = per_node;
  const auto gen = bounds::generalization_bound(params.M, static_cast<long>(m) * n,
                                                params.delta_conf, agg.rms);
  report.metrics["generalization_shape_total"] = gen.total;
  report.metrics["generalization_shape_sampling"] = gen.sampling_term;
  report.metrics["generalization_shape_stability"] = gen.stability_term;
  report.wall_seconds = exp_detail::wall_since(t0);
  return report;
}

// ── bound-eval ────────────────────────────────────────────────────────────

inline Report run_bound_eval(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const json& b = config.document.at("bounds");
  bounds::BoundParams p;
  p.L = cfg_detail::require<double>(b, "bounds", "L");
  p.beta = cfg_detail::require<double>(b, "bounds", "beta");
  p.mu = cfg_detail::get_or<double>(b, "mu", 0.0);
  p.gamma = cfg_detail::get_or<double>(b, "gamma", 0.0);
  p.M = cfg_detail::get_or<double>(b, "M", 0.0);
  p.sigma = cfg_detail::get_or<double>(b, "sigma", 0.0);
  p.m = cfg_detail::require<int>(b, "bounds", "m");
  p.n = cfg_detail::require<int>(b, "bounds", "n");
  p.T = cfg_detail::require<long>(b, "bounds", "T");
  p.lambda = cfg_detail::require<double>(b, "bounds", "lambda");
  p.delta_conf = cfg_detail::get_or<double>(b, "delta", 0.1);
  const json& s = b.contains("schedule") ? b.at("schedule")
                                         : json{{"kind", "constant"}, {"eta", 0.1}};
  cfg_detail::check_keys(s, "bounds.schedule", {"kind", "eta", "mu", "beta", "gamma"});
  const auto kind = cfg_detail::require<std::string>(s, "bounds.schedule", "kind");
  if (kind == "constant")
    p.schedule = engine::StepSchedule::constant(
        cfg_detail::require<double>(s, "bounds.schedule", "eta"));
  else if (kind == "inv-t") p.schedule = engine::StepSchedule::inv_t();
  else if (kind == "inv-t-mu")
    p.schedule = engine::StepSchedule::inv_t_mu(cfg_detail::get_or<double>(s, "mu", p.mu));
  else if (kind == "inv-t-beta")
    p.schedule = engine::StepSchedule::inv_t_beta(cfg_detail::get_or<double>(s, "beta", p.beta));
  else if (kind == "inv-t-gamma")
    p.schedule = engine::StepSchedule::inv_t_gamma(cfg_detail::get_or<double>(s, "gamma", p.gamma));
  else throw ConfigError("unknown schedule kind '" + kind + "'");

  Report report;
  report.kind = "bound-eval";
  report.config_echo = config.document;
  report.config_hash = config_hash_of(config.document);
  CsvTable table{"bounds",
                 {"name", "value", "log_value", "overflowed", "precondition_met"},
                 {}};
  auto add = [&](const std::string& name, const bounds::ClosedForm& v) {
    table.add_row({name, format_double(v.value), format_double(v.log_value),
                   v.overflowed ? "1" : "0", v.precondition_met ? "1" : "0"});
    report.metrics[name] = v.overflowed ? json(nullptr) : json(v.value);
    report.metrics[name + "_precondition_met"] = v.precondition_met;
    if (v.overflowed) report.metrics[name + "_log_value"] = v.log_value;
  };
  auto add_plain = [&](const std::string& name, double v) {
    table.add_row({name, format_double(v), format_double(std::log(v)), "0", "1"});
    report.metrics[name] = v;
  };

  add_plain("exact_delta_convex", bounds::exact_delta(bounds::Regime::kConvex, p));
  add_plain("exact_delta_nonconvex",
            bounds::exact_delta(bounds::Regime::kNonconvex, p));
  if (p.mu > 0.0)
    add_plain("exact_delta_strongly_convex",
              bounds::exact_delta(bounds::Regime::kStronglyConvex, p));
  switch (p.schedule.kind) {
    case engine::ScheduleKind::kConstant:
      add("convex_delta_constant", bounds::convex_delta_constant(p));
      add("avg_weight_delta_constant", bounds::avg_weight_delta_constant(p));
      add("nonconvex_delta_constant", bounds::nonconvex_delta_constant(p));
      if (p.mu > 0.0)
        add("strongly_convex_delta_constant", bounds::strongly_convex_delta_constant(p));
      add_plain("uniform_eps_expected", bounds::uniform_eps_expected_constant(p));
      if (p.sigma > 0.0) {
        const auto rhs = bounds::opt_rhs_constant(p);
        add_plain("opt_rhs_total", rhs.total);
        json terms = json::array();
        for (double t : rhs.terms) terms.push_back(t);
        report.metrics["opt_rhs_terms"] = terms;
        report.metrics["opt_rhs_precondition_met"] = rhs.precondition_met;
        if (p.gamma > 0.0)
          add_plain("opt_mean_suboptimality", rhs.mean_suboptimality);
      }
      break;
    case engine::ScheduleKind::kInvT:
      add("convex_delta_decreasing", bounds::convex_delta_decreasing(p));
      add("convex_delta_decreasing_main_text", bounds::convex_delta_decreasing(p, true));
      add("avg_weight_delta_decreasing", bounds::avg_weight_delta_decreasing(p));
      add("nonconvex_delta_decreasing", bounds::nonconvex_delta_decreasing(p));
      break;
    case engine::ScheduleKind::kInvTMu:
      if (p.mu > 0.0)
        add("strongly_convex_delta_decreasing",
            bounds::strongly_convex_delta_decreasing(p));
      break;
    case engine::ScheduleKind::kInvTBeta:
      add("nonconvex_delta_decreasing_beta", bounds::nonconvex_delta_decreasing_beta(p));
      break;
    default:
      break;
  }
  if (p.lambda > 0.0) add_plain("c_lambda", bounds::c_lambda(p.lambda));
  report.tables.push_back(std::move(table));
  report.wall_seconds = exp_detail::wall_since(t0);
  return report;
}

// ── sweep ─────────────────────────────────────────────────────────────────

inline Report run_sweep(const ExperimentConfig& config, int jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  const json& grid = config.document.at("sweep").at("grid");
  auto axis_of = [&](const char* key, json fallback) {
    if (!grid.contains(key)) return json::array({fallback});
    if (!grid.at(key).is_array() || grid.at(key).empty())
      throw ConfigError(std::string("sweep.grid.") + key + " must be a nonempty array");
    return grid.at(key);
  };
  const json base_run = config.document.at("run");
  const json ms = axis_of("m", base_run.at("topology").value("m", 1));
  const json ns = axis_of("n", base_run.at("data").at("n"));
  const json Ts = axis_of("T", base_run.at("iterations"));
  const json etas = axis_of("eta", base_run.at("schedule").value("eta", 0.1));
  const json topos = axis_of("topology", base_run.at("topology").value("kind", "ring"));
  const json seeds = axis_of("seed", base_run.value("master_seed", 1));

  struct Cell {
    json doc;
    json metrics;
  };
  std::vector<Cell> cells;
  for (const auto& m : ms)
    for (const auto& n : ns)
      for (const auto& T : Ts)
        for (const auto& eta : etas)
          for (const auto& topo : topos)
            for (const auto& seed : seeds) {
              json doc = base_run;
              doc["topology"]["m"] = m;
              doc["topology"]["kind"] = topo;
              doc["data"]["n"] = n;
              doc["iterations"] = T;
              if (doc["schedule"].value("kind", "constant") == "constant")
                doc["schedule"]["eta"] = eta;
              doc["master_seed"] = seed;
              doc["data"]["seed"] = seed;
              cells.push_back({std::move(doc), {}});
            }

  parallel_for(jobs, cells.size(), [&](std::size_t i) {
    const BuiltRun built = parse_run(cells[i].doc);
    const auto traj = engine::run(built.run);
    json& mtr = cells[i].metrics;
    mtr["final_risk"] =
        losses::empirical_risk(built.run.model, *built.run.dataset, traj.final_avg());
    mtr["final_consensus"] = traj.consensus.back();
    mtr["lambda"] = built.run.topology->at(1).lambda();
    mtr["precondition_met"] = traj.warnings.empty();
  });

  Report report;
  report.kind = "sweep";
  report.config_echo = config.document;
  report.config_hash = config_hash_of(config.document);
  CsvTable table{"cells",
                 {"m", "n", "T", "eta", "topology", "seed", "lambda", "final_risk",
                  "final_consensus", "precondition_met"},
                 {}};
  json rows = json::array();
  for (const auto& cell : cells) {
    table.add_row({cell.doc.at("topology").at("m").dump(), cell.doc.at("data").at("n").dump(),
                   cell.doc.at("iterations").dump(),
                   cell.doc.at("schedule").value("eta", 0.0) == 0.0
                       ? cell.doc.at("schedule").at("kind").get<std::string>()
                       : format_double(cell.doc.at("schedule").at("eta").get<double>()),
                   cell.doc.at("topology").at("kind").get<std::string>(),
                   cell.doc.at("master_seed").dump(),
                   format_double(cell.metrics.at("lambda").get<double>()),
                   format_double(cell.metrics.at("final_risk").get<double>()),
                   format_double(cell.metrics.at("final_consensus").get<double>()),
                   cell.metrics.at("precondition_met").get<bool>() ? "1" : "0"});
    json row = cell.metrics;
    row["config"] = cell.doc;
    rows.push_back(std::move(row));
  }
  report.tables.push_back(std::move(table));
  report.metrics["cells"] = rows;
  report.metrics["cell_count"] = cells.size();
  report.wall_seconds = exp_detail::wall_since(t0);
  return report;
}

// ── dispatch ──────────────────────────────────────────────────────────────

// Executes the declared experiment kind, one report per seed in the batch
// (a single report when no 'seeds' key is present). For sweeps the batch
// is folded into the grid's seed axis instead.
inline std::vector<Report> run_experiment(const ExperimentConfig& config, int jobs) {
  const auto seeds = config.seed_batch();
  auto with_seed = [&](std::uint64_t seed) {
    json doc = config.document;
    doc.erase("seeds");
    doc["run"]["master_seed"] = seed;
    doc["run"]["data"]["seed"] = seed;
    return ExperimentConfig::parse(doc);
  };

  std::vector<Report> reports;
  switch (config.kind) {
    case ExperimentKind::kSingleRun:
      if (seeds.empty()) {
        reports.push_back(run_single(config));
      } else {
        for (std::uint64_t s : seeds) reports.push_back(run_single(with_seed(s)));
      }
      break;
    case ExperimentKind::kTwin:
      if (seeds.empty()) {
        reports.push_back(run_twin(config, jobs));
      } else {
        for (std::uint64_t s : seeds) reports.push_back(run_twin(with_seed(s), jobs));
      }
      break;
    case ExperimentKind::kBoundEval:
      reports.push_back(run_bound_eval(config));
      break;
    case ExperimentKind::kSweep: {
      json doc = config.document;
      if (!seeds.empty() && !doc.at("sweep").at("grid").contains("seed")) {
        json axis = json::array();
        for (std::uint64_t s : seeds) axis.push_back(s);
        doc["sweep"]["grid"]["seed"] = axis;
        doc.erase("seeds");
      }
      reports.push_back(run_sweep(ExperimentConfig::parse(doc), jobs));
      break;
    }
    case ExperimentKind::kVerifySuite:
      reports.push_back(verify_report(run_verify_suite(jobs), config.document));
      break;
  }
  return reports;
}

}  // namespace dsgd::harness
