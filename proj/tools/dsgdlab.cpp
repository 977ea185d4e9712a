// dsgdlab — command-line front end for the D-SGD stability lab.
//
//   dsgdlab topology --kind ring --m 4          inspect a gossip matrix
//   dsgdlab run      --config cfg.json          one trajectory
//   dsgdlab twin     --config cfg.json          coupled twin run / sweep
//   dsgdlab bounds   --config cfg.json          closed-form bound evaluation
//   dsgdlab sweep    --config cfg.json          grid of runs
//   dsgdlab verify                              the acceptance suite
//   dsgdlab gen-data --out data.txt ...         synthetic dataset to libsvm text
//
// Exit codes: 0 success, 1 validation error, 2 criterion failure (verify),
// 3 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "dsgd/config.hpp"
#include "dsgd/data.hpp"
#include "dsgd/experiment.hpp"
#include "dsgd/report.hpp"
#include "dsgd/topology.hpp"
#include "dsgd/verify.hpp"

namespace {

using dsgd::harness::ExperimentConfig;
using dsgd::harness::ExperimentKind;
using dsgd::harness::json;
using dsgd::harness::Report;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string formats;  // empty: config's output.formats, else csv,json
  int jobs = 0;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config JSON");
  if (config_required) c->required();
  cmd->add_option("--set", opts.overrides, "override a leaf key, e.g. run.schedule.eta=0.2");
  cmd->add_option("--out", opts.out_dir, "output directory for reports");
  cmd->add_option("--format", opts.formats, "comma list of csv,json (default both)");
  cmd->add_option("--jobs", opts.jobs, "worker threads (default: logical cores)");
  cmd->add_option("--seed", opts.seed, "override run.master_seed");
}

ExperimentConfig load_config(const CommonOpts& opts, const std::string& kind) {
  json doc;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw dsgd::ConfigError("cannot open config '" + opts.config_path + "'");
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw dsgd::ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
  }
  doc["kind"] = kind;
  for (const auto& assignment : opts.overrides)
    dsgd::harness::apply_override(doc, assignment);
  if (opts.seed >= 0) {
    if (doc.contains("run")) {
      doc["run"]["master_seed"] = opts.seed;
      if (doc["run"].contains("data")) doc["run"]["data"]["seed"] = opts.seed;
    }
  }
  return ExperimentConfig::parse(doc);
}

void emit(const Report& report, const CommonOpts& opts) {
  // CLI flags win; the config's output section fills the gaps.
  std::string out_dir = opts.out_dir;
  std::string formats = opts.formats;
  if (report.config_echo.contains("output")) {
    const json& o = report.config_echo.at("output");
    if (out_dir.empty() && o.contains("dir")) out_dir = o.at("dir").get<std::string>();
    if (formats.empty() && o.contains("formats")) {
      for (const auto& f : o.at("formats"))
        formats += (formats.empty() ? "" : ",") + f.get<std::string>();
    }
  }
  if (formats.empty()) formats = "csv,json";
  const bool want_csv = formats.find("csv") != std::string::npos;
  const bool want_json = formats.find("json") != std::string::npos;
  if (!out_dir.empty()) {
    for (const auto& path :
         dsgd::harness::emit_report(report, out_dir, want_json, want_csv))
      std::cout << "wrote " << path << "\n";
  } else {
    std::cout << report.to_json().dump(2) << "\n";
  }
  for (const auto& warning : report.warnings)
    std::cerr << "warning: " << warning << "\n";
}

void emit_all(const std::vector<Report>& reports, const CommonOpts& opts) {
  for (const auto& report : reports) emit(report, opts);
}

int run_verify(const CommonOpts& opts) {
  const auto results = dsgd::harness::run_verify_suite(opts.jobs);
  bool all = true;
  for (const auto& res : results) {
    all = all && res.pass;
    std::printf("[%2d/15] %s %-38s (%6.2f s)  %s\n", res.id,
                res.pass ? "PASS" : "FAIL", res.name.c_str(), res.seconds,
                res.detail.c_str());
  }
  std::printf("verify: %s\n", all ? "all criteria passed" : "CRITERIA FAILED");
  json echo;
  echo["kind"] = "verify-suite";
  echo["jobs"] = opts.jobs;
  const Report report = dsgd::harness::verify_report(results, echo);
  if (!opts.out_dir.empty()) {
    const std::string formats = opts.formats.empty() ? "csv,json" : opts.formats;
    const bool want_csv = formats.find("csv") != std::string::npos;
    const bool want_json = formats.find("json") != std::string::npos;
    for (const auto& path :
         dsgd::harness::emit_report(report, opts.out_dir, want_json, want_csv))
      std::cout << "wrote " << path << "\n";
  }
  return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dsgdlab — decentralized-SGD stability laboratory"};
  app.require_subcommand(1);

  // topology
  auto* topo_cmd = app.add_subcommand("topology", "build a gossip matrix and report lambda");
  std::string topo_kind = "ring";
  int topo_m = 4;
  int topo_degree = 2;
  long long topo_seed = 1;
  bool topo_print = false;
  topo_cmd->add_option("--kind", topo_kind, "complete|ring|path|torus2d|random-regular");
  topo_cmd->add_option("--m", topo_m, "node count")->required();
  topo_cmd->add_option("--degree", topo_degree, "degree for random-regular");
  topo_cmd->add_option("--seed", topo_seed, "seed for random-regular");
  topo_cmd->add_flag("--entries", topo_print, "also print the matrix entries");

  CommonOpts run_opts, twin_opts, bounds_opts, sweep_opts, verify_opts;
  auto* run_cmd = app.add_subcommand("run", "execute one D-SGD trajectory");
  add_common(run_cmd, run_opts, true);
  auto* twin_cmd = app.add_subcommand("twin", "coupled twin run or full (r,k) sweep");
  add_common(twin_cmd, twin_opts, true);
  auto* bounds_cmd = app.add_subcommand("bounds", "evaluate closed-form bounds");
  add_common(bounds_cmd, bounds_opts, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "grid of single runs");
  add_common(sweep_cmd, sweep_opts, true);
  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
  add_common(verify_cmd, verify_opts, false);

  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset as libsvm text");
  std::string gen_out;
  int gen_m = 4, gen_n = 16, gen_dim = 5;
  double gen_b = 1.0;
  std::string gen_rule = "sign-flip";
  long long gen_seed = 1;
  gen_cmd->add_option("--out", gen_out, "output file")->required();
  gen_cmd->add_option("--m", gen_m, "nodes");
  gen_cmd->add_option("--n", gen_n, "samples per node");
  gen_cmd->add_option("--dim", gen_dim, "feature dimension");
  gen_cmd->add_option("--b", gen_b, "feature norm bound");
  gen_cmd->add_option("--rule", gen_rule, "sign-flip|linear-noise");
  gen_cmd->add_option("--seed", gen_seed, "generation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (topo_cmd->parsed()) {
      const auto P = dsgd::harness::build_named_topology(
          topo_kind, topo_m,
          json{{"degree", topo_degree}, {"seed", topo_seed}}, "topology");
      std::cout << "kind=" << topo_kind << " m=" << P.size()
                << " lambda=" << dsgd::harness::format_double(P.lambda())
                << " min_diag=" << dsgd::harness::format_double(P.min_diagonal()) << "\n";
      if (topo_print) std::cout << P.entries() << "\n";
      return 0;
    }
    if (run_cmd->parsed()) {
      emit_all(dsgd::harness::run_experiment(load_config(run_opts, "single-run"),
                                             run_opts.jobs),
               run_opts);
      return 0;
    }
    if (twin_cmd->parsed()) {
      emit_all(dsgd::harness::run_experiment(load_config(twin_opts, "twin"),
                                             twin_opts.jobs),
               twin_opts);
      return 0;
    }
    if (bounds_cmd->parsed()) {
      emit_all(dsgd::harness::run_experiment(load_config(bounds_opts, "bound-eval"),
                                             bounds_opts.jobs),
               bounds_opts);
      return 0;
    }
    if (sweep_cmd->parsed()) {
      emit_all(dsgd::harness::run_experiment(load_config(sweep_opts, "sweep"),
                                             sweep_opts.jobs),
               sweep_opts);
      return 0;
    }
    if (verify_cmd->parsed()) return run_verify(verify_opts);
    if (gen_cmd->parsed()) {
      dsgd::harness::SyntheticSpec spec;
      spec.m = gen_m;
      spec.n = gen_n;
      spec.dim = gen_dim;
      spec.feature_bound = gen_b;
      spec.seed = static_cast<std::uint64_t>(gen_seed);
      if (gen_rule == "sign-flip") spec.rule = dsgd::harness::LabelRule::kSignFlip;
      else if (gen_rule == "linear-noise") spec.rule = dsgd::harness::LabelRule::kLinearNoise;
      else throw dsgd::ConfigError("unknown rule '" + gen_rule + "'");
      dsgd::harness::write_libsvm(gen_out, dsgd::harness::generate_synthetic(spec).dataset);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }
  } catch (const dsgd::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsgd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsgd::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsgd::RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsgd::IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsgd::ConnectivityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dsgd::Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
