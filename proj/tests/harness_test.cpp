#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "dsgd/config.hpp"
#include "dsgd/data.hpp"
#include "dsgd/experiment.hpp"
#include "dsgd/report.hpp"
#include "dsgd/verify.hpp"

using namespace dsgd;
using namespace dsgd::harness;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dsgdlab-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

json small_run_doc(int m = 2, int n = 4, long T = 20) {
  json run;
  run["model"] = {{"family", "logistic"}, {"dim", 3}, {"domain_radius", 2.0},
                  {"feature_bound", 1.0}};
  run["data"] = {{"source", "synthetic"}, {"n", n}, {"seed", 7}};
  run["topology"] = {{"kind", "ring"}, {"m", m}};
  run["schedule"] = {{"kind", "constant"}, {"eta", 0.1}};
  run["iterations"] = T;
  run["master_seed"] = 7;
  return run;
}

}  // namespace

// ── Synthetic data ──────────────────────────────────────────────────────────

TEST(Synthetic, DeterministicAndBounded) {
  SyntheticSpec spec;
  spec.m = 3;
  spec.n = 16;
  spec.dim = 5;
  spec.feature_bound = 0.8;
  spec.seed = 42;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_TRUE(a.dataset == b.dataset);
  EXPECT_EQ(a.w_true, b.w_true);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 16; ++k)
      EXPECT_LE(a.dataset.at(i, k).x.norm(), 0.8 + 1e-12);
  spec.seed = 43;
  EXPECT_FALSE(generate_synthetic(spec).dataset == a.dataset);
}

TEST(Synthetic, FlipRateNearOneTenth) {
  SyntheticSpec spec;
  spec.m = 1;
  spec.n = 100000;
  spec.dim = 4;
  spec.feature_bound = 1.0;
  spec.seed = 5;
  const auto out = generate_synthetic(spec);
  long flips = 0;
  for (int k = 0; k < spec.n; ++k) {
    const auto& z = out.dataset.at(0, k);
    const double clean = z.x.dot(out.w_true) >= 0.0 ? 1.0 : -1.0;
    if (z.y != clean) ++flips;
  }
  const double rate = static_cast<double>(flips) / spec.n;
  EXPECT_NEAR(rate, 0.1, 0.01);
}

TEST(Synthetic, ReplacementsAreFreshButDeterministic) {
  SyntheticSpec spec;
  spec.m = 2;
  spec.n = 8;
  spec.dim = 3;
  spec.feature_bound = 1.0;
  spec.seed = 11;
  const auto ds = generate_synthetic(spec).dataset;
  const auto r1 = fresh_replacement(spec, 1, 3);
  EXPECT_TRUE(r1 == fresh_replacement(spec, 1, 3));
  EXPECT_FALSE(r1 == fresh_replacement(spec, 1, 4));
  EXPECT_FALSE(r1 == ds.at(0, 2));  // not the training sample it replaces
  EXPECT_LE(r1.x.norm(), 1.0 + 1e-12);
}

// ── libsvm ingestion ────────────────────────────────────────────────────────

TEST(Libsvm, RoundTripsThroughTextAtMatchedBound) {
  TempDir tmp;
  // One feature vector pinned to the bound so rescaling is the identity.
  std::vector<losses::Sample> samples;
  losses::Sample a{Eigen::Vector2d(1.0, 0.0), 1.0};
  losses::Sample b{Eigen::Vector2d(0.25, -0.5), -1.0};
  losses::Sample c{Eigen::Vector2d(0.0, 0.75), 1.0};
  losses::Sample d{Eigen::Vector2d(-0.3, 0.1), -1.0};
  samples = {a, b, c, d};
  losses::PartitionedDataset ds(2, 2, samples, 1.0);
  const auto path = (tmp.path / "data.txt").string();
  write_libsvm(path, ds);
  const auto back = ingest_libsvm(path, 2, 2, 1.0);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      EXPECT_LE((back.at(i, k).x - ds.at(i, k).x).norm(), 1e-12);
      EXPECT_EQ(back.at(i, k).y, ds.at(i, k).y);
    }
}

TEST(Libsvm, RescalesMaxNormToTheBound) {
  TempDir tmp;
  const auto path = (tmp.path / "data.txt").string();
  std::ofstream(path) << "1 1:2.0 2:0.0\n-1 1:0.5\n1 2:1.0\n-1 1:0.1 2:0.1\n";
  const auto ds = ingest_libsvm(path, 2, 2, 0.7);
  double max_norm = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) max_norm = std::max(max_norm, ds.at(i, k).x.norm());
  EXPECT_NEAR(max_norm, 0.7, 1e-12);
}

TEST(Libsvm, MalformedTokenNamesTheLine) {
  TempDir tmp;
  const auto path = (tmp.path / "bad.txt").string();
  std::ofstream(path) << "1 1:0.5\n-1 broken\n";
  try {
    ingest_libsvm(path, 1, 2, 1.0);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Libsvm, InsufficientRowsIsAnError) {
  TempDir tmp;
  const auto path = (tmp.path / "short.txt").string();
  std::ofstream(path) << "1 1:0.5\n";
  EXPECT_THROW(ingest_libsvm(path, 2, 2, 1.0), IngestError);
}

// ── Config validation ───────────────────────────────────────────────────────

TEST(Config, UnknownKeysAreRejectedEverywhere) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc();
  EXPECT_NO_THROW(ExperimentConfig::parse(doc));

  json top = doc;
  top["surprise"] = 1;
  EXPECT_THROW(ExperimentConfig::parse(top), ConfigError);

  json run_level = doc;
  run_level["run"]["typo"] = true;
  EXPECT_THROW(ExperimentConfig::parse(run_level), ConfigError);

  json model_level = doc;
  model_level["run"]["model"]["stray"] = 0.5;
  EXPECT_THROW(ExperimentConfig::parse(model_level), ConfigError);

  json sched_level = doc;
  sched_level["run"]["schedule"]["etaa"] = 0.1;
  EXPECT_THROW(ExperimentConfig::parse(sched_level), ConfigError);
}

TEST(Config, MissingSectionsAreNamed) {
  json doc;
  doc["kind"] = "twin";
  doc["run"] = small_run_doc();
  try {
    ExperimentConfig::parse(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("twin"), std::string::npos);
  }
}

TEST(Config, DottedOverridesReachLeaves) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc();
  apply_override(doc, "run.schedule.eta=0.25");
  apply_override(doc, "run.topology.kind=complete");
  apply_override(doc, "run.projected=true");
  EXPECT_DOUBLE_EQ(doc["run"]["schedule"]["eta"].get<double>(), 0.25);
  EXPECT_EQ(doc["run"]["topology"]["kind"].get<std::string>(), "complete");
  EXPECT_TRUE(doc["run"]["projected"].get<bool>());
  EXPECT_THROW(apply_override(doc, "no-equals-sign"), ConfigError);
}

TEST(Config, TimeVaryingTopologyParses) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc(4, 4, 6);
  doc["run"]["topology"] = {
      {"kind", "cycle"},
      {"cycle", json::array({json{{"kind", "ring"}, {"m", 4}},
                             json{{"kind", "complete"}, {"m", 4}}})}};
  EXPECT_NO_THROW(ExperimentConfig::parse(doc));
  const auto report = run_single(ExperimentConfig::parse(doc));
  EXPECT_TRUE(report.metrics.contains("final_risk"));
}

// ── Reports ─────────────────────────────────────────────────────────────────

TEST(Report, CsvRoundTripsThroughTheBundledReader) {
  TempDir tmp;
  Report report;
  report.kind = "single-run";
  report.config_echo = {{"kind", "single-run"}};
  report.config_hash = config_hash_of(report.config_echo);
  report.metrics["x"] = 0.1 + 0.2;
  CsvTable table{"steps", {"step", "value"}, {}};
  table.add_row({"1", format_double(0.30000000000000004)});
  table.add_row({"2", format_double(1.0 / 3.0)});
  report.tables.push_back(table);
  const auto files = emit_report(report, tmp.path.string(), true, true);
  ASSERT_EQ(files.size(), 2u);
  const auto back = read_csv(files[1]);
  EXPECT_EQ(back.name, "steps");
  EXPECT_EQ(back.columns, table.columns);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(std::stod(back.rows[0][1]), 0.30000000000000004);
  EXPECT_EQ(std::stod(back.rows[1][1]), 1.0 / 3.0);
  EXPECT_NE(files[0].find(report.config_hash), std::string::npos);
}

TEST(Report, JsonShapeMatchesTheShippedSchema) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc();
  const auto report = run_single(ExperimentConfig::parse(doc));
  EXPECT_NO_THROW(validate_report_shape(report.to_json()));
  json broken = report.to_json();
  broken.erase("metrics");
  EXPECT_THROW(validate_report_shape(broken), ValidationError);
}

TEST(Report, IdenticalConfigsGiveIdenticalMetricBytes) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc(4, 8, 50);
  const auto a = run_single(ExperimentConfig::parse(doc));
  const auto b = run_single(ExperimentConfig::parse(doc));
  EXPECT_EQ(a.metric_payload(), b.metric_payload());
}

// ── Experiments ─────────────────────────────────────────────────────────────

TEST(Experiment, BoundEvalReproducesTheWorkedExample) {
  json doc;
  doc["kind"] = "bound-eval";
  doc["bounds"] = {{"L", 1.0},      {"beta", 1.0}, {"m", 4},
                   {"n", 25},       {"T", 100},    {"lambda", 1.0 / 3.0},
                   {"schedule", json{{"kind", "constant"}, {"eta", 0.1}}}};
  const auto report = run_bound_eval(ExperimentConfig::parse(doc));
  EXPECT_NEAR(report.metrics.at("convex_delta_constant").get<double>(), 6.2, 1e-9);
  EXPECT_NEAR(report.metrics.at("avg_weight_delta_constant").get<double>(), 3.2, 1e-9);
  EXPECT_NEAR(report.metrics.at("uniform_eps_expected").get<double>(), 6.2, 1e-9);
}

TEST(Experiment, TwinWithIdenticalReplacementStaysAtZero) {
  json doc;
  doc["kind"] = "twin";
  doc["run"] = small_run_doc(2, 4, 30);
  // Fetch the original sample and pass it back as the explicit replacement.
  const BuiltRun built = parse_run(doc["run"]);
  const auto& z = built.run.dataset->at(0, 1);
  std::vector<double> xs(z.x.data(), z.x.data() + z.x.size());
  doc["twin"] = {{"r", 1}, {"k", 2},
                 {"replacement", json{{"x", xs}, {"y", z.y}}}};
  const auto report = run_twin(ExperimentConfig::parse(doc), 1);
  EXPECT_DOUBLE_EQ(report.metrics.at("final_divergence").get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(report.metrics.at("eps_surrogate").get<double>(), 0.0);
  EXPECT_EQ(report.metrics.at("envelope_violations").get<long>(), 0);
}

TEST(Experiment, TwinSweepIsByteIdenticalAcrossJobs) {
  json doc;
  doc["kind"] = "twin";
  doc["run"] = small_run_doc(2, 4, 30);
  doc["twin"] = {{"sweep", true}};
  const auto a = run_twin(ExperimentConfig::parse(doc), 1);
  const auto b = run_twin(ExperimentConfig::parse(doc), 8);
  EXPECT_EQ(a.metric_payload(), b.metric_payload());
  EXPECT_EQ(a.metrics.at("envelope_violations").get<long>(), 0);
  EXPECT_TRUE(a.metrics.at("rms_le_uniform").get<bool>());
  const double rms = a.metrics.at("rms").get<double>();
  EXPECT_LE(rms, a.metrics.at("eps_uniform_measured").get<double>() + 1e-15);
}

TEST(Experiment, SweepCrossesTheGridDeterministically) {
  json doc;
  doc["kind"] = "sweep";
  doc["run"] = small_run_doc(2, 4, 10);
  doc["sweep"] = {{"grid", json{{"m", json::array({2, 4})},
                                {"seed", json::array({1, 2, 3})}}}};
  const auto a = run_sweep(ExperimentConfig::parse(doc), 1);
  const auto b = run_sweep(ExperimentConfig::parse(doc), 8);
  EXPECT_EQ(a.metrics.at("cell_count").get<int>(), 6);
  EXPECT_EQ(a.metric_payload(), b.metric_payload());
}

TEST(Experiment, SeedBatchYieldsOneReportPerSeed) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc(2, 4, 10);
  doc["seeds"] = json{{"count", 3}, {"base", 5}};
  const auto reports = run_experiment(ExperimentConfig::parse(doc), 1);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_NE(reports[0].metric_payload(), reports[1].metric_payload());
  EXPECT_EQ(reports[0].config_echo["run"]["master_seed"].get<int>(), 5);
  EXPECT_EQ(reports[2].config_echo["run"]["master_seed"].get<int>(), 7);

  json listed = doc;
  listed["seeds"] = json::array({5, 6, 7});
  const auto relisted = run_experiment(ExperimentConfig::parse(listed), 1);
  ASSERT_EQ(relisted.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(relisted[i].metrics.dump(), reports[i].metrics.dump());
}

TEST(Experiment, RegimeProjectionMismatchWarnsButRuns) {
  json doc;
  doc["kind"] = "single-run";
  doc["run"] = small_run_doc(2, 4, 10);
  doc["run"]["model"] = {{"family", "ridge-logistic"}, {"dim", 3},
                         {"domain_radius", 2.0}, {"feature_bound", 1.0}, {"mu", 0.1}};
  doc["run"]["regime"] = "strongly-convex";
  const auto report = run_single(ExperimentConfig::parse(doc));
  ASSERT_FALSE(report.warnings.empty());
  EXPECT_NE(report.warnings[0].find("projected"), std::string::npos);
  EXPECT_FALSE(report.metrics.at("precondition_met").get<bool>());
}

// ── A cheap slice of the verify suite ───────────────────────────────────────

TEST(Verify, FastCriteriaPassStandalone) {
  EXPECT_TRUE(criterion_01_topology(1).pass);
  EXPECT_TRUE(criterion_03_c_lambda(1).pass);
  const auto r9 = criterion_09_closed_forms(1);
  EXPECT_TRUE(r9.pass) << r9.detail;
}

TEST(Verify, ReportCollectsCriteria) {
  std::vector<CriterionResult> results = {criterion_01_topology(1),
                                          criterion_03_c_lambda(1)};
  const auto report = verify_report(results, json{{"kind", "verify-suite"}});
  EXPECT_TRUE(report.metrics.at("all_pass").get<bool>());
  EXPECT_EQ(report.tables.size(), 1u);
  EXPECT_EQ(report.tables[0].rows.size(), 2u);
}
