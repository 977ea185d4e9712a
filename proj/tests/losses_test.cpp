#include "dsgd/losses.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"

using namespace dsgd;
using namespace dsgd::losses;

namespace {

LossModel logistic_model(int dim = 3, double W = 2.0, double B = 1.0) {
  return make_model(Family::kLogistic, dim, W, B);
}

std::vector<LossModel> all_families(int dim = 3) {
  return {
      make_model(Family::kLogistic, dim, 2.0, 1.0),
      make_model(Family::kRidgeLogistic, dim, 2.0, 1.0, 0.5),
      make_model(Family::kQuadratic, 1, 2.0, 1.0, 1.0),
      make_model(Family::kSaturating, dim, 2.0, 1.0),
  };
}

}  // namespace

TEST(LossEval, LogisticAtOriginIsLogTwo) {
  const auto model = logistic_model();
  rng::Stream stream(rng::key_of(1, 2));
  for (int i = 0; i < 20; ++i) {
    const auto z = oracles::random_sample(stream, 3, 1.0);
    EXPECT_DOUBLE_EQ(loss_eval(model, Eigen::VectorXd::Zero(3), z), std::log(2.0));
  }
}

TEST(LossEval, QuadraticVanishesAtItsSample) {
  const auto model = make_model(Family::kQuadratic, 1, 2.0, 1.0, 1.0);
  Sample z{Eigen::VectorXd::Ones(1), 0.7};
  Eigen::VectorXd w(1);
  w << 0.7;
  EXPECT_DOUBLE_EQ(loss_eval(model, w, z), 0.0);
}

TEST(LossEval, QuadraticScalarTargetFormInHigherDim) {
  // dim > 1: f = (mu/2)(<x,w> - y)^2 with gradient mu(<x,w> - y) x.
  const auto model = make_model(Family::kQuadratic, 3, 5.0, 2.0, 0.5);
  Sample z{Eigen::Vector3d(1.0, -1.0, 0.5), 0.25};
  Eigen::VectorXd w(3);
  w << 0.2, 0.1, -0.4;
  const double u = z.x.dot(w) - z.y;
  EXPECT_DOUBLE_EQ(loss_eval(model, w, z), 0.25 * u * u);
  EXPECT_LE((loss_grad(model, w, z) - 0.5 * u * z.x).norm(), 1e-15);
}

TEST(LossEval, SaturatingApproachesOneMonotonically) {
  const auto model = make_model(Family::kSaturating, 1, 100.0, 1.0);
  Sample z{Eigen::VectorXd::Ones(1), 0.0};
  double prev = -1.0;
  for (double u = 0.0; u <= 60.0; u += 0.5) {
    Eigen::VectorXd w(1);
    w << u;
    const double v = loss_eval(model, w, z);
    EXPECT_GT(v, prev);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  EXPECT_NEAR(prev, 1.0, 1e-3);
}

TEST(LossEval, DimensionMismatchThrows) {
  const auto model = logistic_model(3);
  Sample z{Eigen::VectorXd::Zero(2), 1.0};
  EXPECT_THROW(loss_eval(model, Eigen::VectorXd::Zero(3), z), ShapeError);
  EXPECT_THROW(loss_grad(model, Eigen::VectorXd::Zero(2), z), ShapeError);
}

TEST(LossGrad, LogisticAtOriginIsHalfSigmoid) {
  const auto model = logistic_model();
  rng::Stream stream(rng::key_of(2, 2));
  for (int i = 0; i < 20; ++i) {
    const auto z = oracles::random_sample(stream, 3, 1.0);
    const Eigen::VectorXd g = loss_grad(model, Eigen::VectorXd::Zero(3), z);
    EXPECT_LE((g - (-z.y / 2.0) * z.x).norm(), 1e-15);
  }
}

TEST(LossGrad, SaturatingIsStationaryAtFit) {
  const auto model = make_model(Family::kSaturating, 2, 2.0, 1.0);
  Sample z{Eigen::VectorXd::Zero(2), 0.0};  // u = <x,w> - y = 0 for any w
  EXPECT_DOUBLE_EQ(loss_grad(model, Eigen::VectorXd::Ones(2), z).norm(), 0.0);
}

TEST(LossGrad, MatchesCentralDifferencesEverywhere) {
  for (const auto& model : all_families()) {
    rng::Stream stream(rng::key_of(3, static_cast<std::uint64_t>(model.family)));
    for (int trial = 0; trial < 1000; ++trial) {
      const auto z = model.family == Family::kQuadratic
                         ? Sample{Eigen::VectorXd::Ones(1), stream.next_double() * 2 - 1}
                         : oracles::random_sample(stream, model.dim, model.feature_bound);
      const Eigen::VectorXd w =
          oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const Eigen::VectorXd g = loss_grad(model, w, z);
      const Eigen::VectorXd fd = oracles::finite_diff_grad(
          [&](const Eigen::VectorXd& u) { return loss_eval(model, u, z); }, w);
      EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm()))
          << family_name(model.family) << " trial " << trial;
    }
  }
}

// ── Constants ───────────────────────────────────────────────────────────────

TEST(Constants, LogisticClosedForms) {
  const auto c = constants(logistic_model(3, 2.0, 1.0));
  EXPECT_DOUBLE_EQ(c.L, 1.0);
  EXPECT_DOUBLE_EQ(c.beta, 0.25);
  EXPECT_NEAR(c.M, 2.1269280110429727, 1e-12);  // log(1 + e^2)
  EXPECT_DOUBLE_EQ(c.mu, 0.0);
}

TEST(Constants, LogisticLossBoundIsAttainedOnTheBall) {
  const auto model = logistic_model(3, 2.0, 1.0);
  const auto c = constants(model);
  rng::Stream stream(rng::key_of(4, 1));
  double best = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const auto z = oracles::random_sample(stream, 3, 1.0);
    const auto w = oracles::random_in_ball(stream, 3, 2.0);
    const double v = loss_eval(model, w, z);
    EXPECT_LE(v, c.M + 1e-12);
    best = std::max(best, v);
  }
  // Worst case needs w anti-aligned with y x on both boundaries.
  Sample z{Eigen::VectorXd::Unit(3, 0), 1.0};
  Eigen::VectorXd w = -2.0 * Eigen::VectorXd::Unit(3, 0);
  best = std::max(best, loss_eval(model, w, z));
  EXPECT_NEAR(best, c.M, 1e-9);
}

TEST(Constants, RidgeWithZeroMuIsLogistic) {
  const auto ridge = make_model(Family::kRidgeLogistic, 3, 2.0, 1.0, 0.0);
  const auto logi = logistic_model(3, 2.0, 1.0);
  const auto a = constants(ridge), b = constants(logi);
  EXPECT_DOUBLE_EQ(a.L, b.L);
  EXPECT_DOUBLE_EQ(a.beta, b.beta);
  EXPECT_DOUBLE_EQ(a.M, b.M);
}

TEST(Constants, SaturatingLipschitzFromPhiPrimeMaximum) {
  const auto c = constants(make_model(Family::kSaturating, 2, 2.0, 1.0));
  // 1-d maximization oracle for |phi'(u)| = |2u| / (1+u^2)^2.
  double best = 0.0;
  for (double u = -5.0; u <= 5.0; u += 1e-5) {
    best = std::max(best, std::abs(2.0 * u / ((1 + u * u) * (1 + u * u))));
  }
  EXPECT_NEAR(c.L, best, 1e-7);
  EXPECT_NEAR(c.L, 3.0 * std::sqrt(3.0) / 8.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.M, 1.0);
}

TEST(Constants, UnsetDomainThrows) {
  LossModel m = logistic_model();
  m.domain_radius = 0.0;
  EXPECT_THROW(constants(m), ConfigError);
}

// ── Projection ──────────────────────────────────────────────────────────────

TEST(Project, RadialScalingAndFixedPoints) {
  Eigen::VectorXd w(2);
  w << 3.0, 4.0;
  const Eigen::VectorXd p = project(w, 1.0);
  EXPECT_NEAR(p(0), 0.6, 1e-15);
  EXPECT_NEAR(p(1), 0.8, 1e-15);
  Eigen::VectorXd inside(2);
  inside << 0.1, -0.2;
  EXPECT_EQ(project(inside, 1.0), inside);
  EXPECT_EQ(project(Eigen::VectorXd::Zero(2), 1.0), Eigen::VectorXd::Zero(2));
}

// ── Empirical risk ──────────────────────────────────────────────────────────

TEST(EmpiricalRisk, SingleRepeatedSampleEqualsPointLoss) {
  const auto model = logistic_model(2, 2.0, 1.0);
  Sample z{Eigen::VectorXd::Constant(2, 0.5), 1.0};
  PartitionedDataset ds(2, 3, std::vector<Sample>(6, z), 1.0);
  Eigen::VectorXd w(2);
  w << 0.3, -0.7;
  EXPECT_DOUBLE_EQ(empirical_risk(model, ds, w), loss_eval(model, w, z));
  EXPECT_DOUBLE_EQ(node_risk(model, ds, 1, w), loss_eval(model, w, z));
}

TEST(EmpiricalRisk, QuadraticHandValue) {
  const auto model = make_model(Family::kQuadratic, 1, 5.0, 1.0, 1.0);
  const auto ds = oracles::scalar_dataset(1, 2, {0.0, 2.0});
  Eigen::VectorXd w(1);
  w << 1.0;
  EXPECT_DOUBLE_EQ(empirical_risk(model, ds, w), 0.5);
}

TEST(EmpiricalRisk, GradientIsMeanOfPointGradients) {
  const auto model = logistic_model(3, 2.0, 1.0);
  const auto ds = oracles::tiny_dataset(3, 4, 3, 1.0, 11);
  rng::Stream stream(rng::key_of(5, 1));
  const auto w = oracles::random_in_ball(stream, 3, 2.0);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) mean += loss_grad(model, w, ds.at(i, k));
  mean /= 12.0;
  EXPECT_LE((empirical_grad(model, ds, w) - mean).norm(), 1e-12);
}

// ── exact_variance ──────────────────────────────────────────────────────────

TEST(ExactVariance, IdenticalSamplesHaveZeroVariance) {
  const auto model = logistic_model(2, 2.0, 1.0);
  Sample z{Eigen::VectorXd::Constant(2, 0.5), 1.0};
  PartitionedDataset ds(3, 4, std::vector<Sample>(12, z), 1.0);
  EXPECT_DOUBLE_EQ(exact_variance(model, ds, Eigen::VectorXd::Zero(2)), 0.0);
}

TEST(ExactVariance, HandEnumeratedScalarCase) {
  // Gradients at w=1 are {1, -1}: node mean 0, variance 1, sigma^2 = 1.
  const auto model = make_model(Family::kQuadratic, 1, 5.0, 1.0, 1.0);
  const auto ds = oracles::scalar_dataset(1, 2, {0.0, 2.0});
  Eigen::VectorXd w(1);
  w << 1.0;
  EXPECT_DOUBLE_EQ(exact_variance(model, ds, w), 1.0);
}

TEST(ExactVariance, MatchesMonteCarloWithinThreeStandardErrors) {
  const auto model = logistic_model(3, 2.0, 1.0);
  const auto ds = oracles::tiny_dataset(2, 8, 3, 1.0, 23);
  rng::Stream wstream(rng::key_of(6, 9));
  for (int rep = 0; rep < 3; ++rep) {
    const auto w = oracles::random_in_ball(wstream, 3, 2.0);
    const double exact = exact_variance(model, ds, w);
    const Eigen::VectorXd full = empirical_grad(model, ds, w);
    rng::Stream mc(rng::key_of(7, static_cast<std::uint64_t>(rep)));
    const int draws = 20000;
    double mean = 0.0, mean_sq = 0.0;
    for (int d = 0; d < draws; ++d) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
      for (int i = 0; i < ds.nodes(); ++i)
        g += loss_grad(model, w, ds.at(i, static_cast<int>(mc.next_below(8))));
      g /= ds.nodes();
      const double v = (g - full).squaredNorm();
      mean += v;
      mean_sq += v * v;
    }
    mean /= draws;
    mean_sq /= draws;
    const double se = std::sqrt(std::max(0.0, mean_sq - mean * mean) / draws);
    EXPECT_NEAR(exact, mean, 3.0 * se + 1e-12);
  }
}

// ── minimizer oracle and gradient dominance ─────────────────────────────────

TEST(MinimizerOracle, QuadraticClosedFormMean) {
  const auto model = make_model(Family::kQuadratic, 1, 5.0, 1.0, 1.0);
  const auto ds = oracles::scalar_dataset(1, 2, {0.0, 2.0});
  const auto res = minimizer_oracle(model, ds, 1e-10);
  EXPECT_NEAR(res.w(0), 1.0, 1e-9);
  EXPECT_NEAR(res.risk, 0.5, 1e-12);
  EXPECT_LE(res.grad_norm, 1e-10);
}

TEST(MinimizerOracle, SymmetricRidgeDataMinimizesAtZero) {
  const auto model = make_model(Family::kRidgeLogistic, 2, 2.0, 1.0, 0.3);
  // Mirrored pairs (x, +1) and (x, -1) make the risk even in w.
  Sample a{Eigen::VectorXd::Constant(2, 0.5), 1.0};
  Sample b{a.x, -1.0};
  PartitionedDataset ds(2, 2, {a, b, a, b}, 1.0);
  const auto res = minimizer_oracle(model, ds, 1e-10);
  EXPECT_LE(res.w.norm(), 1e-8);
  EXPECT_LE(res.grad_norm, 1e-10);
}

TEST(MinimizerOracle, RefusesNonconvexFamily) {
  const auto model = make_model(Family::kSaturating, 1, 2.0, 1.0);
  const auto ds = oracles::scalar_dataset(1, 2, {0.0, 1.0});
  EXPECT_THROW(minimizer_oracle(model, ds, 1e-8), UnsupportedError);
}

TEST(PlCheck, HoldsForStronglyConvexFamilyWithGammaHalfMu) {
  const double mu = 0.4;
  const auto model = make_model(Family::kRidgeLogistic, 3, 2.0, 1.0, mu);
  const auto ds = oracles::tiny_dataset(2, 4, 3, 1.0, 31);
  const auto star = minimizer_oracle(model, ds, 1e-11);
  EXPECT_TRUE(pl_check(model, ds, star.w, mu / 2.0, star.risk));
  rng::Stream stream(rng::key_of(8, 3));
  for (int i = 0; i < 1000; ++i) {
    const auto w = oracles::random_in_ball(stream, 3, 2.0);
    EXPECT_TRUE(pl_check(model, ds, w, mu / 2.0, star.risk));
  }
  // An absurd gamma flips the inequality away from the minimizer.
  Eigen::VectorXd far = Eigen::VectorXd::Constant(3, 1.0);
  EXPECT_FALSE(pl_check(model, ds, far, 1e6 * mu, star.risk));
}

// ── Certificates on the declared ball ───────────────────────────────────────

TEST(Certificates, LipschitzAndSmoothnessHoldOnTheBall) {
  for (const auto& model : all_families()) {
    const auto c = constants(model);
    rng::Stream stream(rng::key_of(9, static_cast<std::uint64_t>(model.family)));
    for (int i = 0; i < 10000; ++i) {
      const auto z = model.family == Family::kQuadratic
                         ? Sample{Eigen::VectorXd::Ones(1), stream.next_double() * 2 - 1}
                         : oracles::random_sample(stream, model.dim, model.feature_bound);
      const auto w = oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const auto u = oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const double df = std::abs(loss_eval(model, w, z) - loss_eval(model, u, z));
      const double dg = (loss_grad(model, w, z) - loss_grad(model, u, z)).norm();
      const double dw = (w - u).norm();
      EXPECT_LE(df, c.L * dw + 1e-9) << family_name(model.family);
      EXPECT_LE(dg, c.beta * dw + 1e-9) << family_name(model.family);
    }
  }
}

TEST(Certificates, GradientStepIsNonExpansiveForConvexFamilies) {
  const std::vector<LossModel> convex = {
      make_model(Family::kLogistic, 3, 2.0, 1.0),
      make_model(Family::kRidgeLogistic, 3, 2.0, 1.0, 0.5),
      make_model(Family::kQuadratic, 1, 2.0, 1.0, 1.0),
  };
  for (const auto& model : convex) {
    const auto c = constants(model);
    const double eta = 2.0 / c.beta;
    rng::Stream stream(rng::key_of(10, static_cast<std::uint64_t>(model.family)));
    for (int i = 0; i < 10000; ++i) {
      const auto z = model.family == Family::kQuadratic
                         ? Sample{Eigen::VectorXd::Ones(1), stream.next_double() * 2 - 1}
                         : oracles::random_sample(stream, model.dim, model.feature_bound);
      const auto w = oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const auto u = oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const double after =
          (w - eta * loss_grad(model, w, z) - u + eta * loss_grad(model, u, z)).norm();
      EXPECT_LE(after, (w - u).norm() + 1e-9) << family_name(model.family);
    }
  }
}

TEST(Certificates, StronglyConvexStepContracts) {
  const std::vector<LossModel> strong = {
      make_model(Family::kRidgeLogistic, 3, 2.0, 1.0, 0.5),
      make_model(Family::kQuadratic, 1, 2.0, 1.0, 1.0),
  };
  for (const auto& model : strong) {
    const auto c = constants(model);
    const double eta = 1.0 / c.beta;
    const double factor = 1.0 - eta * c.mu / 2.0;
    rng::Stream stream(rng::key_of(11, static_cast<std::uint64_t>(model.family)));
    for (int i = 0; i < 10000; ++i) {
      const auto z = model.family == Family::kQuadratic
                         ? Sample{Eigen::VectorXd::Ones(1), stream.next_double() * 2 - 1}
                         : oracles::random_sample(stream, model.dim, model.feature_bound);
      const auto w = oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const auto u = oracles::random_in_ball(stream, model.dim, model.domain_radius);
      const double after =
          (w - eta * loss_grad(model, w, z) - u + eta * loss_grad(model, u, z)).norm();
      EXPECT_LE(after, factor * (w - u).norm() + 1e-9) << family_name(model.family);
    }
  }
}

// ── Dataset invariants ──────────────────────────────────────────────────────

TEST(PartitionedDataset, EnforcesFeatureBoundAndShape) {
  Sample big{Eigen::VectorXd::Constant(2, 3.0), 1.0};
  EXPECT_THROW(PartitionedDataset(1, 1, {big}, 1.0), ValidationError);
  Sample ok{Eigen::VectorXd::Constant(2, 0.5), 1.0};
  EXPECT_THROW(PartitionedDataset(2, 3, {ok, ok}, 1.0), ValidationError);
  PartitionedDataset ds(1, 2, {ok, ok}, 1.0);
  EXPECT_THROW(ds.at(1, 0), RangeError);
  EXPECT_THROW(ds.with_replacement(0, 0, big), ValidationError);
}
