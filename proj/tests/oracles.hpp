// oracles.hpp — independent reference computations for the test suite.
//
// Everything here is deliberately implemented on a different path from the
// library: the eigenvalue oracle is a hand-rolled cyclic Jacobi sweep (the
// library uses Eigen's solver), gradients come from central differences,
// and sums are brute-force. Test-only; never include from the library.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dsgd/common.hpp"
#include "dsgd/losses.hpp"

namespace oracles {

// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, sorted
// descending. Convergence when all off-diagonal mass is below 1e-13.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd A) {
  const auto n = A.rows();
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
  return ev;
}

// lambda = max(|lambda_2|, |lambda_m|) from the Jacobi oracle.
inline double jacobi_lambda(const Eigen::MatrixXd& A) {
  if (A.rows() == 1) return 0.0;
  const auto ev = jacobi_eigenvalues(A);
  return std::max(std::abs(ev[1]), std::abs(ev.back()));
}

// Central finite-difference gradient of f at w.
inline Eigen::VectorXd finite_diff_grad(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& w, double h = 1e-6) {
  Eigen::VectorXd g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::VectorXd lo = w, hi = w;
    lo(i) -= h;
    hi(i) += h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

// Uniform vector in the ball of the given radius.
inline Eigen::VectorXd random_in_ball(dsgd::rng::Stream& stream, int dim, double radius) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = stream.next_gaussian();
  const double r = radius * std::pow(stream.next_double(), 1.0 / dim);
  const double nrm = v.norm();
  if (nrm > 0) v *= r / nrm;
  return v;
}

// Random sample with ||x|| <= B and label in {-1, +1}.
inline dsgd::losses::Sample random_sample(dsgd::rng::Stream& stream, int dim, double B) {
  dsgd::losses::Sample z;
  z.x = random_in_ball(stream, dim, B);
  z.y = stream.next_double() < 0.5 ? -1.0 : 1.0;
  return z;
}

// Small synthetic logistic-style dataset for unit tests.
inline dsgd::losses::PartitionedDataset tiny_dataset(int m, int n, int dim, double B,
                                                     std::uint64_t seed) {
  dsgd::rng::Stream stream(dsgd::rng::key_of(seed, 0x74696e79ULL));
  std::vector<dsgd::losses::Sample> samples;
  samples.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  for (int i = 0; i < m * n; ++i) samples.push_back(random_sample(stream, dim, B));
  return {m, n, std::move(samples), B, seed};
}

// Scalar dataset for the quadratic family: x = 1, y = value.
inline dsgd::losses::PartitionedDataset scalar_dataset(int m, int n,
                                                       const std::vector<double>& ys) {
  std::vector<dsgd::losses::Sample> samples;
  for (double y : ys) {
    dsgd::losses::Sample z;
    z.x = Eigen::VectorXd::Ones(1);
    z.y = y;
    samples.push_back(z);
  }
  return {m, n, std::move(samples), 1.0, 0};
}

}  // namespace oracles
