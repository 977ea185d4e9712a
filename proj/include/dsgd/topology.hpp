// topology.hpp — gossip matrices and their spectra.
//
// A gossip matrix P is symmetric, entrywise in [0,1], and doubly
// stochastic; its mixing rate is lambda = max(|lambda_2|, |lambda_m|) of
// the eigenvalue spectrum sorted descending. lambda = 0 is the complete
// graph, lambda -> 1 means no mixing; matrices with lambda >= 1 - 1e-12
// are rejected as disconnected. For a single node lambda is defined as 0.
//
// Named graph families use Metropolis-Hastings weights
//   P_ij = 1 / (1 + max(deg_i, deg_j))   for an edge {i, j},
// with the diagonal absorbing the residual mass. Time-varying schedules,
// matrix-product chains P^{T:t} = P^T P^{T-1} ... P^t, and the shifted
// matrices used by the local-model analysis live here too.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsgd/common.hpp"

namespace dsgd::topology {

inline constexpr double kConnectivityTol = 1e-12;
inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kChainTol = 1e-10;

// lambda = max(|lambda_2|, |lambda_m|) of a symmetric matrix; 0 for m = 1.
inline double spectral_gap_of(const Eigen::MatrixXd& sym) {
  const auto m = sym.rows();
  if (m == 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericsError("spectral_gap: eigendecomposition failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
  return std::max(std::abs(ev(m - 2)), std::abs(ev(0)));
}

class GossipMatrix {
 public:
  // Validates every gossip-matrix property; collects all violations into
  // one ValidationError so a bad explicit matrix is diagnosed in one shot.
  static GossipMatrix validated(Eigen::MatrixXd entries) {
    std::vector<std::string> violations;
    const auto rows = entries.rows();
    if (rows < 1 || entries.cols() != rows) {
      throw ValidationError("gossip matrix must be square with m >= 1, got " +
                            std::to_string(rows) + "x" +
                            std::to_string(entries.cols()));
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < rows; ++j) {
        if (!(entries(i, j) >= 0.0 && entries(i, j) <= 1.0)) {
          violations.push_back("entry (" + std::to_string(i) + "," +
                               std::to_string(j) + ") = " +
                               std::to_string(entries(i, j)) +
                               " outside [0,1]");
        }
        if (j > i && entries(i, j) != entries(j, i)) {
          violations.push_back("asymmetric at (" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
        }
      }
      const double rs = entries.row(i).sum();
      if (std::abs(rs - 1.0) > kRowSumTol) {
        violations.push_back("row " + std::to_string(i) + " sums to " +
                             std::to_string(rs));
      }
    }
    if (!violations.empty()) {
      std::ostringstream oss;
      oss << violations.size() << " violated properties:";
      for (const auto& v : violations) oss << " [" << v << "]";
      throw ValidationError(oss.str());
    }
    const double lambda = spectral_gap_of(entries);
    if (lambda >= 1.0 - kConnectivityTol) {
      throw ConnectivityError("lambda = " + std::to_string(lambda) +
                              " >= 1 - 1e-12; graph does not mix");
    }
    return GossipMatrix(std::move(entries), lambda);
  }

  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double lambda() const { return lambda_; }
  double min_diagonal() const { return entries_.diagonal().minCoeff(); }

 private:
  GossipMatrix(Eigen::MatrixXd e, double lambda)
      : entries_(std::move(e)), lambda_(lambda) {}

  Eigen::MatrixXd entries_;
  double lambda_;
};

inline double spectral_gap(const GossipMatrix& P) { return P.lambda(); }

// ── Named builders ────────────────────────────────────────────────────────

// Metropolis-Hastings weighting of an undirected simple graph given as
// per-node neighbor sets (no self loops).
inline GossipMatrix metropolis(const std::vector<std::set<int>>& neighbors) {
  const int m = static_cast<int>(neighbors.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const auto deg_i = static_cast<double>(neighbors[static_cast<std::size_t>(i)].size());
    for (int j : neighbors[static_cast<std::size_t>(i)]) {
      if (j == i) throw ValidationError("metropolis: self loop at node " + std::to_string(i));
      const auto deg_j = static_cast<double>(neighbors[static_cast<std::size_t>(j)].size());
      const double w = 1.0 / (1.0 + std::max(deg_i, deg_j));
      P(i, j) = w;
    }
  }
  for (int i = 0; i < m; ++i) P(i, i) = 1.0 - P.row(i).sum();
  // Re-symmetrize bitwise: w was computed identically for (i,j) and (j,i),
  // so only the diagonal needed filling; entries are exact as stored.
  return GossipMatrix::validated(std::move(P));
}

inline void require_positive_nodes(int m, const char* who) {
  if (m < 1) throw ValidationError(std::string(who) + ": m must be >= 1");
}

inline GossipMatrix complete(int m) {
  require_positive_nodes(m, "complete");
  std::vector<std::set<int>> nbrs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) nbrs[static_cast<std::size_t>(i)].insert(j);
  return metropolis(nbrs);
}

inline GossipMatrix ring(int m) {
  require_positive_nodes(m, "ring");
  std::vector<std::set<int>> nbrs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    if (m > 1) {
      nbrs[static_cast<std::size_t>(i)].insert((i + 1) % m);
      nbrs[static_cast<std::size_t>(i)].insert((i + m - 1) % m);
    }
  }
  return metropolis(nbrs);
}

inline GossipMatrix path(int m) {
  require_positive_nodes(m, "path");
  std::vector<std::set<int>> nbrs(static_cast<std::size_t>(m));
  for (int i = 0; i + 1 < m; ++i) {
    nbrs[static_cast<std::size_t>(i)].insert(i + 1);
    nbrs[static_cast<std::size_t>(i + 1)].insert(i);
  }
  return metropolis(nbrs);
}

// 2-d torus on an r x c grid with r the largest divisor of m not
// exceeding sqrt(m); degenerate dimensions collapse to a ring.
inline GossipMatrix torus2d(int m) {
  require_positive_nodes(m, "torus2d");
  int rows = 1;
  for (int d = 1; d * d <= m; ++d)
    if (m % d == 0) rows = d;
  const int cols = m / rows;
  std::vector<std::set<int>> nbrs(static_cast<std::size_t>(m));
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int self = id(r, c);
      const int cand[4] = {id((r + 1) % rows, c), id((r + rows - 1) % rows, c),
                           id(r, (c + 1) % cols), id(r, (c + cols - 1) % cols)};
      for (int j : cand)
        if (j != self) nbrs[static_cast<std::size_t>(self)].insert(j);
    }
  }
  return metropolis(nbrs);
}

// Random d-regular simple graph via the pairing model, retried until the
// pairing is simple and the resulting matrix mixes. Deterministic in seed.
inline GossipMatrix random_regular(int m, int degree, std::uint64_t seed) {
  require_positive_nodes(m, "random_regular");
  if (degree < 0 || degree >= std::max(m, 1))
    throw ValidationError("random_regular: need 0 <= degree < m");
  if ((static_cast<long>(m) * degree) % 2 != 0)
    throw ValidationError("random_regular: m * degree must be even");
  if (degree == 0 && m > 1)
    throw ConnectivityError("random_regular: degree 0 cannot connect m > 1 nodes");

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    rng::Stream stream(rng::key_of(seed, /*stream=*/0x7267656eULL, attempt));
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(degree));
    for (int i = 0; i < m; ++i)
      for (int d = 0; d < degree; ++d) stubs.push_back(i);
    // Fisher-Yates with the keyed stream.
    for (std::size_t i = stubs.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(stream.next_below(i));
      std::swap(stubs[i - 1], stubs[j]);
    }
    std::vector<std::set<int>> nbrs(static_cast<std::size_t>(m));
    bool simple = true;
    for (std::size_t p = 0; p + 1 < stubs.size(); p += 2) {
      const int a = stubs[p], b = stubs[p + 1];
      if (a == b || nbrs[static_cast<std::size_t>(a)].count(b)) {
        simple = false;
        break;
      }
      nbrs[static_cast<std::size_t>(a)].insert(b);
      nbrs[static_cast<std::size_t>(b)].insert(a);
    }
    if (!simple) continue;
    try {
      return metropolis(nbrs);
    } catch (const ConnectivityError&) {
      continue;  // disconnected pairing; re-draw
    }
  }
  throw ConnectivityError("random_regular: no connected graph in 1000 attempts");
}

inline GossipMatrix explicit_matrix(const Eigen::MatrixXd& entries) {
  return GossipMatrix::validated(entries);
}

// ── Time-varying schedules ────────────────────────────────────────────────

enum class ScheduleStyle { kStatic, kPeriodicCycle, kExplicitList };

class TopologySchedule {
 public:
  static TopologySchedule fixed(GossipMatrix P) {
    return TopologySchedule(ScheduleStyle::kStatic, {std::move(P)},
                            std::numeric_limits<long>::max());
  }
  static TopologySchedule cycle(std::vector<GossipMatrix> mats) {
    check_uniform(mats, "cycle");
    return TopologySchedule(ScheduleStyle::kPeriodicCycle, std::move(mats),
                            std::numeric_limits<long>::max());
  }
  static TopologySchedule explicit_list(std::vector<GossipMatrix> mats) {
    check_uniform(mats, "explicit_list");
    const auto horizon = static_cast<long>(mats.size());
    return TopologySchedule(ScheduleStyle::kExplicitList, std::move(mats), horizon);
  }

  // Gossip matrix for step t (1-based).
  const GossipMatrix& at(long t) const {
    if (t < 1 || t > horizon_)
      throw RangeError("topology step " + std::to_string(t) +
                       " outside [1, horizon]");
    switch (style_) {
      case ScheduleStyle::kStatic:
        return matrices_[0];
      case ScheduleStyle::kPeriodicCycle:
        return matrices_[static_cast<std::size_t>((t - 1) % static_cast<long>(matrices_.size()))];
      case ScheduleStyle::kExplicitList:
        return matrices_[static_cast<std::size_t>(t - 1)];
    }
    throw RangeError("unreachable");
  }

  int size() const { return matrices_[0].size(); }
  long horizon() const { return horizon_; }
  ScheduleStyle style() const { return style_; }
  bool is_static() const { return style_ == ScheduleStyle::kStatic; }
  const std::vector<GossipMatrix>& matrices() const { return matrices_; }

 private:
  TopologySchedule(ScheduleStyle style, std::vector<GossipMatrix> mats, long horizon)
      : style_(style), matrices_(std::move(mats)), horizon_(horizon) {
    if (matrices_.empty())
      throw ValidationError("topology schedule needs at least one matrix");
  }

  static void check_uniform(const std::vector<GossipMatrix>& mats, const char* who) {
    if (mats.empty())
      throw ValidationError(std::string(who) + ": empty matrix list");
    for (const auto& mat : mats)
      if (mat.size() != mats[0].size())
        throw ValidationError(std::string(who) + ": mixed node counts");
  }

  ScheduleStyle style_;
  std::vector<GossipMatrix> matrices_;
  long horizon_;
};

// ── Chains and shifts ─────────────────────────────────────────────────────

// P^{T:t} = P^T P^{T-1} ... P^t (a product of T - t + 1 factors). The
// result is checked doubly stochastic within 1e-10; it is generally not
// symmetric. Diagonal positivity is checked when every factor has a
// strictly positive diagonal.
inline Eigen::MatrixXd product_chain(const TopologySchedule& schedule, long t, long T) {
  if (t < 1 || t > T) throw RangeError("product_chain: need 1 <= t <= T");
  if (T > schedule.horizon()) throw RangeError("product_chain: T beyond schedule horizon");
  const int m = schedule.size();
  Eigen::MatrixXd prod = schedule.at(t).entries();
  bool positive_diagonals = schedule.at(t).min_diagonal() > 0.0;
  for (long s = t + 1; s <= T; ++s) {
    const GossipMatrix& factor = schedule.at(s);
    positive_diagonals = positive_diagonals && factor.min_diagonal() > 0.0;
    prod = factor.entries() * prod;
  }
  for (int i = 0; i < m; ++i) {
    if (std::abs(prod.row(i).sum() - 1.0) > kChainTol ||
        std::abs(prod.col(i).sum() - 1.0) > kChainTol)
      throw NumericsError("product_chain: result not doubly stochastic within 1e-10");
    if (positive_diagonals && !(prod(i, i) > 0.0 && prod(i, i) <= 1.0 + kChainTol))
      throw NumericsError("product_chain: diagonal left (0, 1]");
  }
  return prod;
}

// Shifted matrix for the strongly convex local recursion:
//   script-P = P - (eta * mu / 2) * I, row sums 1 - eta * mu / 2.
inline Eigen::MatrixXd shifted_strongly_convex(const GossipMatrix& P, double eta, double mu) {
  if (mu < 0.0 || eta < 0.0) throw ValidationError("shifted_strongly_convex: eta, mu >= 0");
  const double shift = eta * mu / 2.0;
  if (shift == 0.0) return P.entries();
  if (shift >= P.min_diagonal())
    throw ShiftError("eta * mu / 2 = " + std::to_string(shift) +
                     " >= min diagonal " + std::to_string(P.min_diagonal()) +
                     "; stepsize too large for this topology");
  Eigen::MatrixXd out = P.entries();
  out.diagonal().array() -= shift;
  return out;
}

// Shifted matrix for the nonconvex local recursion:
//   P-hat = P + eta * beta * E_{m/r}, where E_{m/r} is the identity with
// the r-th diagonal entry zeroed. node_r is 0-based.
inline Eigen::MatrixXd shifted_nonconvex(const GossipMatrix& P, double eta, double beta, int node_r) {
  if (node_r < 0 || node_r >= P.size())
    throw RangeError("shifted_nonconvex: node index out of range");
  Eigen::MatrixXd out = P.entries();
  const double shift = eta * beta;
  for (int i = 0; i < P.size(); ++i)
    if (i != node_r) out(i, i) += shift;
  return out;
}

}  // namespace dsgd::topology
