#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbsl/matrix.hpp"
#include "nbsl/rng.hpp"

namespace nbsl {

// Scalar parameter varying with time (mixing strength, edge probability, ...).
struct ParamSchedule {
  enum class Kind { constant, cycle, harmonic };
  Kind kind = Kind::constant;
  double value = 1.0;
  std::vector<double> values;

  static ParamSchedule constant(double v) { return {Kind::constant, v, {}}; }
  static ParamSchedule cycle(std::vector<double> vs) {
    if (vs.empty()) throw std::invalid_argument("param cycle: empty");
    return {Kind::cycle, 0.0, std::move(vs)};
  }
  static ParamSchedule harmonic() { return {Kind::harmonic, 0.0, {}}; }

  double at(std::size_t t) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::cycle: return values[t % values.size()];
      case Kind::harmonic: return 1.0 / static_cast<double>(t + 1);
    }
    return value;
  }
};

// Per-agent inertia weights, possibly cycling over time.
struct LambdaSchedule {
  std::vector<std::vector<double>> cycle;  // one or more vectors; index t % size

  static LambdaSchedule constant(std::vector<double> lambda) {
    LambdaSchedule s;
    s.cycle.push_back(std::move(lambda));
    return s;
  }

  const std::vector<double>& at(std::size_t t) const { return cycle[t % cycle.size()]; }

  double max_value() const {
    double m = 0.0;
    for (const auto& v : cycle)
      for (const double x : v) m = std::max(m, x);
    return m;
  }

  bool valid_range() const {
    for (const auto& v : cycle)
      for (const double x : v)
        if (x < 0.0 || x > 1.0) return false;
    return true;
  }
};

// One realization of a link-failure step: every off-diagonal edge of the base
// is dropped independently with probability rho, and the dropped mass moves to
// the diagonal so the row stays stochastic.
inline StochasticMatrix link_failure_sample(const StochasticMatrix& base, double rho,
                                            RngStream& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("link_failure_sample: rho out of range");
  const std::size_t n = base.size();
  MatrixBuilder out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double diag = base(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = base(i, j);
      if (w == 0.0) continue;
      if (rng.bernoulli(rho)) {
        diag += w;  // failed link: agent falls back on itself
      } else {
        out.at(i, j) = w;
      }
    }
    out.at(i, i) = diag;
  }
  return std::move(out).build();
}

// Random digraph step: each directed edge (j -> i) present independently with
// probability rho; row weights uniform over self plus in-neighbors, so the
// diagonal stays at least 1/n.
inline StochasticMatrix erdos_renyi_sample(std::size_t n, double rho, RngStream& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("erdos_renyi_sample: rho out of range");
  std::vector<char> present(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) present[i * n + j] = rng.bernoulli(rho) ? 1 : 0;
  MatrixBuilder out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t indeg = 0;
    for (std::size_t j = 0; j < n; ++j) indeg += present[i * n + j];
    const double w = 1.0 / static_cast<double>(1 + indeg);
    out.at(i, i) = w;
    for (std::size_t j = 0; j < n; ++j)
      if (present[i * n + j]) out.at(i, j) = w;
  }
  return std::move(out).build();
}

// 2n-agent matrix pairing every agent with an inertial copy: the self weight
// a_ii splits into b_i = (1-lambda_i) a_ii toward the Bayesian step and
// w_i = lambda_i a_ii toward the copy, off-diagonal weights split evenly
// between originals and copies. Satisfies entrywise
// out_{ij} >= min{1 - lambda_max, 1/2} a_ij on the leading n x n block.
inline StochasticMatrix inertial_augmented(const StochasticMatrix& a,
                                           std::span<const double> lambda) {
  const std::size_t n = a.size();
  if (lambda.size() != n) throw std::invalid_argument("inertial_augmented: lambda size mismatch");
  for (const double l : lambda)
    if (l < 0.0 || l > 1.0)
      throw std::invalid_argument("inertial_augmented: lambda outside [0,1]");
  MatrixBuilder out(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = (1.0 - lambda[i]) * a(i, i);
    const double w = lambda[i] * a(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      const double half = (i == j) ? 0.0 : a(i, j) / 2.0;
      const double top_left = half + (i == j ? b : 0.0);
      const double top_right = half + (i == j ? w : 0.0);
      out.at(i, j) = top_left;
      out.at(i, n + j) = top_right;
      out.at(n + i, j) = top_right;
      out.at(n + i, n + j) = top_left;
    }
  }
  return std::move(out).build();
}

// 2n-agent pair of matrices rewriting one diffusion-adaptation step as two
// standard steps: the even-time matrix built from the previous original matrix
// and the odd-time identity.
inline std::pair<StochasticMatrix, StochasticMatrix> diffusion_augmented_pair(
    const StochasticMatrix& a_prev) {
  const std::size_t n = a_prev.size();
  MatrixBuilder even(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double hat = (i == j) ? 0.0 : a_prev(i, j);
      const double w = (i == j) ? a_prev(i, i) : 0.0;
      even.at(i, j) = hat / 2.0;
      even.at(i, n + j) = hat / 2.0 + w;
      even.at(n + i, j) = hat / 2.0 + w;
      even.at(n + i, n + j) = hat / 2.0;
    }
  }
  return {std::move(even).build(), StochasticMatrix::identity(2 * n)};
}

// Generator for a (possibly random) sequence of influence matrices. Immutable;
// matrices are produced lazily per time step. Deterministic kinds never touch
// the RNG; random kinds consume a fixed number of draws per step, so walking
// t = 0, 1, 2, ... over one dedicated stream is reproducible.
class ChainSpec {
 public:
  enum class Kind {
    periodic_deterministic,
    liu14,
    link_failure,
    erdos_renyi,
    noisy_example,
    inertial_augmented,
    diffusion_augmented,
    pow2_bursts,
  };

  static ChainSpec periodic(std::vector<StochasticMatrix> matrices) {
    if (matrices.empty()) throw std::invalid_argument("periodic chain: needs >= 1 matrix");
    const std::size_t n = matrices.front().size();
    for (const auto& m : matrices)
      if (m.size() != n) throw std::invalid_argument("periodic chain: mixed dimensions");
    ChainSpec s(Kind::periodic_deterministic, n);
    s.matrices_ = std::move(matrices);
    return s;
  }

  static ChainSpec liu14(StochasticMatrix base, ParamSchedule eta) {
    ChainSpec s(Kind::liu14, base.size());
    s.matrices_ = {std::move(base)};
    s.schedule_ = std::move(eta);
    return s;
  }

  static ChainSpec link_failure(StochasticMatrix base, double rho) {
    if (rho < 0.0 || rho >= 1.0)
      throw std::invalid_argument("link_failure chain: rho must lie in [0,1)");
    ChainSpec s(Kind::link_failure, base.size());
    s.matrices_ = {std::move(base)};
    s.rho_ = rho;
    return s;
  }

  static ChainSpec erdos_renyi(std::size_t n, ParamSchedule rho) {
    if (n == 0) throw std::invalid_argument("erdos_renyi chain: n == 0");
    ChainSpec s(Kind::erdos_renyi, n);
    s.schedule_ = std::move(rho);
    return s;
  }

  // Even times emit `even`; odd times emit odd_base plus or minus the noise
  // matrix with equal probability. Both noisy realizations must themselves be
  // stochastic, which is verified here once.
  static ChainSpec noisy_example(StochasticMatrix even, StochasticMatrix odd_base,
                                 const std::vector<std::vector<double>>& noise) {
    const std::size_t n = even.size();
    if (odd_base.size() != n || noise.size() != n)
      throw std::invalid_argument("noisy_example chain: mixed dimensions");
    std::vector<std::vector<double>> plus = odd_base.to_rows();
    std::vector<std::vector<double>> minus = odd_base.to_rows();
    for (std::size_t i = 0; i < n; ++i) {
      if (noise[i].size() != n) throw std::invalid_argument("noisy_example chain: noise not square");
      for (std::size_t j = 0; j < n; ++j) {
        plus[i][j] += noise[i][j];
        minus[i][j] -= noise[i][j];
      }
    }
    ChainSpec s(Kind::noisy_example, n);
    s.matrices_ = {std::move(even), std::move(odd_base),
                   StochasticMatrix::from_rows(plus), StochasticMatrix::from_rows(minus)};
    return s;
  }

  static ChainSpec inertial_augmentation(ChainSpec inner, LambdaSchedule lambda) {
    if (!lambda.valid_range())
      throw std::invalid_argument("inertial chain: lambda outside [0,1]");
    for (const auto& v : lambda.cycle)
      if (v.size() != inner.agent_count())
        throw std::invalid_argument("inertial chain: lambda size mismatch");
    ChainSpec s(Kind::inertial_augmented, 2 * inner.agent_count());
    s.inner_ = std::make_shared<ChainSpec>(std::move(inner));
    s.lambda_ = std::move(lambda);
    return s;
  }

  static ChainSpec diffusion_augmentation(ChainSpec inner) {
    ChainSpec s(Kind::diffusion_augmented, 2 * inner.agent_count());
    s.inner_ = std::make_shared<ChainSpec>(std::move(inner));
    return s;
  }

  // Initial matrix at t = 0, `even_exp` at t = 2^{2k}, `odd_exp` at
  // t = 2^{2k+1}, identity elsewhere. Connectivity bursts spread apart
  // geometrically, so no window length makes the chain B-connected.
  static ChainSpec pow2_bursts(StochasticMatrix initial, StochasticMatrix even_exp,
                               StochasticMatrix odd_exp) {
    const std::size_t n = initial.size();
    if (even_exp.size() != n || odd_exp.size() != n)
      throw std::invalid_argument("pow2_bursts chain: mixed dimensions");
    ChainSpec s(Kind::pow2_bursts, n);
    s.matrices_ = {std::move(initial), std::move(even_exp), std::move(odd_exp)};
    return s;
  }

  Kind kind() const { return kind_; }
  std::size_t agent_count() const { return n_; }
  const ChainSpec& inner() const {
    if (!inner_) throw std::logic_error("chain has no inner spec");
    return *inner_;
  }
  const LambdaSchedule& lambda() const { return lambda_; }
  double rho() const { return rho_; }
  const ParamSchedule& schedule() const { return schedule_; }
  const std::vector<StochasticMatrix>& matrices() const { return matrices_; }

  bool is_random() const {
    switch (kind_) {
      case Kind::link_failure:
      case Kind::erdos_renyi:
      case Kind::noisy_example: return true;
      case Kind::inertial_augmented:
      case Kind::diffusion_augmented: return inner_->is_random();
      default: return false;
    }
  }

  // A(t). Random kinds draw from `rng`; deterministic kinds are pure in t.
  StochasticMatrix matrix_at(std::size_t t, RngStream& rng) const {
    switch (kind_) {
      case Kind::periodic_deterministic: return matrices_[t % matrices_.size()];
      case Kind::liu14: return convex_with_identity(matrices_[0], schedule_.at(t));
      case Kind::link_failure: return link_failure_sample(matrices_[0], rho_, rng);
      case Kind::erdos_renyi: return erdos_renyi_sample(n_, schedule_.at(t), rng);
      case Kind::noisy_example:
        if (t % 2 == 0) return matrices_[0];
        return rng.bernoulli(0.5) ? matrices_[2] : matrices_[3];
      case Kind::inertial_augmented:
        return inertial_augmented(inner_->matrix_at(t, rng), lambda_.at(t));
      case Kind::diffusion_augmented: {
        if (t == 0 || t % 2 == 1) return StochasticMatrix::identity(n_);
        return diffusion_augmented_pair(inner_->matrix_at(t / 2 - 1, rng)).first;
      }
      case Kind::pow2_bursts: return pow2_matrix(t);
    }
    throw std::logic_error("matrix_at: unknown chain kind");
  }

  // E[A(t)]; exact per kind.
  StochasticMatrix expected_at(std::size_t t) const {
    switch (kind_) {
      case Kind::periodic_deterministic: return matrices_[t % matrices_.size()];
      case Kind::liu14: return convex_with_identity(matrices_[0], schedule_.at(t));
      case Kind::link_failure: return expected_link_failure();
      case Kind::erdos_renyi: return expected_erdos_renyi(schedule_.at(t));
      case Kind::noisy_example: return t % 2 == 0 ? matrices_[0] : matrices_[1];
      case Kind::inertial_augmented:
        return inertial_augmented(inner_->expected_at(t), lambda_.at(t));
      case Kind::diffusion_augmented: {
        if (t == 0 || t % 2 == 1) return StochasticMatrix::identity(n_);
        return diffusion_augmented_pair(inner_->expected_at(t / 2 - 1)).first;
      }
      case Kind::pow2_bursts: return pow2_matrix(t);
    }
    throw std::logic_error("expected_at: unknown chain kind");
  }

 private:
  ChainSpec(Kind kind, std::size_t n) : kind_(kind), n_(n) {}

  static StochasticMatrix convex_with_identity(const StochasticMatrix& a, double eta) {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("mixing parameter outside [0,1]");
    const std::size_t n = a.size();
    MatrixBuilder out(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out.at(i, j) = eta * a(i, j) + (i == j ? 1.0 - eta : 0.0);
    return std::move(out).build();
  }

  StochasticMatrix pow2_matrix(std::size_t t) const {
    if (t == 0) return matrices_[0];
    const bool is_pow2 = (t & (t - 1)) == 0;
    if (!is_pow2) return StochasticMatrix::identity(n_);
    const unsigned k = static_cast<unsigned>(std::countr_zero(t));
    return k % 2 == 0 ? matrices_[1] : matrices_[2];
  }

  StochasticMatrix expected_link_failure() const {
    const StochasticMatrix& base = matrices_[0];
    const std::size_t n = base.size();
    MatrixBuilder out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double diag = base(i, i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        out.at(i, j) = (1.0 - rho_) * base(i, j);
        diag += rho_ * base(i, j);
      }
      out.at(i, i) = diag;
    }
    return std::move(out).build();
  }

  // E[a_ij] under the uniform self-plus-in-neighbors weighting: conditioning
  // on edge (j -> i) being present, the remaining in-degree is binomial.
  StochasticMatrix expected_erdos_renyi(double rho) const {
    const std::size_t n = n_;
    if (rho <= 0.0) return StochasticMatrix::identity(n);
    if (rho >= 1.0) return StochasticMatrix::uniform_mixing(n);
    auto mean_inverse = [](std::size_t trials, double p, double shift) {
      // E[1 / (shift + K)] with K ~ Binomial(trials, p)
      double total = 0.0;
      double pmf = std::pow(1.0 - p, static_cast<double>(trials));  // k = 0
      for (std::size_t k = 0; k <= trials; ++k) {
        total += pmf / (shift + static_cast<double>(k));
        if (k < trials)
          pmf *= (static_cast<double>(trials - k) / static_cast<double>(k + 1)) * p / (1.0 - p);
      }
      return total;
    };
    const double diag = mean_inverse(n - 1, rho, 1.0);
    const double off = n >= 2 ? rho * mean_inverse(n - 2, rho, 2.0) : 0.0;
    MatrixBuilder out(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) = (i == j) ? diag : off;
    // row sums are exact in expectation but accumulate float error; renormalize
    StochasticMatrix m = std::move(out).build(1e-6);
    std::vector<std::vector<double>> rows = m.to_rows();
    for (auto& r : rows) {
      double s = 0.0;
      for (const double x : r) s += x;
      for (double& x : r) x /= s;
    }
    return StochasticMatrix::from_rows(rows);
  }

  Kind kind_;
  std::size_t n_;
  std::vector<StochasticMatrix> matrices_;
  ParamSchedule schedule_;
  LambdaSchedule lambda_;
  double rho_ = 0.0;
  std::shared_ptr<const ChainSpec> inner_;
};

}  // namespace nbsl
