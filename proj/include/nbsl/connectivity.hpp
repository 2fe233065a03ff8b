#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbsl/matrix.hpp"
#include "nbsl/world_model.hpp"

namespace nbsl {

// Max minus min entry; the consensus-disagreement quantity.
inline double diff_span(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("diff_span: empty vector");
  double lo = x[0], hi = x[0];
  for (const double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

// pi-weighted variance around the pi-weighted mean. Sandwiched between
// (p*/2) d(x)^2 and d(x)^2 when min(pi) = p*.
inline double comparison_function(std::span<const double> x, std::span<const double> pi) {
  if (x.size() != pi.size()) throw std::invalid_argument("comparison_function: size mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += pi[i] * x[i];
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += pi[i] * (x[i] - mean) * (x[i] - mean);
  return v;
}

// ---------------------------------------------------------------------------
// gamma-epochs

struct EpochWitness {
  std::size_t agent = 0;       // witness agent j
  std::size_t time = 0;        // witness time t in (t_start, t_end]
  double self_confidence = 0;  // a_jj(t)
  double influence = 0;        // (A(t : t_start))_{j, i}
};

struct EpochCertificate {
  std::size_t t_start = 0;
  std::size_t t_end = 0;
  double gamma = 0.0;
  // witnesses[i] lists, for each witness agent j reached by agent i, the first
  // qualifying time with the verified values; the witness agents of each i
  // form an observationally self-sufficient set.
  std::vector<std::vector<EpochWitness>> witnesses;

  std::vector<std::size_t> witness_set(std::size_t i) const {
    std::vector<std::size_t> out;
    for (const auto& w : witnesses[i]) out.push_back(w.agent);
    return out;
  }
};

inline constexpr double kEpochSlack = 1e-12;  // absorbs float error in products

// Certifies the interval [t_start, t_start + window.size() - 1] when every
// agent i influences (with product weight >= gamma) a self-sufficient set of
// agents whose self-confidences reach gamma at the witness times. `window`
// holds A(t_start) ... A(t_end). Returns nothing when certification fails.
inline std::optional<EpochCertificate> detect_gamma_epoch(
    std::span<const StochasticMatrix> window, std::size_t t_start, const WorldModel& world,
    double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("detect_gamma_epoch: gamma must be positive");
  if (window.size() < 2) throw std::invalid_argument("detect_gamma_epoch: window needs t_s < t_f");
  const std::size_t n = window.front().size();
  if (n != world.agent_count())
    throw std::invalid_argument("detect_gamma_epoch: window/world agent count mismatch");

  EpochCertificate cert;
  cert.t_start = t_start;
  cert.t_end = t_start + window.size() - 1;
  cert.gamma = gamma;
  cert.witnesses.assign(n, {});

  // zero entries never qualify, however small gamma is
  const double cut = gamma - kEpochSlack;
  auto qualifies = [cut](double value) { return value > 0.0 && value >= cut; };
  // product = A(t : t_start), advanced one factor per step
  StochasticMatrix product = StochasticMatrix::identity(n);
  std::vector<std::vector<char>> seen(n, std::vector<char>(n, 0));
  for (std::size_t off = 1; off < window.size(); ++off) {
    product = window[off - 1] * product;
    const StochasticMatrix& at_t = window[off];
    const std::size_t t = t_start + off;
    for (std::size_t j = 0; j < n; ++j) {
      if (!qualifies(at_t(j, j))) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (seen[i][j] || !qualifies(product(j, i))) continue;
        seen[i][j] = 1;
        cert.witnesses[i].push_back({j, t, at_t(j, j), product(j, i)});
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (cert.witnesses[i].empty()) return std::nullopt;
    if (!world.is_self_sufficient(cert.witness_set(i))) return std::nullopt;
  }
  return cert;
}

// ---------------------------------------------------------------------------
// uniform strong connectivity

enum class UscFailure { entry_below_floor, zero_diagonal, union_not_strongly_connected };

inline const char* to_string(UscFailure f) {
  switch (f) {
    case UscFailure::entry_below_floor: return "entry-below-floor";
    case UscFailure::zero_diagonal: return "zero-diagonal";
    case UscFailure::union_not_strongly_connected: return "union-not-strongly-connected";
  }
  return "?";
}

struct UscVerdict {
  bool holds = false;
  std::size_t window_length = 0;  // B
  double entry_floor = 0.0;       // delta
  std::optional<std::pair<std::size_t, UscFailure>> first_failure;  // (window index, reason)
};

namespace detail {

// Tarjan strongly connected components over an n-vertex adjacency matrix.
inline std::size_t count_scc(const std::vector<std::vector<char>>& adj) {
  const std::size_t n = adj.size();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  int next_index = 0;

  struct Frame {
    std::size_t v;
    std::size_t next_child;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      bool descended = false;
      while (f.next_child < n) {
        const std::size_t w = f.next_child++;
        if (!adj[f.v][w]) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
      }
      if (descended) continue;
      if (low[f.v] == index[f.v]) {
        ++components;
        while (true) {
          const std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          if (w == f.v) break;
        }
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  return components;
}

}  // namespace detail

// Verifies uniform strong connectivity over the supplied window: positive
// entries at least delta, positive diagonals, and a strongly connected union
// graph over every consecutive length-B block. Arc (i, j) exists when
// a_ji(t) > 0. Window length must be a multiple of B.
inline UscVerdict check_usc(std::span<const StochasticMatrix> window, std::size_t B,
                            double delta) {
  if (B == 0) throw std::invalid_argument("check_usc: B must be positive");
  if (delta <= 0.0) throw std::invalid_argument("check_usc: delta must be positive");
  if (window.empty() || window.size() % B != 0)
    throw std::invalid_argument("check_usc: window length must be a positive multiple of B");

  UscVerdict verdict;
  verdict.window_length = B;
  verdict.entry_floor = delta;
  const std::size_t n = window.front().size();

  for (std::size_t k = 0; k * B < window.size(); ++k) {
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (std::size_t q = k * B; q < (k + 1) * B; ++q) {
      const StochasticMatrix& m = window[q];
      for (std::size_t i = 0; i < n; ++i) {
        if (m(i, i) <= 0.0) {
          verdict.first_failure = {k, UscFailure::zero_diagonal};
          return verdict;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double a = m(i, j);
          if (a > 0.0 && a < delta) {
            verdict.first_failure = {k, UscFailure::entry_below_floor};
            return verdict;
          }
          if (a > 0.0) adj[j][i] = 1;  // j influences i: arc j -> i
        }
      }
    }
    if (detail::count_scc(adj) != 1) {
      verdict.first_failure = {k, UscFailure::union_not_strongly_connected};
      return verdict;
    }
  }
  verdict.holds = true;
  return verdict;
}

// ---------------------------------------------------------------------------
// balance and feedback

// Largest alpha with sum_{i in C, j not in C} a_ij >= alpha * reverse for all
// nonempty proper subsets C. Constraints with zero reverse flow impose no
// bound; +infinity when every reverse flow is zero. Brute force over subsets,
// so n is capped at 16.
inline double max_balance_alpha(const StochasticMatrix& m) {
  const std::size_t n = m.size();
  if (n > 16) throw std::invalid_argument("max_balance_alpha: n > 16 (brute force over subsets)");
  if (n < 2) return std::numeric_limits<double>::infinity();
  double alpha = std::numeric_limits<double>::infinity();
  const std::size_t all = (std::size_t{1} << n) - 1;
  for (std::size_t mask = 1; mask < all; ++mask) {
    double outflow = 0.0, inflow = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool i_in = (mask >> i) & 1;
      for (std::size_t j = 0; j < n; ++j) {
        const bool j_in = (mask >> j) & 1;
        if (i_in && !j_in) outflow += m(i, j);
        if (!i_in && j_in) inflow += m(i, j);
      }
    }
    if (inflow > 0.0) alpha = std::min(alpha, outflow / inflow);
  }
  return alpha;
}

// Smallest self-confidence across the window; the chain has the strong
// feedback property with coefficient delta iff this floor is >= delta > 0.
inline double strong_feedback_floor(std::span<const StochasticMatrix> window) {
  if (window.empty()) throw std::invalid_argument("strong_feedback_floor: empty window");
  double floor = 1.0;
  for (const auto& m : window) floor = std::min(floor, m.min_diagonal());
  return floor;
}

// ---------------------------------------------------------------------------
// absolute probability sequences

// Periodic sequence of stochastic vectors pi(k) with
// pi^T(k+1 mod p) E[A(k)] = pi^T(k); p_star is the smallest entry over all
// phases, and membership of the chain in the positive-social-power class
// requires p_star > 0.
struct ApsSequence {
  std::vector<std::vector<double>> phases;
  double p_star = 0.0;

  std::size_t period() const { return phases.size(); }
  const std::vector<double>& at(std::size_t t) const { return phases[t % phases.size()]; }
};

struct ApsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApsCheck {
  bool ok = false;
  double max_residual = 0.0;
};

// Residual of the defining relation at every phase. The relation itself is
// scale-invariant, so the stochasticity defect of the vectors (negative
// entries, row-sum drift beyond 1e-12) is folded into the residual too.
inline ApsCheck verify_aps(const ApsSequence& aps, std::span<const StochasticMatrix> chain,
                           double tol) {
  if (aps.phases.empty() || chain.empty())
    throw std::invalid_argument("verify_aps: empty sequence");
  const std::size_t p = chain.size();
  ApsCheck check;
  for (const auto& phase : aps.phases) {
    double sum = 0.0;
    for (const double v : phase) {
      if (v < 0.0) check.max_residual = std::max(check.max_residual, -v);
      sum += v;
    }
    const double defect = std::abs(sum - 1.0);
    if (defect > 1e-12) check.max_residual = std::max(check.max_residual, defect);
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (aps.at(k).size() != chain[k].size())
      throw std::invalid_argument("verify_aps: dimension mismatch");
    const std::vector<double> lhs = chain[k].apply_transpose(aps.at(k + 1));
    const auto& rhs = aps.at(k);
    for (std::size_t i = 0; i < lhs.size(); ++i)
      check.max_residual = std::max(check.max_residual, std::abs(lhs[i] - rhs[i]));
  }
  check.ok = check.max_residual <= tol;
  return check;
}

namespace detail {

// Power iteration for the stochastic left fixed vector of M, started from a
// given stochastic vector. Iterates past the convergence tolerance down to the
// rounding plateau, so well-conditioned fixed points come out at machine
// precision. Throws when the iteration never reaches the tolerance.
inline std::vector<double> left_fixed_vector(const StochasticMatrix& m,
                                             std::vector<double> start, double tol,
                                             std::size_t max_iters, std::size_t phase) {
  std::vector<double> x = std::move(start);
  double best_diff = std::numeric_limits<double>::infinity();
  std::size_t stalled = 0;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::vector<double> y = m.apply_transpose(x);
    double sum = 0.0;
    for (const double v : y) sum += v;
    if (sum <= 0.0) throw ApsError("aps solver: degenerate iterate at phase " +
                                   std::to_string(phase));
    for (double& v : y) v /= sum;
    double diff = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) diff = std::max(diff, std::abs(y[i] - x[i]));
    x = std::move(y);
    if (diff == 0.0) return x;
    if (diff < best_diff) {
      best_diff = diff;
      stalled = 0;
    } else if (++stalled > 64) {
      break;  // rounding plateau or oscillation
    }
  }
  if (best_diff < tol) return x;
  throw ApsError("aps solver: power iteration did not converge at phase " +
                 std::to_string(phase));
}

}  // namespace detail

// Solves for the absolute probability sequence of a period-p expected chain by
// power iteration on the transposed one-period cyclic product at each phase.
// Uniqueness is certified by restarting from a second, linearly independent
// vector; disagreement beyond 1e-9 (an identity chain, say) is an ambiguity
// error.
inline ApsSequence solve_aps_periodic(std::span<const StochasticMatrix> expected_chain) {
  if (expected_chain.empty()) throw std::invalid_argument("solve_aps_periodic: empty chain");
  const std::size_t p = expected_chain.size();
  const std::size_t n = expected_chain.front().size();
  for (const auto& m : expected_chain)
    if (m.size() != n) throw std::invalid_argument("solve_aps_periodic: mixed dimensions");

  constexpr double kIterTol = 1e-12;
  constexpr std::size_t kMaxIters = 1'000'000;
  constexpr double kAgreementTol = 1e-9;

  ApsSequence aps;
  aps.phases.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    // cyclic backward product over one period starting at phase k
    StochasticMatrix cycle = expected_chain[k];
    for (std::size_t step = 1; step < p; ++step) cycle = expected_chain[(k + step) % p] * cycle;

    std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    std::vector<double> skewed(n, n > 1 ? 1.0 / (2.0 * static_cast<double>(n - 1)) : 1.0);
    if (n > 1) skewed[0] = 0.5;
    const std::vector<double> a =
        detail::left_fixed_vector(cycle, uniform, kIterTol, kMaxIters, k);
    const std::vector<double> b =
        detail::left_fixed_vector(cycle, skewed, kIterTol, kMaxIters, k);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(a[i] - b[i]) > kAgreementTol)
        throw ApsError("aps solver: fixed vector is not unique at phase " + std::to_string(k));
    }
    aps.phases[k] = a;
  }

  const ApsCheck check = verify_aps(aps, expected_chain, 1e-10);
  if (!check.ok)
    throw ApsError("aps solver: defining relation residual " + std::to_string(check.max_residual));

  aps.p_star = 1.0;
  for (const auto& phase : aps.phases)
    for (const double v : phase) aps.p_star = std::min(aps.p_star, v);
  return aps;
}

}  // namespace nbsl
