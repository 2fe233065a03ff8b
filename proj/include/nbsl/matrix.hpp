#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbsl {

inline constexpr double kRowSumTol = 1e-9;

struct StochasticityViolation {
  std::size_t row = 0;
  double row_sum = 1.0;
  std::size_t negative_col = 0;   // meaningful when negative_entry is set
  double negative_entry = 0.0;
  bool has_negative = false;
  bool bad_sum = false;
};

struct ValidationReport {
  bool ok = true;
  std::vector<StochasticityViolation> violations;
};

// Checks that a square matrix is row-stochastic: nonnegative entries, each row
// summing to 1 within tol. Reports every offending row.
inline ValidationReport validate_stochastic(const std::vector<std::vector<double>>& rows,
                                            double tol = kRowSumTol) {
  const std::size_t n = rows.size();
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("validate_stochastic: matrix is not square");
  }
  ValidationReport report;
  for (std::size_t i = 0; i < n; ++i) {
    StochasticityViolation v;
    v.row = i;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (rows[i][j] < 0.0 && !v.has_negative) {
        v.has_negative = true;
        v.negative_col = j;
        v.negative_entry = rows[i][j];
      }
      sum += rows[i][j];
    }
    v.row_sum = sum;
    v.bad_sum = std::abs(sum - 1.0) > tol;
    if (v.has_negative || v.bad_sum) {
      report.ok = false;
      report.violations.push_back(v);
    }
  }
  return report;
}

// Row-stochastic square matrix. Entry (i, j) is the weight agent i places on
// agent j's opinion, so row i lists agent i's influences.
class StochasticMatrix {
 public:
  StochasticMatrix() = default;

  static StochasticMatrix identity(std::size_t n) {
    StochasticMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
    return m;
  }

  static StochasticMatrix uniform_mixing(std::size_t n) {
    StochasticMatrix m(n);
    const double w = 1.0 / static_cast<double>(n);
    for (auto& x : m.a_) x = w;
    return m;
  }

  static StochasticMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                    double tol = kRowSumTol) {
    const ValidationReport report = validate_stochastic(rows, tol);
    if (!report.ok) {
      const auto& v = report.violations.front();
      throw std::invalid_argument(
          "StochasticMatrix: row " + std::to_string(v.row) +
          (v.has_negative ? " has a negative entry" : " sums to " + std::to_string(v.row_sum)));
    }
    StochasticMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j) m.a_[i * rows.size() + j] = rows[i][j];
    return m;
  }

  // For generators that construct rows guaranteed stochastic by arithmetic;
  // still verified, just without the copy from nested vectors.
  static StochasticMatrix from_flat(std::size_t n, std::vector<double> entries,
                                    double tol = kRowSumTol) {
    if (entries.size() != n * n) throw std::invalid_argument("from_flat: size mismatch");
    StochasticMatrix m;
    m.n_ = n;
    m.a_ = std::move(entries);
    m.check(tol);
    return m;
  }

  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }

  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> rows(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) rows[i][j] = a_[i * n_ + j];
    return rows;
  }

  double min_diagonal() const {
    double m = 1.0;
    for (std::size_t i = 0; i < n_; ++i) m = std::min(m, (*this)(i, i));
    return m;
  }

  bool operator==(const StochasticMatrix& other) const {
    return n_ == other.n_ && a_ == other.a_;
  }

  // x -> A x.
  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("apply: dimension mismatch");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j] * x[j];
      y[i] = s;
    }
    return y;
  }

  // y^T -> y^T A.
  std::vector<double> apply_transpose(std::span<const double> y) const {
    if (y.size() != n_) throw std::invalid_argument("apply_transpose: dimension mismatch");
    std::vector<double> z(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double yi = y[i];
      for (std::size_t j = 0; j < n_; ++j) z[j] += yi * a_[i * n_ + j];
    }
    return z;
  }

  friend StochasticMatrix operator*(const StochasticMatrix& lhs, const StochasticMatrix& rhs) {
    if (lhs.n_ != rhs.n_) throw std::invalid_argument("matrix product: dimension mismatch");
    const std::size_t n = lhs.n_;
    StochasticMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const double lik = lhs.a_[i * n + k];
        if (lik == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) out.a_[i * n + j] += lik * rhs.a_[k * n + j];
      }
    }
    out.check(kRowSumTol);  // products of stochastic matrices stay stochastic
    return out;
  }

 private:
  explicit StochasticMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  void check(double tol) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (a_[i * n_ + j] < 0.0)
          throw std::logic_error("StochasticMatrix: negative entry in row " + std::to_string(i));
        sum += a_[i * n_ + j];
      }
      if (std::abs(sum - 1.0) > tol)
        throw std::logic_error("StochasticMatrix: row " + std::to_string(i) + " sums to " +
                               std::to_string(sum));
    }
  }

  friend class MatrixBuilder;

  std::size_t n_ = 0;
  std::vector<double> a_;
};

// Accumulates raw entries, then seals them into a StochasticMatrix.
class MatrixBuilder {
 public:
  explicit MatrixBuilder(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::size_t size() const { return n_; }

  StochasticMatrix build(double tol = kRowSumTol) && {
    StochasticMatrix m;
    m.n_ = n_;
    m.a_ = std::move(a_);
    m.check(tol);
    return m;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

// Backward product A(t2 : t1) = A(t2-1) A(t2-2) ... A(t1) over a chain whose
// element at position t is A(t). A(t1 : t1) is the identity.
inline StochasticMatrix backward_product(std::span<const StochasticMatrix> chain, std::size_t t1,
                                         std::size_t t2) {
  if (t1 > t2) throw std::invalid_argument("backward_product: t1 > t2");
  if (t2 > chain.size() && t1 != t2)
    throw std::invalid_argument("backward_product: chain too short");
  const std::size_t n = chain.empty() ? 0 : chain.front().size();
  StochasticMatrix acc = StochasticMatrix::identity(n);
  for (std::size_t t = t1; t < t2; ++t) acc = chain[t] * acc;
  return acc;
}

inline double max_abs_difference(const StochasticMatrix& a, const StochasticMatrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_difference: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace nbsl
