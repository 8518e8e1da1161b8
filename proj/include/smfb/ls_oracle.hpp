#pragma once

// Brute-force least-squares reference. Everything here is O(p^3) and
// recomputed from scratch; it exists to check the lattice recursions.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "smfb/errors.hpp"

namespace smfb {

/// Rows are delayed copies of a pre-windowed sequence z.
///
/// Column c is sampled at time anchor - stride * (L-1-c), so the last column
/// is the anchor itself, and row r holds z(time_c - r) (zero when negative).
/// stride = 1 gives the usual sliding-window matrix. For the interleaved
/// synthesis problem the stride is M: one column per block end.
template <class Real = double>
struct DataMatrix {
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> rows;
  std::size_t anchor = 0;
  std::size_t stride = 1;

  std::size_t order() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t columns() const { return static_cast<std::size_t>(rows.cols()); }
  std::size_t column_time(std::size_t c) const { return anchor - stride * (columns() - 1 - c); }
};

template <class Real>
DataMatrix<Real> build_data_matrix(std::span<const Real> z, std::size_t order,
                                   std::size_t anchor, std::size_t stride = 1) {
  if (order < 1) throw ConfigError("data matrix order must be at least 1");
  if (stride < 1) throw ConfigError("data matrix stride must be at least 1");
  if (anchor >= z.size())
    throw DimensionError("anchor " + std::to_string(anchor) + " outside a signal of length " +
                         std::to_string(z.size()));
  DataMatrix<Real> m;
  m.anchor = anchor;
  m.stride = stride;
  const std::size_t cols = anchor / stride + 1;
  m.rows.setZero(static_cast<Eigen::Index>(order), static_cast<Eigen::Index>(cols));
  for (std::size_t c = 0; c < cols; ++c) {
    const std::size_t t = m.column_time(c);
    for (std::size_t r = 0; r < order && r <= t; ++r)
      m.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = z[t - r];
  }
  return m;
}

/// Desired row aligned with the columns of `m`: entry c is d(time_c - offset).
template <class Real>
Eigen::Matrix<Real, 1, Eigen::Dynamic> desired_row(std::span<const Real> d,
                                                   const DataMatrix<Real>& m,
                                                   std::size_t offset = 0) {
  Eigen::Matrix<Real, 1, Eigen::Dynamic> row =
      Eigen::Matrix<Real, 1, Eigen::Dynamic>::Zero(static_cast<Eigen::Index>(m.columns()));
  for (std::size_t c = 0; c < m.columns(); ++c) {
    const std::size_t t = m.column_time(c);
    if (t >= offset && t - offset < d.size()) row(static_cast<Eigen::Index>(c)) = d[t - offset];
  }
  return row;
}

/// Ridge term is relative_ridge * trace(Z Z^T) / p. Zero disables it, in
/// which case a rank-deficient Z is reported instead of regularized.
struct OracleOptions {
  double relative_ridge = 1e-10;
};

/// Minimizer g of |d - g Z|^2 + mu |g|^2, so that the prediction is +gZ.
///
/// Solved as the stacked problem [Z^T; sqrt(mu) I] g^T = [d^T; 0] with a
/// pivoted Householder QR, which stays accurate for very small mu.
template <class Real, class Row>
Eigen::Matrix<Real, Eigen::Dynamic, 1> solve_coefficients(const Eigen::MatrixBase<Row>& d,
                                                         const DataMatrix<Real>& z,
                                                         OracleOptions opts = {}) {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  const Eigen::Index p = z.rows.rows();
  const Eigen::Index cols = z.rows.cols();
  if (d.size() != cols)
    throw DimensionError("desired row has " + std::to_string(d.size()) + " entries, data matrix " +
                         std::to_string(cols) + " columns");
  if (opts.relative_ridge < 0) throw ConfigError("ridge must be non-negative");

  const Real trace = z.rows.squaredNorm();
  if (trace == Real(0)) return Vec::Zero(p);
  const Real mu = static_cast<Real>(opts.relative_ridge) * trace / static_cast<Real>(p);

  Mat a(cols + p, p);
  a.topRows(cols) = z.rows.transpose();
  a.bottomRows(p) = Mat::Identity(p, p) * std::sqrt(mu);
  Vec b = Vec::Zero(cols + p);
  b.head(cols) = d.transpose();

  Eigen::ColPivHouseholderQR<Mat> qr(a);
  if (qr.rank() < p)
    throw IllConditionedError("data matrix of order " + std::to_string(p) +
                              " is rank deficient (rank " + std::to_string(qr.rank()) +
                              ") and no ridge is configured");
  return qr.solve(b);
}

/// Last entry of the residual d - gZ, i.e. d P_perp[Z] pi^T with pi selecting
/// the most recent column.
template <class Real, class Row>
Real project_residual(const Eigen::MatrixBase<Row>& d, const DataMatrix<Real>& z,
                      OracleOptions opts = {}) {
  const auto g = solve_coefficients(d, z, opts);
  const Eigen::Index last = z.rows.cols() - 1;
  return d(last) - g.dot(z.rows.col(last));
}

/// Full residual row d - gZ.
template <class Real, class Row>
Eigen::Matrix<Real, 1, Eigen::Dynamic> residual_row(const Eigen::MatrixBase<Row>& d,
                                                    const DataMatrix<Real>& z,
                                                    OracleOptions opts = {}) {
  const auto g = solve_coefficients(d, z, opts);
  return d - g.transpose() * z.rows;
}

}  // namespace smfb
