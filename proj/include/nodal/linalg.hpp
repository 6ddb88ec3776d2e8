#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "nodal/error.hpp"

namespace nodal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kPi = 3.14159265358979323846;

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns
};

inline SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() == 0) return {Vector(0), Matrix(0, 0)};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "dense symmetric eigensolve failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// ||A - A^T||_F / ||A||_F, zero for the empty or zero matrix.
inline double relative_asymmetry(const Matrix& a) {
  const double n = a.norm();
  if (n == 0.0) return 0.0;
  return (a - a.transpose()).norm() / n;
}

/// Median with the even-count convention of averaging the two middle values.
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of empty sample");
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  const double upper = values[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + n / 2);
  return 0.5 * (lower + upper);
}

struct NullSpace {
  Matrix basis;  // columns orthonormal in the weighted inner product
  int rank = 0;  // observed rank of the constraint matrix
};

/// Null space of `constraints` (rows are functionals on node space) with a basis
/// orthonormal for <u, v> = sum_i w_i u_i v_i.
inline NullSpace weighted_null_space(const Matrix& constraints, const Vector& weights,
                                     double rank_tol = 1e-10) {
  const Eigen::Index n = weights.size();
  if (constraints.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "constraint matrix width does not match node count");
  const Vector inv_sqrt_w = weights.cwiseSqrt().cwiseInverse();
  // Work in x = W^{1/2} f, where the constraint reads (C W^{-1/2}) x = 0.
  const Matrix ct = (constraints * inv_sqrt_w.asDiagonal()).transpose();
  NullSpace out;
  if (ct.cols() == 0) {
    out.basis = inv_sqrt_w.asDiagonal() * Matrix::Identity(n, n);
    return out;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(ct);
  qr.setThreshold(rank_tol);  // relative to the largest pivot
  out.rank = static_cast<int>(qr.rank());
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  out.basis = inv_sqrt_w.asDiagonal() * q.rightCols(n - out.rank);
  return out;
}

struct SparseEigenOptions {
  double shift = -1.0;        // factor (A - shift I); must keep the shifted matrix definite
  double tolerance = 1e-12;   // residual ||A x - theta x|| / max(1, |theta|), x unit, above a roundoff floor
  int max_iterations = 2000;
  int guard_vectors = 8;      // extra block columns beyond the requested count
  std::uint64_t seed = 20240601;
};

struct SparseEigenResult {
  Vector values;     // ascending, `count` entries
  Matrix vectors;    // Euclidean-orthonormal columns
  Vector residuals;  // ||A x - theta x|| per pair
  int iterations = 0;
};

/// Lowest eigenpairs of a sparse symmetric matrix by shift-invert subspace
/// iteration with Rayleigh-Ritz. Degenerate clusters come back as an orthonormal
/// basis of the cluster.
inline SparseEigenResult lowest_eigenpairs(const SparseMatrix& a, int count,
                                           const SparseEigenOptions& opts = {}) {
  const Eigen::Index n = a.rows();
  if (count <= 0 || count > n)
    throw Error(ErrorCode::InvalidArgument, "requested eigenpair count out of range");
  const Eigen::Index block = std::min<Eigen::Index>(n, count + opts.guard_vectors);

  SparseMatrix shifted = a;
  if (opts.shift != 0.0) {
    SparseMatrix id(n, n);
    id.setIdentity();
    shifted = a - opts.shift * id;
  }
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw Error(ErrorCode::NonConvergence, "shifted operator factorization failed");

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);

  double norm1 = 0.0;
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator e(a, j); e; ++e) col += std::abs(e.value());
    norm1 = std::max(norm1, col);
  }
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * norm1;

  SparseEigenResult out;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Matrix y = factor.solve(x);
    Eigen::HouseholderQR<Matrix> qr(y);
    Matrix q = qr.householderQ() * Matrix::Identity(n, block);
    Matrix aq = a * q;
    Matrix t = q.transpose() * aq;
    t = 0.5 * (t + t.transpose());
    const SymmetricEigen ritz = symmetric_eigen(t);
    x = q * ritz.vectors;
    const Matrix ax = aq * ritz.vectors;

    double worst = 0.0;
    Vector res(count);
    for (int k = 0; k < count; ++k) {
      res(k) = (ax.col(k) - ritz.values(k) * x.col(k)).norm();
      worst = std::max(worst, std::max(0.0, res(k) - floor) / std::max(1.0, std::abs(ritz.values(k))));
    }
    if (worst <= opts.tolerance) {
      out.values = ritz.values.head(count);
      out.vectors = x.leftCols(count);
      out.residuals = res;
      out.iterations = it;
      return out;
    }
  }
  throw Error(ErrorCode::NonConvergence, "subspace iteration did not reach the residual tolerance");
}

}  // namespace nodal
