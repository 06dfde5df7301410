#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
// LAPACKE must see the C++ complex types before its own fallbacks.
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "turnpike/linalg.hpp"

namespace turnpike {

/// Splitting of A* into the invariant subspaces of the spectrum with
/// Re >= -margin ("unstable", Y_u) and Re < -margin ("stable", Y_s).
///
/// With S = [basis_u basis_s], S^{-1} A* S = diag(block_au, block_as) and the
/// projection onto Y_u along Y_s is P = S diag(I, 0) S^{-1}.
struct SpectralSplit {
  Matrix projection;
  Matrix basis_u;   // n x k, orthonormal columns
  Matrix basis_s;   // n x (n-k), orthonormal columns
  Matrix block_au;  // k x k
  Matrix block_as;  // (n-k) x (n-k)
  Matrix block_bu;  // m x k, B* restricted to Y_u coordinates (empty without B*)
  Matrix block_bs;  // m x (n-k)
  Matrix change_of_basis;          // S
  Matrix change_of_basis_inverse;  // S^{-1}
  Eigen::VectorXcd spectrum_u;
  Eigen::VectorXcd spectrum_s;
  double margin = 0.0;
  double gap = std::numeric_limits<double>::infinity();

  int unstable_dim() const { return static_cast<int>(basis_u.cols()); }
};

struct SemigroupBound {
  double m = 1.0;
  double mu = 0.0;
  bool valid = false;
};

struct ObservabilityCertificate {
  double t_c = 0.0;
  double alpha = 0.0;
  Matrix gramian;
  bool controllable() const { return alpha > 1e-12; }
};

struct HautusResult {
  bool detectable = true;
  std::vector<std::complex<double>> witnesses;
};

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw LinearAlgebraError("eigenvalue computation failed");
  return es.eigenvalues();
}

/// max Re(spectrum).
inline double stability_margin(const Matrix& a_star) {
  require(a_star.rows() == a_star.cols() && a_star.rows() > 0,
          "stability_margin: matrix must be square and non-empty");
  return eigenvalues(a_star).real().maxCoeff();
}

namespace detail {

inline lapack_logical select_nonnegative(const double* re, const double*) {
  return *re >= 0.0;
}
inline lapack_logical select_negative(const double* re, const double*) { return *re < 0.0; }

/// Real Schur form of `a` with the eigenvalues chosen by `select` leading.
/// Returns the Schur vectors and the number of selected eigenvalues.
inline std::pair<Matrix, int> ordered_schur(const Matrix& a, LAPACK_D_SELECT2 select) {
  const int n = static_cast<int>(a.rows());
  Matrix t = a;
  Matrix z(n, n);
  Vector wr(n), wi(n);
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select, n, t.data(), n,
                                        &sdim, wr.data(), wi.data(), z.data(), n);
  if (info != 0) throw LinearAlgebraError("ordered Schur decomposition failed");
  return {z, static_cast<int>(sdim)};
}

}  // namespace detail

/// Ordered-Schur realization of the spectral decomposition of `a_star`.
/// `b_star` (m x n) is optional; when given the restricted blocks are filled.
/// Throws DecompositionError when an eigenvalue lies within 1e-8 of the
/// splitting line Re = -margin.
inline SpectralSplit spectral_split(const Matrix& a_star, double margin = 0.0,
                                    const Matrix& b_star = Matrix()) {
  const int n = static_cast<int>(a_star.rows());
  require(n > 0 && a_star.cols() == n, "spectral_split: matrix must be square");
  require(b_star.size() == 0 || b_star.cols() == n, "spectral_split: B* must have n columns");

  const Eigen::VectorXcd spectrum = eigenvalues(a_star);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (std::abs(spectrum(i).real() + margin) < 1e-8) {
      throw DecompositionError(
          "eigenvalue on the splitting line: the spectrum cannot be separated");
    }
  }

  const Matrix shifted = a_star + margin * Matrix::Identity(n, n);
  const auto [z_u, k] = detail::ordered_schur(shifted, detail::select_nonnegative);
  const auto [z_s, k_s] = detail::ordered_schur(shifted, detail::select_negative);
  if (k + k_s != n) throw DecompositionError("inconsistent spectral split");

  SpectralSplit out;
  out.margin = margin;
  out.basis_u = z_u.leftCols(k);
  out.basis_s = z_s.leftCols(n - k);
  out.block_au = out.basis_u.transpose() * a_star * out.basis_u;
  out.block_as = out.basis_s.transpose() * a_star * out.basis_s;
  out.change_of_basis.resize(n, n);
  out.change_of_basis << out.basis_u, out.basis_s;
  Eigen::PartialPivLU<Matrix> lu(out.change_of_basis);
  out.change_of_basis_inverse = lu.inverse();
  out.projection = out.basis_u * out.change_of_basis_inverse.topRows(k);
  if (b_star.size() > 0) {
    out.block_bu = b_star * out.basis_u;
    out.block_bs = b_star * out.basis_s;
  }
  out.spectrum_u = eigenvalues(out.block_au);
  out.spectrum_s = eigenvalues(out.block_as);
  for (Eigen::Index i = 0; i < out.spectrum_u.size(); ++i) {
    for (Eigen::Index j = 0; j < out.spectrum_s.size(); ++j) {
      out.gap = std::min(out.gap, std::abs(out.spectrum_u(i).real() - out.spectrum_s(j).real()));
    }
  }
  return out;
}

/// Coordinates of each column of `lambda` (n x (N+1)) in the (Y_u, Y_s) bases.
struct SplitSeries {
  Matrix unstable;  // k x (N+1)
  Matrix stable;    // (n-k) x (N+1)
};

inline SplitSeries transform_adjoint(const SpectralSplit& split, const Matrix& lambda) {
  require(lambda.rows() == split.change_of_basis.rows(),
          "transform_adjoint: dimension mismatch");
  const Matrix coords = split.change_of_basis_inverse * lambda;
  const int k = split.unstable_dim();
  return {coords.topRows(k), coords.bottomRows(coords.rows() - k)};
}

/// Hautus test for (A*, B*): rank [A* - sI; B*] = n for every eigenvalue with
/// Re s >= 0, numerical rank relative to the largest singular value.
inline HautusResult hautus_detectable(const Matrix& a_star, const Matrix& b_star) {
  const int n = static_cast<int>(a_star.rows());
  require(a_star.cols() == n && b_star.cols() == n, "hautus_detectable: dimension mismatch");
  HautusResult out;
  const Eigen::VectorXcd spectrum = eigenvalues(a_star);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const std::complex<double> s = spectrum(i);
    if (s.real() < -1e-10) continue;
    Eigen::MatrixXcd stacked(n + b_star.rows(), n);
    stacked.topRows(n) = a_star.cast<std::complex<double>>() -
                         s * Eigen::MatrixXcd::Identity(n, n);
    stacked.bottomRows(b_star.rows()) = b_star.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked);
    const Vector sv = svd.singularValues();
    const double cutoff = 1e-10 * std::max(sv(0), std::numeric_limits<double>::min());
    const int rank = static_cast<int>((sv.array() > cutoff).count());
    if (rank < n) {
      out.detectable = false;
      out.witnesses.push_back(s);
    }
  }
  return out;
}

/// ||exp(a t)|| in the operator norm induced by `weight` (Euclidean if null).
inline double exp_norm(const Matrix& a, double t, const InnerProduct* weight = nullptr) {
  const Matrix e = (a * t).exp();
  if (!weight) {
    Eigen::JacobiSVD<Matrix> svd(e);
    return svd.singularValues()(0);
  }
  const Matrix w = weight->sqrt_weight() * e * weight->inv_sqrt_weight();
  Eigen::JacobiSVD<Matrix> svd(w);
  return svd.singularValues()(0);
}

/// Adjoint of `a` with respect to <., .>_W: W^{-1} A^T W.
inline Matrix weighted_adjoint(const Matrix& a, const InnerProduct& w) {
  require(a.rows() == w.dim() && a.cols() == w.dim(), "weighted_adjoint: dimension mismatch");
  const Matrix atw = a.transpose() * Matrix(w.weight());
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) out.col(j) = w.riesz(atw.col(j));
  return out;
}

/// (M, mu) with ||exp(A* t)|| <= M e^{-mu t}: mu is half the stability margin,
/// M the sampled supremum of ||exp(A* t)|| e^{mu t} over a log-uniform grid on
/// [1e-3, 20/mu] (at least 1, the t = 0 value) times a 1.05 safety factor.
/// When A* is self-adjoint in the weight, ||exp(A* t)|| = e^{margin t} and the
/// sampled supremum is exactly 1.
inline SemigroupBound semigroup_bound(const Matrix& a_star, const InnerProduct* weight = nullptr) {
  const double margin = stability_margin(a_star);
  SemigroupBound out;
  if (!(margin < 0.0)) return out;
  out.mu = -0.5 * margin;
  const Matrix sym = weight ? Matrix(weight->sqrt_weight() * a_star * weight->inv_sqrt_weight())
                            : a_star;
  if ((sym - sym.transpose()).norm() <= 1e-12 * std::max(1.0, sym.norm())) {
    out.m = 1.05;
    out.valid = true;
    return out;
  }
  const int samples = 200;
  const double lo = std::log(1e-3);
  const double hi = std::log(20.0 / out.mu);
  double sup = 1.0;
  for (int i = 0; i < samples; ++i) {
    const double t = std::exp(lo + (hi - lo) * i / (samples - 1));
    sup = std::max(sup, exp_norm(a_star, t, weight) * std::exp(out.mu * t));
  }
  out.m = 1.05 * sup;
  out.valid = true;
  return out;
}

/// Controllability Gramian G = int_0^{t_c} e^{As} B B^T e^{A^T s} ds from the
/// exponential of [[A, B B^T], [0, -A^T]] t_c, and alpha = lambda_min(G).
inline ObservabilityCertificate observability_constant(const Matrix& a, const Matrix& b,
                                                       double t_c) {
  const int n = static_cast<int>(a.rows());
  require(t_c > 0.0, "observability_constant: t_c must be positive");
  require(a.cols() == n && b.rows() == n, "observability_constant: dimension mismatch");
  Matrix h = Matrix::Zero(2 * n, 2 * n);
  h.topLeftCorner(n, n) = a;
  h.topRightCorner(n, n) = b * b.transpose();
  h.bottomRightCorner(n, n) = -a.transpose();
  const Matrix e = (h * t_c).exp();
  Matrix g = e.topRightCorner(n, n) * e.topLeftCorner(n, n).transpose();
  g = 0.5 * (g + g.transpose()).eval();
  ObservabilityCertificate out;
  out.t_c = t_c;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  out.alpha = std::max(0.0, es.eigenvalues()(0));
  out.gramian = std::move(g);
  return out;
}

}  // namespace turnpike
