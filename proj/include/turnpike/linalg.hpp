#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "turnpike/errors.hpp"

namespace turnpike {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline SparseMatrix to_sparse(const Matrix& dense) {
  return dense.sparseView(0.0, 0.0);
}

inline SparseMatrix sparse_identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

inline SparseMatrix sparse_diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Ones(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d(i);
  m.makeCompressed();
  return m;
}

inline bool is_diagonal(const SparseMatrix& m) {
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      if (it.row() != it.col() && it.value() != 0.0) return false;
    }
  }
  return true;
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ArgumentError(message);
}

/// Symmetric positive-definite weight matrix W defining <a, b> = a^T W b.
///
/// The factorization and the (lazily built) symmetric square roots live in a
/// shared, internally synchronized cache, so copies are cheap and the object
/// can be shared across threads.
class InnerProduct {
 public:
  InnerProduct() = default;

  explicit InnerProduct(SparseMatrix weight) : state_(std::make_shared<State>()) {
    require(weight.rows() == weight.cols(), "inner product weight must be square");
    require(weight.rows() > 0, "inner product weight must be non-empty");
    weight.makeCompressed();
    const SparseMatrix asym = weight - SparseMatrix(weight.transpose());
    double max_asym = 0.0;
    for (int k = 0; k < asym.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(asym, k); it; ++it) {
        max_asym = std::max(max_asym, std::abs(it.value()));
      }
    }
    require(max_asym <= 1e-12, "inner product weight is not symmetric to 1e-12");
    state_->weight = std::move(weight);
    state_->diagonal = is_diagonal(state_->weight);
    if (state_->diagonal) {
      state_->diag = state_->weight.diagonal();
      require(state_->diag.minCoeff() > 0.0,
              "inner product weight is not positive definite");
    } else {
      state_->ldlt.compute(state_->weight);
      if (state_->ldlt.info() != Eigen::Success ||
          state_->ldlt.vectorD().minCoeff() <= 0.0) {
        throw ArgumentError("inner product weight is not positive definite");
      }
    }
  }

  explicit InnerProduct(const Matrix& weight) : InnerProduct(to_sparse(weight)) {}

  static InnerProduct identity(int n) { return InnerProduct(sparse_identity(n)); }

  int dim() const { return static_cast<int>(state_->weight.rows()); }
  bool diagonal() const { return state_->diagonal; }
  const SparseMatrix& weight() const { return state_->weight; }

  double dot(const Vector& a, const Vector& b) const {
    if (state_->diagonal) return (a.array() * state_->diag.array() * b.array()).sum();
    return a.dot(state_->weight * b);
  }
  double norm(const Vector& v) const { return std::sqrt(std::max(0.0, dot(v, v))); }

  /// W v, i.e. the Euclidean representation of the functional <v, .>.
  Vector apply(const Vector& v) const {
    if (state_->diagonal) return state_->diag.cwiseProduct(v);
    return state_->weight * v;
  }

  /// W^{-1} g: the Riesz representative of a Euclidean gradient.
  Vector riesz(const Vector& g) const {
    if (state_->diagonal) return g.cwiseQuotient(state_->diag);
    return state_->ldlt.solve(g);
  }

  const Matrix& sqrt_weight() const {
    roots();
    return state_->sqrt_w;
  }
  const Matrix& inv_sqrt_weight() const {
    roots();
    return state_->inv_sqrt_w;
  }

 private:
  struct State {
    SparseMatrix weight;
    bool diagonal = false;
    Vector diag;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    std::once_flag roots_once;
    Matrix sqrt_w;
    Matrix inv_sqrt_w;
  };

  void roots() const {
    std::call_once(state_->roots_once, [s = state_.get()] {
      if (s->diagonal) {
        s->sqrt_w = s->diag.cwiseSqrt().asDiagonal();
        s->inv_sqrt_w = s->diag.cwiseSqrt().cwiseInverse().asDiagonal();
        return;
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es{Matrix(s->weight)};
      const Vector r = es.eigenvalues().cwiseSqrt();
      s->sqrt_w = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
      s->inv_sqrt_w =
          es.eigenvectors() * r.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    });
  }

  std::shared_ptr<State> state_;
};

/// ||D||_{L(X,Y)} = ||Y^{1/2} D X^{-1/2}||_2.
inline double operator_norm(const SparseMatrix& d, const InnerProduct& domain,
                            const InnerProduct& range) {
  if (d.nonZeros() == 0) return 0.0;
  if (is_diagonal(d) && domain.diagonal() && range.diagonal()) {
    const Vector scale =
        (range.weight().diagonal().array() / domain.weight().diagonal().array()).sqrt();
    return (Vector(d.diagonal()).cwiseAbs().cwiseProduct(scale)).maxCoeff();
  }
  const Matrix weighted = range.sqrt_weight() * Matrix(d) * domain.inv_sqrt_weight();
  Eigen::JacobiSVD<Matrix> svd(weighted);
  return svd.singularValues()(0);
}

inline double max_abs(const SparseMatrix& m) {
  double out = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out = std::max(out, std::abs(it.value()));
    }
  }
  return out;
}

}  // namespace turnpike
