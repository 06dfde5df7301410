#pragma once

#include <cmath>
#include <vector>

#include "turnpike/ocp_core.hpp"

namespace turnpike::heat {

/// Rectangle [0, lx] x [0, ly] with an (nx+1) x (ny+1) node grid.
struct HeatConfig {
  double lx = 3.0;
  double ly = 1.0;
  int nx = 30;
  int ny = 10;
  double horizon = 10.0;
  double dt = 0.1;
  double bump_center_x = 1.5;
  double bump_center_y = 0.5;
  double bump_scale = 10.0 / 3.0;
  double bump_amplitude = 10.0;

  void validate() const {
    require(nx >= 3 && ny >= 3, "heat grid needs at least 3 cells per side");
    require(lx > 0.0 && ly > 0.0, "heat domain sides must be positive");
    require(dt > 0.0 && horizon > 0.0, "heat dt and horizon must be positive");
  }
  int nodes() const { return (nx + 1) * (ny + 1); }
  int node(int i, int j) const { return j * (nx + 1) + i; }
  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
};

/// g(s) = A e^{1 - 1/(1 - s^2)} for s < 1, else 0.
inline double bump(double s, double amplitude) {
  if (s >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

struct ReferenceField {
  Vector values;
};

inline ReferenceField reference_field(const HeatConfig& cfg) {
  cfg.validate();
  ReferenceField ref{Vector::Zero(cfg.nodes())};
  for (int j = 0; j <= cfg.ny; ++j) {
    for (int i = 0; i <= cfg.nx; ++i) {
      const double s = cfg.bump_scale * std::hypot(i * cfg.hx() - cfg.bump_center_x,
                                                   j * cfg.hy() - cfg.bump_center_y);
      ref.values(cfg.node(i, j)) = bump(s, cfg.bump_amplitude);
    }
  }
  return ref;
}

/// Discrete L2(Omega), H1(Omega) and L2(boundary) weights. The boundary weight
/// acts on the control vector (one entry per boundary node).
struct HeatWeights {
  InnerProduct l2;
  InnerProduct h1;
  InnerProduct boundary;
  SparseMatrix stiffness;
};

struct HeatModel {
  HeatConfig config;
  ControlSystem system;
  CostFunctional cost;
  HeatWeights weights;
  ReferenceField reference;
  std::vector<int> boundary_nodes;  // control index -> node index
};

/// 5-point Laplacian with Neumann control injected through ghost-node
/// elimination: a boundary row on an edge with normal spacing h picks up
/// 2/h times the control value of that node (corners from both edges).
inline HeatModel build_heat_system(const HeatConfig& cfg) {
  cfg.validate();
  const int n = cfg.nodes();
  const double hx = cfg.hx();
  const double hy = cfg.hy();

  std::vector<int> control_of(n, -1);
  std::vector<int> boundary;
  for (int j = 0; j <= cfg.ny; ++j) {
    for (int i = 0; i <= cfg.nx; ++i) {
      if (i == 0 || i == cfg.nx || j == 0 || j == cfg.ny) {
        control_of[cfg.node(i, j)] = static_cast<int>(boundary.size());
        boundary.push_back(cfg.node(i, j));
      }
    }
  }
  const int m = static_cast<int>(boundary.size());

  std::vector<Eigen::Triplet<double>> lap;
  std::vector<Eigen::Triplet<double>> inj;
  Vector mass(n);
  Vector bweight = Vector::Zero(m);
  auto axis = [&](int r, int lo_nb, int hi_nb, bool at_lo, bool at_hi, double h) {
    const double c = 1.0 / (h * h);
    if (at_lo) {
      lap.emplace_back(r, hi_nb, 2 * c);
      lap.emplace_back(r, r, -2 * c);
      inj.emplace_back(r, control_of[r], 2.0 / h);
    } else if (at_hi) {
      lap.emplace_back(r, lo_nb, 2 * c);
      lap.emplace_back(r, r, -2 * c);
      inj.emplace_back(r, control_of[r], 2.0 / h);
    } else {
      lap.emplace_back(r, lo_nb, c);
      lap.emplace_back(r, hi_nb, c);
      lap.emplace_back(r, r, -2 * c);
    }
  };
  for (int j = 0; j <= cfg.ny; ++j) {
    for (int i = 0; i <= cfg.nx; ++i) {
      const int r = cfg.node(i, j);
      const bool xb = i == 0 || i == cfg.nx;
      const bool yb = j == 0 || j == cfg.ny;
      axis(r, i > 0 ? cfg.node(i - 1, j) : -1, i < cfg.nx ? cfg.node(i + 1, j) : -1, i == 0,
           i == cfg.nx, hx);
      axis(r, j > 0 ? cfg.node(i, j - 1) : -1, j < cfg.ny ? cfg.node(i, j + 1) : -1, j == 0,
           j == cfg.ny, hy);
      mass(r) = hx * (xb ? 0.5 : 1.0) * hy * (yb ? 0.5 : 1.0);
      if (control_of[r] >= 0) {
        // Trapezoid weight along each edge the node lies on.
        if (xb) bweight(control_of[r]) += hy * (yb ? 0.5 : 1.0);
        if (yb) bweight(control_of[r]) += hx * (xb ? 0.5 : 1.0);
      }
    }
  }
  SparseMatrix laplacian(n, n);
  laplacian.setFromTriplets(lap.begin(), lap.end());
  SparseMatrix injection(n, m);
  injection.setFromTriplets(inj.begin(), inj.end());

  const SparseMatrix mass_m = sparse_diagonal(mass);
  SparseMatrix stiffness = -(mass_m * laplacian);
  stiffness = 0.5 * (stiffness + SparseMatrix(stiffness.transpose()));
  stiffness.prune(0.0);

  HeatModel model;
  model.config = cfg;
  model.boundary_nodes = boundary;
  model.weights.l2 = InnerProduct(mass_m);
  model.weights.h1 = InnerProduct(SparseMatrix(mass_m + stiffness));
  model.weights.boundary = InnerProduct(sparse_diagonal(bweight));
  model.weights.stiffness = stiffness;
  model.reference = reference_field(cfg);
  model.system = make_system(laplacian, injection, neg_cubic(n, m, 1.0), model.weights.l2,
                             model.weights.boundary, model.weights.h1);
  model.cost = quadratic_tracking(mass_m, model.reference.values, sparse_diagonal(bweight),
                                  Vector::Zero(m));
  return model;
}

struct DiscreteNorms {
  double l2 = 0.0;
  double h1 = 0.0;
  double boundary_l2 = 0.0;
};

/// Weighted norms sqrt(v^T W v). `v` is a nodal field; the boundary norm uses
/// its trace on the boundary nodes.
inline DiscreteNorms discrete_norms(const HeatModel& model, const Vector& v) {
  require(v.size() == model.system.n_state, "discrete_norms: dimension mismatch");
  Vector trace(model.boundary_nodes.size());
  for (std::size_t k = 0; k < model.boundary_nodes.size(); ++k) {
    trace(k) = v(model.boundary_nodes[k]);
  }
  return {model.weights.l2.norm(v), model.weights.h1.norm(v),
          model.weights.boundary.norm(trace)};
}

}  // namespace turnpike::heat
