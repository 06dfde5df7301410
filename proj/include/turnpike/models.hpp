#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnpike/diagnostics.hpp"
#include "turnpike/heat_model.hpp"
#include "turnpike/ocp_core.hpp"
#include "turnpike/steady_solver.hpp"

namespace turnpike {

using nlohmann::json;

/// A registered problem instance: dynamics, cost, initial state, and the norms
/// the diagnostics should use.
struct Model {
  std::string name;
  ControlSystem system;
  CostFunctional cost;
  Vector x0;
  DeviationNorms norms;
  SteadyOptions steady_options;
  double default_horizon = 10.0;
  double default_dt = 0.1;
  json params;
  std::optional<heat::HeatModel> heat;
};

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ArgumentError(what + ": expected a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) {
    // A flat array is a column.
    Matrix m(rows, 1);
    for (Eigen::Index i = 0; i < rows; ++i) m(i, 0) = j[i].get<double>();
    return m;
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw ArgumentError(what + ": ragged matrix");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ArgumentError(what + ": expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

namespace detail {

inline Model finish_generic(std::string name, ControlSystem sys, CostFunctional cost, Vector x0,
                            json params) {
  require(x0.size() == sys.n_state, name + ": x0 has the wrong dimension");
  Model model;
  model.name = std::move(name);
  model.norms = default_norms(sys);
  model.system = std::move(sys);
  model.cost = std::move(cost);
  model.x0 = std::move(x0);
  model.params = std::move(params);
  return model;
}

/// Scalar LQ tracking with optional cubic damping -c x^3.
inline Model make_lq1d(const json& p) {
  const double a = p.value("a", -1.0);
  const double b = p.value("b", 1.0);
  const double q = p.value("q", 1.0);
  const double r = p.value("r", 1.0);
  const double x_d = p.value("x_d", 1.0);
  const double u_d = p.value("u_d", 0.0);
  const double x0 = p.value("x0", 0.0);
  const double cubic = p.value("cubic", 0.0);
  require(q >= 0.0 && r > 0.0, "lq1d: need q >= 0 and r > 0");
  auto one = [](double v) { return to_sparse(Matrix::Constant(1, 1, v)); };
  Nonlinearity f = cubic != 0.0 ? neg_cubic(1, 1, cubic) : zero_nonlinearity(1, 1);
  ControlSystem sys = make_system(one(a), one(b), std::move(f), InnerProduct::identity(1),
                                  InnerProduct::identity(1));
  CostFunctional cost =
      quadratic_tracking(one(q), Vector::Constant(1, x_d), one(r), Vector::Constant(1, u_d));
  json params = {{"a", a}, {"b", b}, {"q", q}, {"r", r}, {"x_d", x_d},
                 {"u_d", u_d}, {"x0", x0}, {"cubic", cubic}};
  return finish_generic("lq1d", std::move(sys), std::move(cost), Vector::Constant(1, x0),
                        std::move(params));
}

/// LQ tracking with matrix data; defaults to the scalar problem
/// A = -1, B = 1, Q = R = 1, x_d = 1, u_d = 0, x0 = 0.
inline Model make_lq_tracking(const json& p) {
  const Matrix a = p.contains("A") ? matrix_from_json(p["A"], "A") : Matrix::Constant(1, 1, -1.0);
  const int n = static_cast<int>(a.rows());
  const Matrix b = p.contains("B") ? matrix_from_json(p["B"], "B") : Matrix::Constant(n, 1, 1.0);
  const int m = static_cast<int>(b.cols());
  const Matrix q = p.contains("Q") ? matrix_from_json(p["Q"], "Q") : Matrix::Identity(n, n);
  const Matrix r = p.contains("R") ? matrix_from_json(p["R"], "R") : Matrix::Identity(m, m);
  const Vector x_d = p.contains("x_d") ? vector_from_json(p["x_d"], "x_d") : Vector::Ones(n);
  const Vector u_d = p.contains("u_d") ? vector_from_json(p["u_d"], "u_d") : Vector::Zero(m);
  const Vector x0 = p.contains("x0") ? vector_from_json(p["x0"], "x0") : Vector::Zero(n);
  const std::string kind = p.value("nonlinearity", std::string("none"));
  const double coef = p.value("coefficient", 1.0);
  ControlSystem sys =
      make_system(to_sparse(a), to_sparse(b), make_nonlinearity(kind, n, m, coef),
                  InnerProduct::identity(n), InnerProduct::identity(m));
  CostFunctional cost = quadratic_tracking(to_sparse(q), x_d, to_sparse(r), u_d);
  json params = {{"A", matrix_to_json(a)},   {"B", matrix_to_json(b)},
                 {"Q", matrix_to_json(q)},   {"R", matrix_to_json(r)},
                 {"x_d", vector_to_json(x_d)}, {"u_d", vector_to_json(u_d)},
                 {"x0", vector_to_json(x0)}, {"nonlinearity", kind},
                 {"coefficient", coef}};
  return finish_generic("lq-tracking", std::move(sys), std::move(cost), x0, std::move(params));
}

inline heat::HeatConfig heat_config_from_json(const json& p) {
  heat::HeatConfig cfg;
  cfg.lx = p.value("lx", cfg.lx);
  cfg.ly = p.value("ly", cfg.ly);
  cfg.nx = p.value("nx", cfg.nx);
  cfg.ny = p.value("ny", cfg.ny);
  cfg.horizon = p.value("T", cfg.horizon);
  cfg.dt = p.value("dt", cfg.dt);
  if (p.contains("bump_center")) {
    cfg.bump_center_x = p["bump_center"].at(0).get<double>();
    cfg.bump_center_y = p["bump_center"].at(1).get<double>();
  }
  cfg.bump_scale = p.value("bump_scale", cfg.bump_scale);
  cfg.bump_amplitude = p.value("bump_amplitude", cfg.bump_amplitude);
  cfg.validate();
  return cfg;
}

inline json heat_config_to_json(const heat::HeatConfig& cfg) {
  return {{"lx", cfg.lx},
          {"ly", cfg.ly},
          {"nx", cfg.nx},
          {"ny", cfg.ny},
          {"T", cfg.horizon},
          {"dt", cfg.dt},
          {"bump_center", {cfg.bump_center_x, cfg.bump_center_y}},
          {"bump_scale", cfg.bump_scale},
          {"bump_amplitude", cfg.bump_amplitude}};
}

inline Model make_heat2d(const json& p) {
  const heat::HeatConfig cfg = heat_config_from_json(p);
  heat::HeatModel hm = heat::build_heat_system(cfg);
  Model model;
  model.name = "heat2d";
  model.system = hm.system;
  model.cost = hm.cost;
  model.x0 = Vector::Zero(hm.system.n_state);
  model.norms = {hm.weights.h1, hm.weights.boundary, hm.weights.l2, "H1(Omega)",
                 "L2(boundary)", "L2(Omega)"};
  model.steady_options.linear_warm_start = true;
  model.default_horizon = cfg.horizon;
  model.default_dt = cfg.dt;
  model.params = heat_config_to_json(cfg);
  model.heat = std::move(hm);
  return model;
}

}  // namespace detail

inline std::vector<std::string> registered_models() { return {"lq1d", "lq-tracking", "heat2d"}; }

/// Registry lookup. Unknown names throw ArgumentError.
inline Model make_model(const std::string& name, const json& params = json::object()) {
  const json p = params.is_null() ? json::object() : params;
  if (name == "lq1d") return detail::make_lq1d(p);
  if (name == "lq-tracking") return detail::make_lq_tracking(p);
  if (name == "heat2d") return detail::make_heat2d(p);
  throw ArgumentError("unknown model '" + name + "'");
}

/// Full configuration document: every matrix as a row-major nested array.
inline json model_to_json(const Model& model) {
  const ControlSystem& s = model.system;
  json j;
  j["model"] = model.name;
  j["params"] = model.params;
  j["n_state"] = s.n_state;
  j["n_control"] = s.n_control;
  j["lin_state_op"] = matrix_to_json(Matrix(s.lin_state_op));
  j["control_op"] = matrix_to_json(Matrix(s.control_op));
  j["nonlinearity"] = {{"kind", s.nonlinearity.kind},
                       {"coefficient", s.nonlinearity.coefficient}};
  j["state_inner"] = matrix_to_json(Matrix(s.state_inner.weight()));
  j["control_inner"] = matrix_to_json(Matrix(s.control_inner.weight()));
  if (s.h1_inner) j["h1_inner"] = matrix_to_json(Matrix(s.h1_inner->weight()));
  if (model.cost.quadratic) {
    const auto& qd = *model.cost.quadratic;
    j["cost"] = {{"Q", matrix_to_json(Matrix(qd.q))},
                 {"x_d", vector_to_json(qd.x_d)},
                 {"R", matrix_to_json(Matrix(qd.r))},
                 {"u_d", vector_to_json(qd.u_d)}};
  }
  j["x0"] = vector_to_json(model.x0);
  return j;
}

/// Inverse of model_to_json. A document with only "model" (and optionally
/// "params") goes through the registry; otherwise the matrices are used as is.
inline Model model_from_json(const json& j) {
  if (!j.contains("lin_state_op")) {
    return make_model(j.at("model").get<std::string>(), j.value("params", json::object()));
  }
  const Matrix a = matrix_from_json(j.at("lin_state_op"), "lin_state_op");
  const Matrix b = matrix_from_json(j.at("control_op"), "control_op");
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  require(j.value("n_state", n) == n && j.value("n_control", m) == m,
          "model document: declared dimensions disagree with the matrices");
  const json nl = j.value("nonlinearity", json{{"kind", "none"}});
  std::optional<InnerProduct> h1;
  if (j.contains("h1_inner")) h1 = InnerProduct(matrix_from_json(j["h1_inner"], "h1_inner"));
  ControlSystem sys = make_system(
      to_sparse(a), to_sparse(b),
      make_nonlinearity(nl.value("kind", std::string("none")), n, m, nl.value("coefficient", 1.0)),
      InnerProduct(matrix_from_json(j.at("state_inner"), "state_inner")),
      InnerProduct(matrix_from_json(j.at("control_inner"), "control_inner")), std::move(h1));
  const json& c = j.at("cost");
  CostFunctional cost = quadratic_tracking(to_sparse(matrix_from_json(c.at("Q"), "Q")),
                                           vector_from_json(c.at("x_d"), "x_d"),
                                           to_sparse(matrix_from_json(c.at("R"), "R")),
                                           vector_from_json(c.at("u_d"), "u_d"));
  const Vector x0 = j.contains("x0") ? vector_from_json(j["x0"], "x0") : Vector::Zero(n);
  Model model = detail::finish_generic(j.value("model", std::string("generic")), std::move(sys),
                                       std::move(cost), x0, j.value("params", json::object()));
  return model;
}

}  // namespace turnpike
