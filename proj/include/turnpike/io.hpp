#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turnpike/diagnostics.hpp"
#include "turnpike/heat_model.hpp"
#include "turnpike/models.hpp"
#include "turnpike/spectral.hpp"
#include "turnpike/steady_solver.hpp"

namespace turnpike {

namespace fs = std::filesystem;

/// Multiplier sign of emitted adjoints. The solver's own convention pairs the
/// multiplier as +lambda^T (x' - F); `flipped` reports -lambda for comparison
/// with the opposite pairing.
enum class AdjointSign { lagrangian = 1, flipped = -1 };

inline double sign_factor(AdjointSign s) { return static_cast<double>(static_cast<int>(s)); }

inline std::string to_string(AdjointSign s) {
  return s == AdjointSign::lagrangian ? "lagrangian" : "flipped";
}

inline AdjointSign adjoint_sign_from_string(const std::string& s) {
  if (s == "lagrangian" || s == "+1" || s == "1" || s == "+") return AdjointSign::lagrangian;
  if (s == "flipped" || s == "-1" || s == "-") return AdjointSign::flipped;
  throw ArgumentError("unknown adjoint sign '" + s + "' (use lagrangian or flipped)");
}

/// JSON has no infinities; they are written as null and read back as +inf.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline json complex_list(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

inline json to_json(const SteadyOptimum& s, AdjointSign sign = AdjointSign::lagrangian) {
  return {{"x_bar", vector_to_json(s.x_bar)},
          {"u_bar", vector_to_json(s.u_bar)},
          {"lambda_bar", vector_to_json(sign_factor(sign) * s.lambda_bar)},
          {"adjoint_residual", s.adjoint_residual},
          {"stationarity_residual", s.stationarity_residual},
          {"dynamics_residual", s.dynamics_residual},
          {"objective", s.objective},
          {"iterations", s.iterations},
          {"adjoint_sign", to_string(sign)}};
}

inline json to_json(const SolverInfo& s) {
  return {{"iterations", s.iterations},
          {"grad_norm", s.grad_norm},
          {"objective", s.objective},
          {"converged", s.converged}};
}

inline json to_json(const KktResidual& k) {
  return {{"dynamics", k.dynamics}, {"adjoint", k.adjoint}, {"stationarity", k.stationarity}};
}

inline json to_json(const IntervalFinding& f) {
  return {{"epsilon", f.epsilon},
          {"t1", f.t1},
          {"t2", f.t2},
          {"length", f.length},
          {"fraction_of_horizon", f.fraction_of_horizon},
          {"empty", f.empty()}};
}

inline IntervalFinding interval_from_json(const json& j) {
  IntervalFinding f;
  f.epsilon = j.at("epsilon").get<double>();
  f.t1 = j.at("t1").get<double>();
  f.t2 = j.at("t2").get<double>();
  f.length = j.at("length").get<double>();
  f.fraction_of_horizon = j.at("fraction_of_horizon").get<double>();
  // Indices are not stored; only emptiness is meaningful after a round trip.
  if (!j.value("empty", false)) f.first_index = f.last_index = 0;
  return f;
}

inline json to_json(const ExpFit& f) {
  return {{"c", f.c}, {"mu", f.mu}, {"residual", f.residual}, {"points", f.points}};
}

inline json to_json(const ExpStabAudit& a) {
  return {{"c", number_or_null(a.c)},
          {"rho", a.rho},
          {"M", a.m},
          {"mu", a.mu},
          {"t1", a.t1},
          {"t2", a.t2},
          {"s1", a.s1},
          {"s2", a.s2},
          {"bound", number_or_null(a.bound)},
          {"max_violation", number_or_null(a.max_violation)}};
}

inline json to_json(const ExContAudit& a) {
  return {{"c", number_or_null(a.c)},
          {"t_c", a.t_c},
          {"alpha", a.alpha},
          {"s1", a.s1},
          {"s2", a.s2}};
}

inline json to_json(const SemigroupBound& b) {
  return {{"M", b.m}, {"mu", b.mu}, {"valid", b.valid}};
}

inline json to_json(const ObservabilityCertificate& c) {
  return {{"t_c", c.t_c},
          {"alpha", c.alpha},
          {"controllable", c.controllable()},
          {"gramian", matrix_to_json(c.gramian)}};
}

inline ObservabilityCertificate certificate_from_json(const json& j) {
  ObservabilityCertificate c;
  c.t_c = j.at("t_c").get<double>();
  c.alpha = j.at("alpha").get<double>();
  if (j.contains("gramian")) c.gramian = matrix_from_json(j["gramian"], "gramian");
  return c;
}

inline json to_json(const HautusResult& h) {
  json w = json::array();
  for (const auto& s : h.witnesses) w.push_back({s.real(), s.imag()});
  return {{"detectable", h.detectable}, {"witnesses", w}};
}

inline json to_json(const SpectralSplit& s) {
  return {{"margin", s.margin},
          {"unstable_dim", s.unstable_dim()},
          {"stable_dim", static_cast<int>(s.basis_s.cols())},
          {"gap", number_or_null(s.gap)},
          {"spectrum_u", complex_list(s.spectrum_u)},
          {"spectrum_s", complex_list(s.spectrum_s)}};
}

inline json to_json(const WNorm& w) {
  return {{"w", w.w}, {"pointwise_max", w.pointwise.size() ? w.pointwise.maxCoeff() : 0.0}};
}

inline json to_json(const TurnpikeReport& r) {
  json j;
  j["horizon"] = r.horizon;
  j["state_intervals"] = json::array();
  j["adjoint_intervals"] = json::array();
  for (const auto& f : r.state_intervals) j["state_intervals"].push_back(to_json(f));
  for (const auto& f : r.adjoint_intervals) j["adjoint_intervals"].push_back(to_json(f));
  j["state_exceedance"] = r.state_exceedance;
  j["adjoint_exceedance"] = r.adjoint_exceedance;
  j["fit"] = r.fit ? to_json(*r.fit) : json(nullptr);
  j["fit_error"] = r.fit_error;
  j["expstab"] = r.expstab ? to_json(*r.expstab) : json(nullptr);
  j["expstab_error"] = r.expstab_error;
  j["excont"] = r.excont ? to_json(*r.excont) : json(nullptr);
  j["excont_error"] = r.excont_error;
  j["w_norm"] = r.w ? to_json(*r.w) : json(nullptr);
  j["rho"] = r.rho;
  return j;
}

inline void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ArgumentError(path.string() + ": " + e.what());
  }
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  require(header.size() == columns.size(), "write_csv: header and columns disagree");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (c ? "," : "") << format_double(columns[c][r]);
    }
    out << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return columns[c];
    }
    throw ArgumentError("CSV has no column '" + name + "'");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == ',') {
        out.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    }
    return out;
  };
  if (!std::getline(in, line)) throw ArgumentError(path.string() + ": empty CSV");
  t.header = split(line);
  t.columns.resize(t.header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw ArgumentError(path.string() + ": ragged row");
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(std::stod(cells[c]));
  }
  return t;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Eigenvalues as rows (re, im, side) with side "u" for Re >= -margin.
inline void write_spectrum_csv(const fs::path& path, const SpectralSplit& split) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "re,im,side\n";
  auto rows = [&](const Eigen::VectorXcd& v, const char* side) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out << format_double(v(i).real()) << ',' << format_double(v(i).imag()) << ',' << side
          << '\n';
    }
  };
  rows(split.spectrum_u, "u");
  rows(split.spectrum_s, "s");
}

/// Reference field as rows (x, y, value), x fastest.
inline void write_reference_csv(const fs::path& path, const heat::HeatConfig& cfg) {
  const heat::ReferenceField ref = heat::reference_field(cfg);
  std::vector<double> xs, ys, vs;
  for (int j = 0; j <= cfg.ny; ++j) {
    for (int i = 0; i <= cfg.nx; ++i) {
      xs.push_back(i * cfg.hx());
      ys.push_back(j * cfg.hy());
      vs.push_back(ref.values(cfg.node(i, j)));
    }
  }
  write_csv(path, {"x", "y", "value"}, {xs, ys, vs});
}

/// Binary trajectory dump:
///   8 bytes magic "TPKTRAJ1", then int64 n_state, n_control, n_points,
///   adjoint_sign, followed by float64 blocks, each row-major with one row
///   per time point: grid (n_points x 1), states (n_points x n_state),
///   controls (n_points x n_control), adjoints (n_points x n_state).
/// Adjoints are stored with the sign applied.
inline constexpr char kDumpMagic[8] = {'T', 'P', 'K', 'T', 'R', 'A', 'J', '1'};

inline void write_trajectory_dump(const fs::path& path, const Trajectory& traj,
                                  AdjointSign sign = AdjointSign::lagrangian) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::int64_t header[4] = {traj.states.rows(), traj.controls.rows(),
                                  static_cast<std::int64_t>(traj.grid.size()),
                                  static_cast<std::int64_t>(sign)};
  out.write(kDumpMagic, sizeof kDumpMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  auto block = [&](const Matrix& per_time) {
    // Column k of `per_time` is time point k, so its column-major storage is
    // the row-major (time x dim) layout.
    out.write(reinterpret_cast<const char*>(per_time.data()),
              static_cast<std::streamsize>(per_time.size() * sizeof(double)));
  };
  block(traj.grid.transpose());
  block(traj.states);
  block(traj.controls);
  block(sign_factor(sign) * traj.adjoints);
}

struct TrajectoryDump {
  Trajectory trajectory;  // adjoints as stored, i.e. with `sign` applied
  AdjointSign sign = AdjointSign::lagrangian;
};

inline TrajectoryDump read_trajectory_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read " + path.string());
  char magic[8];
  std::int64_t header[4];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || !std::equal(magic, magic + 8, kDumpMagic)) {
    throw ArgumentError(path.string() + ": not a trajectory dump");
  }
  const auto n = header[0], m = header[1], np = header[2];
  if (n <= 0 || m <= 0 || np <= 0) throw ArgumentError(path.string() + ": bad dimensions");
  auto block = [&](Eigen::Index rows) {
    Matrix out(rows, np);
    in.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(out.size() * sizeof(double)));
    if (!in) throw ArgumentError(path.string() + ": truncated dump");
    return out;
  };
  TrajectoryDump d;
  Trajectory& t = d.trajectory;
  t.grid = block(1).transpose();
  t.states = block(n);
  t.controls = block(m);
  t.adjoints = block(n);
  t.horizon = t.grid(np - 1) - t.grid(0);
  t.dt = np > 1 ? t.grid(1) - t.grid(0) : 0.0;
  d.sign = header[3] < 0 ? AdjointSign::flipped : AdjointSign::lagrangian;
  return d;
}

}  // namespace turnpike
