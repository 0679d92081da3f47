#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "thermo_opt/ocp.hpp"

namespace thermo_opt {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorCode::MalformedFile, "bad number '" + s + "' on CSV line " + std::to_string(line));
  }
  return v;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace detail

inline const char* kControlsHeader = "step,time_s,T_e_C,omega_Hz,max_sigma_v_MPa,max_T_C,argmax_node";

/// One row per knot n = 0..N. Row 0 is the rest state (T_e = T0, omega = 0).
inline void write_controls_csv(std::ostream& out, const EvaluationRecord& rec, double T0 = 0.0) {
  const auto& s = rec.schedule;
  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  out << kControlsHeader << '\n';
  for (std::size_t n = 0; n <= s.steps(); ++n) {
    out << n << ',' << s.time(n) << ',' << (n == 0 ? T0 : s.T_e[n - 1]) << ',' << (n == 0 ? 0.0 : s.omega_hz[n - 1])
        << ',';
    if (n < rec.max_sigma_v.size()) {
      out << rec.max_sigma_v[n] << ',' << rec.max_T[n] << ',' << rec.argmax_node[n];
    } else {
      out << "nan,nan,-1";
    }
    out << '\n';
  }
  out.precision(prec);
}

inline void write_controls_csv(const std::string& path, const EvaluationRecord& rec, double T0 = 0.0) {
  auto out = detail::open_output(path);
  write_controls_csv(out, rec, T0);
}

/// Reads a schedule from a CSV with at least the columns step, time_s, T_e_C
/// and omega_Hz. Rows with step 0 are skipped; t_f is the last time value.
inline ControlSchedule read_schedule_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedFile, "schedule CSV is empty");
  ++line_no;
  const auto header = detail::split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MalformedFile, "schedule CSV lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_step = column("step");
  const std::size_t c_time = column("time_s");
  const std::size_t c_te = column("T_e_C");
  const std::size_t c_om = column("omega_Hz");
  ControlSchedule s;
  double last_time = 0.0;
  long expected = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < header.size()) {
      throw Error(ErrorCode::MalformedFile, "short row on CSV line " + std::to_string(line_no));
    }
    const double step = detail::parse_double(cells[c_step], line_no);
    if (step == 0.0) continue;
    if (step != static_cast<double>(expected)) {
      throw Error(ErrorCode::MalformedFile, "steps must be consecutive from 1 (line " + std::to_string(line_no) + ")");
    }
    ++expected;
    last_time = detail::parse_double(cells[c_time], line_no);
    s.T_e.push_back(detail::parse_double(cells[c_te], line_no));
    s.omega_hz.push_back(detail::parse_double(cells[c_om], line_no));
  }
  s.t_f = last_time;
  s.validate();
  return s;
}

inline ControlSchedule read_schedule_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_schedule_csv(in);
}

/// Iteration log: iter, J [MPa], scaled max violation, step norm, evaluations.
inline void write_iterations_csv(std::ostream& out, const SqpResult& res, double stress_scale) {
  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  out << "iter,J_MPa,max_violation,step_norm,evals\n";
  for (const auto& h : res.history) {
    out << h.iter << ',' << h.f * stress_scale << ',' << h.max_violation << ',' << h.step_norm << ',' << h.evaluations
        << '\n';
  }
  out.precision(prec);
}

inline void write_iterations_csv(const std::string& path, const SqpResult& res, double stress_scale) {
  auto out = detail::open_output(path);
  write_iterations_csv(out, res, stress_scale);
}

/// Legacy ASCII VTK of the quadratic mesh with temperature, displacement and
/// von Mises data. Point von Mises is the largest corner value at a vertex;
/// midpoints average their edge ends. Cell data holds the per-tet maximum.
inline void write_vtk(std::ostream& out, const Mesh& mesh, const Vector& T, const StressSnapshot& snap,
                      const std::string& title = "thermo_opt") {
  require_p2(mesh);
  const auto np = mesh.nodes.size();
  const auto nt = mesh.tets.size();
  const auto nv = mesh.vertex_count;
  if (static_cast<std::size_t>(T.size()) != nv) {
    throw Error(ErrorCode::MissingTemperatureField, "temperature field does not match the mesh vertices");
  }
  const bool has_stress = snap.sigma_v.size() == 4 * nt;
  const bool has_disp = static_cast<std::size_t>(snap.displacement.size()) == 3 * np;

  std::vector<double> T_full(np, 0.0);
  std::vector<double> vm(np, 0.0);
  for (std::size_t i = 0; i < nv; ++i) T_full[i] = T[static_cast<Eigen::Index>(i)];
  if (has_stress) {
    for (std::size_t t = 0; t < nt; ++t) {
      for (int c = 0; c < 4; ++c) {
        const auto node = static_cast<std::size_t>(mesh.tets[t][c]);
        vm[node] = std::max(vm[node], snap.sigma_v[4 * t + c]);
      }
    }
  }
  for (const auto& [edge, mid] : mesh.edge_midpoint_index) {
    T_full[mid] = 0.5 * (T_full[edge.first] + T_full[edge.second]);
    vm[mid] = 0.5 * (vm[edge.first] + vm[edge.second]);
  }

  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (const auto& p : mesh.nodes) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  // VTK quadratic tet edge order: 01, 12, 02, 03, 13, 23.
  constexpr std::array<int, 10> kVtkOrder{0, 1, 2, 3, 4, 7, 5, 6, 8, 9};
  out << "CELLS " << nt << ' ' << nt * 11 << '\n';
  for (const auto& tet : mesh.p2_tets) {
    out << 10;
    for (int k : kVtkOrder) out << ' ' << tet[k];
    out << '\n';
  }
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) out << "24\n";
  out << "POINT_DATA " << np << "\nSCALARS temperature_C double 1\nLOOKUP_TABLE default\n";
  for (double v : T_full) out << v << '\n';
  if (has_stress) {
    out << "SCALARS von_mises_MPa double 1\nLOOKUP_TABLE default\n";
    for (double v : vm) out << v << '\n';
  }
  if (has_disp) {
    out << "VECTORS displacement_m double\n";
    for (std::size_t i = 0; i < np; ++i) {
      const auto b = static_cast<Eigen::Index>(3 * i);
      out << snap.displacement[b] << ' ' << snap.displacement[b + 1] << ' ' << snap.displacement[b + 2] << '\n';
    }
  }
  if (has_stress) {
    out << "CELL_DATA " << nt << "\nSCALARS von_mises_max_MPa double 1\nLOOKUP_TABLE default\n";
    for (std::size_t t = 0; t < nt; ++t) {
      out << *std::max_element(snap.sigma_v.begin() + static_cast<std::ptrdiff_t>(4 * t),
                               snap.sigma_v.begin() + static_cast<std::ptrdiff_t>(4 * t + 4))
          << '\n';
    }
  }
  out.precision(prec);
}

inline void write_vtk(const std::string& path, const Mesh& mesh, const Vector& T, const StressSnapshot& snap) {
  auto out = detail::open_output(path);
  write_vtk(out, mesh, T, snap);
}

inline void write_mesh_stats(std::ostream& out, const MeshStats& s) {
  out << "nodes: " << s.vertices << '\n'
      << "quadratic_nodes: " << s.nodes << '\n'
      << "tetrahedra: " << s.tets << '\n'
      << "boundary_triangles: " << s.boundary_tris << '\n'
      << "volume_m3: " << s.volume << '\n'
      << "patch_area_m2:\n";
  for (const auto& [label, area] : s.patch_area) out << "  " << to_string(label) << ": " << area << '\n';
}

}  // namespace thermo_opt
