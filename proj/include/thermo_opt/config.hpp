#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "thermo_opt/gmsh.hpp"
#include "thermo_opt/ocp.hpp"

namespace thermo_opt {

/// Where the mesh comes from: a Gmsh file or one of the built-in generators
/// ("demo", "box", "sector").
struct MeshSource {
  std::optional<std::string> file;
  std::map<int, PatchLabel> physical_map;
  bool strict = true;

  std::string generator = "demo";
  int level = 1;
  // box
  std::array<double, 3> size{1.0, 1.0, 1.0};
  std::array<int, 3> cells{1, 1, 1};
  // sector
  double r_inner = 0.10;
  double r_outer = 0.35;
  double z_len = 0.02;
  double angle_deg = 90.0;
  std::optional<BladeSpec> blade;
  PatchLabel ends = PatchLabel::Robin;
};

struct OutputSettings {
  std::string directory = "out";
  bool vtk = true;
};

struct RunConfig {
  MeshSource mesh;
  MaterialProperties material;
  OcpProblem ocp;
  ForwardSettings forward;
  SqpSettings sqp;
  GuessKind initial_guess = GuessKind::HeatFirst;
  OutputSettings output;
  /// Directory of the config file; relative paths resolve against it.
  std::filesystem::path base_dir = ".";

  void validate() const {
    material.validate();
    ocp.validate();
    sqp.validate();
    forward.heat.solver.validate();
    forward.elasticity.solver.validate();
  }
};

namespace detail {

using Json = nlohmann::json;

inline void reject_unknown(const Json& obj, const std::string& section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidConfig, "section '" + section + "' must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in '" + section + "'");
  }
}

template <class T>
void read_field(const Json& obj, const char* key, T& target, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad value for '" + section + "." + key + "'");
  }
}

inline SolverMethod parse_solver_method(const std::string& s) {
  if (s == "cholesky") return SolverMethod::Cholesky;
  if (s == "cg") return SolverMethod::CG;
  throw Error(ErrorCode::InvalidConfig, "unknown solver method '" + s + "'");
}

inline void read_solver(const Json& obj, const std::string& section, SolverSettings& s) {
  reject_unknown(obj, section, {"method", "rel_tol", "max_iter"});
  std::string method = s.method == SolverMethod::CG ? "cg" : "cholesky";
  read_field(obj, "method", method, section);
  s.method = parse_solver_method(method);
  read_field(obj, "rel_tol", s.rel_tol, section);
  read_field(obj, "max_iter", s.max_iter, section);
}

inline PatchLabel require_label(const std::string& name) {
  const auto label = parse_patch_label(name);
  if (!label) throw Error(ErrorCode::InvalidConfig, "unknown patch label '" + name + "'");
  return *label;
}

inline void read_mesh(const Json& j, MeshSource& m) {
  reject_unknown(j, "mesh", {"file", "physical_map", "strict", "generator", "level", "size", "cells", "r_inner",
                             "r_outer", "z_len", "angle_deg", "blade", "ends"});
  if (j.contains("file")) m.file = j.at("file").get<std::string>();
  read_field(j, "strict", m.strict, "mesh");
  if (j.contains("physical_map")) {
    const auto& pm = j.at("physical_map");
    if (!pm.is_object()) throw Error(ErrorCode::InvalidConfig, "mesh.physical_map must be an object");
    for (const auto& [key, value] : pm.items()) {
      int tag = 0;
      try {
        tag = std::stoi(key);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "physical_map keys must be integer tags");
      }
      m.physical_map[tag] = require_label(value.get<std::string>());
    }
  }
  read_field(j, "generator", m.generator, "mesh");
  read_field(j, "level", m.level, "mesh");
  read_field(j, "size", m.size, "mesh");
  read_field(j, "cells", m.cells, "mesh");
  read_field(j, "r_inner", m.r_inner, "mesh");
  read_field(j, "r_outer", m.r_outer, "mesh");
  read_field(j, "z_len", m.z_len, "mesh");
  read_field(j, "angle_deg", m.angle_deg, "mesh");
  if (j.contains("ends")) m.ends = require_label(j.at("ends").get<std::string>());
  if (j.contains("blade") && !j.at("blade").is_null()) {
    const auto& b = j.at("blade");
    reject_unknown(b, "mesh.blade", {"height", "thickness", "fillet", "center_angle_deg"});
    BladeSpec spec;
    read_field(b, "height", spec.height, "mesh.blade");
    read_field(b, "thickness", spec.thickness, "mesh.blade");
    read_field(b, "fillet", spec.fillet, "mesh.blade");
    if (b.contains("center_angle_deg")) spec.center_angle = b.at("center_angle_deg").get<double>() * std::numbers::pi / 180.0;
    m.blade = spec;
  }
  if (m.level < 1) throw Error(ErrorCode::InvalidConfig, "mesh.level must be >= 1");
  if (!m.file && m.generator != "demo" && m.generator != "box" && m.generator != "sector") {
    throw Error(ErrorCode::InvalidConfig, "unknown mesh generator '" + m.generator + "'");
  }
}

}  // namespace detail

/// Parses a JSON run config. Every key is optional; unknown keys are errors.
inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  using detail::read_field;
  detail::Json j;
  try {
    j = detail::Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  detail::reject_unknown(j, "config", {"mesh", "material", "time", "ocp", "solver", "sqp", "initial_guess", "output"});
  RunConfig c;
  c.base_dir = base_dir;
  try {
    if (j.contains("mesh")) detail::read_mesh(j.at("mesh"), c.mesh);
    if (j.contains("material")) {
      const auto& m = j.at("material");
      detail::reject_unknown(m, "material", {"E", "nu", "rho", "alpha", "c_p", "k", "h", "T0"});
      auto& mat = c.material;
      read_field(m, "E", mat.E, "material");
      read_field(m, "nu", mat.nu, "material");
      read_field(m, "rho", mat.rho, "material");
      read_field(m, "alpha", mat.alpha, "material");
      read_field(m, "c_p", mat.c_p, "material");
      read_field(m, "k", mat.k, "material");
      read_field(m, "h", mat.h, "material");
      read_field(m, "T0", mat.T0, "material");
    }
    if (j.contains("time")) {
      const auto& t = j.at("time");
      detail::reject_unknown(t, "time", {"steps", "t_f"});
      read_field(t, "steps", c.ocp.steps, "time");
      read_field(t, "t_f", c.ocp.t_f, "time");
    }
    if (j.contains("ocp")) {
      const auto& o = j.at("ocp");
      detail::reject_unknown(o, "ocp", {"T_e_min", "T_e_max", "omega_min", "omega_max", "T_e_final", "omega_final",
                                        "T_final", "omega_rate_limit", "symmetric_rate", "stress_scale",
                                        "temperature_scale", "omega_scale", "smooth_max"});
      auto& p = c.ocp;
      read_field(o, "T_e_min", p.T_e_min, "ocp");
      read_field(o, "T_e_max", p.T_e_max, "ocp");
      read_field(o, "omega_min", p.omega_min, "ocp");
      read_field(o, "omega_max", p.omega_max, "ocp");
      read_field(o, "T_e_final", p.T_e_final, "ocp");
      read_field(o, "omega_final", p.omega_final, "ocp");
      read_field(o, "T_final", p.T_final, "ocp");
      read_field(o, "omega_rate_limit", p.omega_rate_limit, "ocp");
      read_field(o, "symmetric_rate", p.symmetric_rate, "ocp");
      read_field(o, "stress_scale", p.stress_scale, "ocp");
      read_field(o, "temperature_scale", p.temperature_scale, "ocp");
      read_field(o, "omega_scale", p.omega_scale, "ocp");
      read_field(o, "smooth_max", p.smooth_max, "ocp");
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::reject_unknown(s, "solver", {"heat", "elasticity", "lumped_mass", "pin_axial", "symmetry"});
      if (s.contains("heat")) detail::read_solver(s.at("heat"), "solver.heat", c.forward.heat.solver);
      if (s.contains("elasticity")) {
        detail::read_solver(s.at("elasticity"), "solver.elasticity", c.forward.elasticity.solver);
      }
      read_field(s, "lumped_mass", c.forward.heat.lumped_mass, "solver");
      read_field(s, "pin_axial", c.forward.elasticity.pin_axial, "solver");
      read_field(s, "symmetry", c.forward.elasticity.apply_symmetry, "solver");
    }
    if (j.contains("sqp")) {
      const auto& s = j.at("sqp");
      detail::reject_unknown(s, "sqp", {"f_tol", "constraint_tol", "max_iter", "fd_step", "central_differences",
                                        "max_backtracks", "armijo", "penalty_initial", "penalty_growth",
                                        "relaxation_penalty", "stall_limit"});
      auto& q = c.sqp;
      read_field(s, "f_tol", q.f_tol, "sqp");
      read_field(s, "constraint_tol", q.constraint_tol, "sqp");
      read_field(s, "max_iter", q.max_iter, "sqp");
      read_field(s, "fd_step", q.fd_step, "sqp");
      read_field(s, "central_differences", q.central_differences, "sqp");
      read_field(s, "max_backtracks", q.max_backtracks, "sqp");
      read_field(s, "armijo", q.armijo, "sqp");
      read_field(s, "penalty_initial", q.penalty_initial, "sqp");
      read_field(s, "penalty_growth", q.penalty_growth, "sqp");
      read_field(s, "relaxation_penalty", q.relaxation_penalty, "sqp");
      read_field(s, "stall_limit", q.stall_limit, "sqp");
    }
    if (j.contains("initial_guess")) c.initial_guess = parse_guess_kind(j.at("initial_guess").get<std::string>());
    if (j.contains("output")) {
      const auto& o = j.at("output");
      detail::reject_unknown(o, "output", {"directory", "vtk"});
      read_field(o, "directory", c.output.directory, "output");
      read_field(o, "vtk", c.output.vtk, "output");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config type error: ") + e.what());
  }
  c.validate();
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_run_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  return parse_run_config(read_text_file(path), base.empty() ? std::filesystem::path(".") : base);
}

inline std::filesystem::path resolve_path(const RunConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : c.base_dir / path;
}

inline Mesh load_mesh(const RunConfig& c) {
  const auto& m = c.mesh;
  if (m.file) {
    GmshReadOptions opts;
    opts.physical_map = m.physical_map;
    opts.strict = m.strict;
    return read_gmsh(resolve_path(c, *m.file).string(), opts);
  }
  if (m.generator == "demo") return generate_demo_disk_blade(m.level);
  if (m.generator == "box") return generate_box(m.size[0], m.size[1], m.size[2], m.cells[0], m.cells[1], m.cells[2]);
  Mesh mesh = generate_annular_sector(m.r_inner, m.r_outer, m.z_len, m.angle_deg * std::numbers::pi / 180.0, m.blade,
                                      SectorResolution::scaled(m.level));
  mesh.patch_tags[kSectorEnds] = m.ends;
  return mesh;
}

}  // namespace thermo_opt
