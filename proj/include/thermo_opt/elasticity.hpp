#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "thermo_opt/assembly.hpp"
#include "thermo_opt/heat.hpp"
#include "thermo_opt/linsolve.hpp"
#include "thermo_opt/schedule.hpp"

namespace thermo_opt {

/// Symmetric stress in Voigt order xx, yy, zz, yz, xz, xy.
using StressVoigt = std::array<double, 6>;

inline constexpr double kPaPerMPa = 1e6;

/// Equivalent stress sqrt(3/2 dev:dev).
inline double von_mises(const StressVoigt& s) {
  const double mean = (s[0] + s[1] + s[2]) / 3.0;
  const double dx = s[0] - mean;
  const double dy = s[1] - mean;
  const double dz = s[2] - mean;
  const double contraction = dx * dx + dy * dy + dz * dz + 2.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]);
  return std::sqrt(1.5 * contraction);
}

inline double von_mises(const Eigen::Matrix3d& sigma) {
  const Eigen::Matrix3d dev = sigma - sigma.trace() / 3.0 * Eigen::Matrix3d::Identity();
  return std::sqrt(1.5 * (dev.array() * dev.array()).sum());
}

/// Stress tensor at every element corner (4 per tet, corner order of
/// mesh.tets), from the P2 displacement gradient and the P1 temperature at
/// that vertex. Discontinuous between elements.
inline std::vector<StressVoigt> recover_stress(const Mesh& mesh, const MaterialProperties& mat, const Vector& u,
                                               const Vector& T) {
  require_p2(mesh);
  const double lambda = mat.lambda();
  const double mu = mat.mu();
  const double beta = mat.thermal_modulus();
  std::vector<StressVoigt> out(4 * mesh.tets.size());
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& nodes = mesh.p2_tets[t];
    const TetGeometry geo = TetGeometry::of(mesh, t);
    for (int c = 0; c < 4; ++c) {
      Barycentric b{0.0, 0.0, 0.0, 0.0};
      b[c] = 1.0;
      const auto grad = geo.p2_gradients(b);
      double du[3][3] = {};
      for (int a = 0; a < 10; ++a) {
        const auto base = 3 * static_cast<Eigen::Index>(nodes[a]);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) du[i][j] += u[base + i] * grad[a][j];
      }
      const double tr = du[0][0] + du[1][1] + du[2][2];
      const double iso = lambda * tr - beta * (T[mesh.tets[t][c]] - mat.T0);
      out[4 * t + c] = {2.0 * mu * du[0][0] + iso,      2.0 * mu * du[1][1] + iso,      2.0 * mu * du[2][2] + iso,
                        mu * (du[1][2] + du[2][1]), mu * (du[0][2] + du[2][0]), mu * (du[0][1] + du[1][0])};
    }
  }
  return out;
}

struct StressSnapshot {
  std::vector<double> sigma_v;  // MPa, index 4 * tet + corner
  double max_value = 0.0;       // MPa
  int max_node = -1;
  Point3 max_location{0.0, 0.0, 0.0};
  Vector displacement;          // m, interleaved P2 nodal components
};

struct MechanicalTrajectory {
  std::vector<StressSnapshot> snapshots;
  double max_over_time = 0.0;
  std::size_t argmax_step = 0;
};

/// Builds the von Mises field and its maximum; ties go to the lowest node.
inline StressSnapshot make_snapshot(const Mesh& mesh, const MaterialProperties& mat, Vector u, const Vector& T,
                                    bool keep_fields = true) {
  StressSnapshot snap;
  const auto stress = recover_stress(mesh, mat, u, T);
  snap.sigma_v.resize(stress.size());
  double best = -1.0;
  int best_node = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < stress.size(); ++i) {
    const double v = von_mises(stress[i]) / kPaPerMPa;
    snap.sigma_v[i] = v;
    const int node = mesh.tets[i / 4][i % 4];
    if (v > best || (v == best && node < best_node)) {
      best = v;
      best_node = node;
    }
  }
  snap.max_value = best;
  snap.max_node = best_node;
  snap.max_location = mesh.nodes[best_node];
  if (keep_fields) {
    snap.displacement = std::move(u);
  } else {
    snap.sigma_v.clear();
    snap.sigma_v.shrink_to_fit();
  }
  return snap;
}

struct ElasticitySettings {
  SolverSettings solver{SolverMethod::Cholesky};
  bool apply_symmetry = true;
  /// Fix u_z at one node so axial translation is removed when only the cut
  /// planes are constrained. Stress-neutral: axial loads self-equilibrate.
  bool pin_axial = true;
  std::vector<DofConstraint> extra_constraints;
};

namespace detail {

inline std::vector<Vector> rigid_body_modes(const Mesh& mesh) {
  const auto n = mesh.nodes.size();
  Point3 c{0.0, 0.0, 0.0};
  for (const auto& p : mesh.nodes)
    for (int d = 0; d < 3; ++d) c[d] += p[d] / static_cast<double>(n);
  std::vector<Vector> modes(6, Vector::Zero(3 * static_cast<Eigen::Index>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = 3 * static_cast<Eigen::Index>(i);
    const Point3 x = geometry::sub(mesh.nodes[i], c);
    for (int d = 0; d < 3; ++d) modes[d][r + d] = 1.0;
    // Rotations about x, y, z.
    modes[3][r + 1] = -x[2];
    modes[3][r + 2] = x[1];
    modes[4][r + 0] = x[2];
    modes[4][r + 2] = -x[0];
    modes[5][r + 0] = -x[1];
    modes[5][r + 1] = x[0];
  }
  return modes;
}

}  // namespace detail

/// Quasi-static thermoelastic solver. Stiffness and constraints are fixed,
/// so the constrained matrix is factorized once and reused for every load.
class ElasticitySolver {
 public:
  ElasticitySolver(const Mesh& mesh, const MaterialProperties& mat, ElasticitySettings settings = {})
      : mesh_(&mesh), mat_(mat), settings_(std::move(settings)) {
    require_p2(mesh);
    settings_.solver.validate();
    ops_ = assemble_elasticity_operators(mesh, mat);
    std::vector<DofConstraint> constraints;
    if (settings_.apply_symmetry) constraints = symmetry_constraints(mesh);
    if (settings_.pin_axial) constraints.push_back({axial_pin_node(mesh), {0.0, 0.0, 1.0}, 0.0});
    constraints.insert(constraints.end(), settings_.extra_constraints.begin(), settings_.extra_constraints.end());
    template_.dof_map = ops_.dof_map;
    template_.matrix = ops_.stiffness;
    template_.rhs = Vector::Zero(ops_.dof_map.size());
    apply_constraints(template_, constraints);
    // Constraint values enter only through the right-hand side of the
    // template; record them to add to every load.
    constraint_rhs_ = template_.rhs;
    probe_rigid_modes();
    if (settings_.solver.method == SolverMethod::Cholesky) {
      try {
        factor_.factorize(template_.matrix);
      } catch (const Error&) {
        throw Error(ErrorCode::SingularMatrix, "constrained elasticity matrix is not positive definite");
      }
    }
  }

  const ElasticityOperators& operators() const { return ops_; }
  const SparseSystem& constrained_template() const { return template_; }

  /// Loads for one temperature field / rotation (rad/s) in the constrained
  /// (possibly rotated) frame.
  Vector constrained_rhs(const Vector& T, double omega_rad) const {
    if (T.size() != static_cast<Eigen::Index>(mesh_->vertex_count)) {
      throw Error(ErrorCode::MissingTemperatureField, "temperature field must live on the vertex nodes");
    }
    Vector load = omega_rad * omega_rad * ops_.centrifugal + ops_.coupling * (T.array() - mat_.T0).matrix();
    return to_constrained(load);
  }

  Vector solve_displacement(const Vector& T, double omega_rad) const {
    const Vector rhs = constrained_rhs(T, omega_rad);
    Vector local;
    if (factor_.ready()) {
      local = factor_.solve(rhs);
    } else {
      auto res = conjugate_gradient(template_.matrix, rhs, settings_.solver);
      if (!res.report.converged) throw Error(ErrorCode::NotConverged, "elasticity CG did not converge");
      local = std::move(res.x);
    }
    return template_.to_physical(local);
  }

  /// Solves several load cases at once (columns of the result).
  Eigen::MatrixXd solve_displacements(const std::vector<Vector>& T, const std::vector<double>& omega_rad) const {
    const auto ndof = template_.matrix.rows();
    Eigen::MatrixXd rhs(ndof, static_cast<Eigen::Index>(T.size()));
    for (std::size_t i = 0; i < T.size(); ++i) rhs.col(static_cast<Eigen::Index>(i)) = constrained_rhs(T[i], omega_rad[i]);
    Eigen::MatrixXd out(ndof, rhs.cols());
    if (factor_.ready()) {
      const Eigen::MatrixXd local = factor_.solve(rhs);
      for (Eigen::Index c = 0; c < rhs.cols(); ++c) out.col(c) = template_.to_physical(local.col(c));
    } else {
      for (std::size_t i = 0; i < T.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = solve_displacement(T[i], omega_rad[i]);
    }
    return out;
  }

  StressSnapshot solve_step(const Vector& T, double omega_rad, bool keep_fields = true) const {
    return make_snapshot(*mesh_, mat_, solve_displacement(T, omega_rad), T, keep_fields);
  }

  /// Vertex with the smallest z (then smallest index) on a cut plane, or on
  /// the whole mesh when there is none.
  static int axial_pin_node(const Mesh& mesh) {
    std::set<int> candidates;
    for (const auto& tri : mesh.boundary_tris) {
      const auto label = mesh.label_of(tri);
      if (label == PatchLabel::SymX || label == PatchLabel::SymY) candidates.insert(tri.nodes.begin(), tri.nodes.end());
    }
    if (candidates.empty()) {
      for (std::size_t i = 0; i < mesh.vertex_count; ++i) candidates.insert(static_cast<int>(i));
    }
    int best = *candidates.begin();
    for (int c : candidates) {
      if (mesh.nodes[c][2] < mesh.nodes[best][2]) best = c;
    }
    return best;
  }

 private:
  Vector to_constrained(const Vector& load) const {
    Vector rhs = load;
    for (const auto& f : template_.frames) {
      const auto r = template_.dof_map.row(f.node);
      rhs.segment<3>(r) = f.basis.transpose() * load.segment<3>(r);
    }
    // Known constraint values shift the free rows; fixed rows carry the value.
    for (auto r : template_.constrained_rows) rhs[r] = 0.0;
    return rhs + constraint_rhs_;
  }

  void probe_rigid_modes() const {
    const Vector diag = template_.matrix.diagonal();
    std::vector<char> fixed(template_.matrix.rows(), 0);
    for (auto r : template_.constrained_rows) fixed[r] = 1;
    for (const auto& mode : detail::rigid_body_modes(*mesh_)) {
      Vector local = mode;
      for (const auto& f : template_.frames) {
        const auto r = template_.dof_map.row(f.node);
        local.segment<3>(r) = f.basis.transpose() * mode.segment<3>(r);
      }
      for (Eigen::Index r = 0; r < local.size(); ++r)
        if (fixed[r]) local[r] = 0.0;
      const double denom = local.dot(diag.cwiseProduct(local));
      if (denom == 0.0) continue;
      const double q = local.dot(template_.matrix * local) / denom;
      if (q < 1e-10) {
        throw Error(ErrorCode::RigidBodyMode, "constraints leave a rigid-body motion free");
      }
    }
  }

  const Mesh* mesh_;
  MaterialProperties mat_;
  ElasticitySettings settings_;
  ElasticityOperators ops_;
  SparseSystem template_;
  Vector constraint_rhs_;
  CholeskyFactor factor_;
};

inline StressSnapshot solve_thermoelastic_step(const Mesh& mesh, const MaterialProperties& mat, const Vector& T,
                                               double omega_rad, const ElasticitySettings& settings = {}) {
  return ElasticitySolver(mesh, mat, settings).solve_step(T, omega_rad);
}

/// One snapshot per time knot. Knot 0 is the state at rest (omega = 0).
inline MechanicalTrajectory run_mechanics(const ElasticitySolver& solver, const Mesh& mesh,
                                          const MaterialProperties& mat, const ControlSchedule& schedule,
                                          const ThermalTrajectory& thermal, bool keep_fields = true) {
  schedule.validate();
  if (thermal.fields.size() != schedule.steps() + 1) {
    throw Error(ErrorCode::InvalidSchedule, "thermal trajectory length does not match the schedule");
  }
  std::vector<double> omega(schedule.steps() + 1, 0.0);
  for (std::size_t s = 1; s <= schedule.steps(); ++s) omega[s] = hz_to_rad_per_s(schedule.omega_hz[s - 1]);
  const Eigen::MatrixXd u = solver.solve_displacements(thermal.fields, omega);
  MechanicalTrajectory traj;
  for (std::size_t s = 0; s < omega.size(); ++s) {
    traj.snapshots.push_back(make_snapshot(mesh, mat, u.col(static_cast<Eigen::Index>(s)), thermal.fields[s], keep_fields));
    if (traj.snapshots.back().max_value > traj.max_over_time || s == 0) {
      traj.max_over_time = traj.snapshots.back().max_value;
      traj.argmax_step = s;
    }
  }
  return traj;
}

inline MechanicalTrajectory run_mechanics(const Mesh& mesh, const MaterialProperties& mat,
                                          const ControlSchedule& schedule, const ThermalTrajectory& thermal,
                                          const ElasticitySettings& settings = {}) {
  return run_mechanics(ElasticitySolver(mesh, mat, settings), mesh, mat, schedule, thermal);
}

}  // namespace thermo_opt
