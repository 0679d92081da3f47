#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "thermo_opt/assembly.hpp"
#include "thermo_opt/linsolve.hpp"
#include "thermo_opt/schedule.hpp"

namespace thermo_opt {

struct HeatSettings {
  bool lumped_mass = false;
  SolverSettings solver{SolverMethod::Cholesky};
  /// Undershoot/overshoot tolerance relative to the driving temperature span.
  double positivity_tol = 1e-6;
};

struct ThermalTrajectory {
  std::vector<double> times;
  std::vector<Vector> fields;
  std::vector<double> max_T;
  /// Steps whose field left [min(T0, T_e), max(T0, T_e)] beyond tolerance.
  std::vector<std::size_t> positivity_violations;
  std::vector<std::string> warnings;
};

struct HeatStepResult {
  Vector T;
  SolveReport report;
};

/// Backward Euler marcher for a fixed mesh, material and step size. The
/// system matrix is assembled (and factorized) once.
class HeatSolver {
 public:
  HeatSolver(const Mesh& mesh, const MaterialProperties& mat, double dt, HeatSettings settings = {})
      : mat_(mat), dt_(dt), settings_(settings) {
    if (!(dt > 0.0)) throw Error(ErrorCode::NonpositiveDt, "heat step requires dt > 0");
    settings_.solver.validate();
    ops_ = assemble_heat_operators(mesh, mat, settings.lumped_mass);
    if (!ops_.has_robin) warnings_.push_back("EmptyRobinPatch: no Robin surface, temperature stays at T_prev");
    system_ = ops_.mass / dt + ops_.stiffness + ops_.robin;
    if (settings_.solver.method == SolverMethod::Cholesky) factor_.factorize(system_);
  }

  double dt() const { return dt_; }
  std::size_t dofs() const { return static_cast<std::size_t>(system_.rows()); }
  const HeatOperators& operators() const { return ops_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  HeatStepResult step(const Vector& T_prev, double T_e) const {
    if (T_prev.size() != system_.rows()) {
      throw Error(ErrorCode::MissingTemperatureField, "previous temperature has wrong length");
    }
    const Vector rhs = ops_.mass * T_prev / dt_ + T_e * ops_.robin_load;
    HeatStepResult out;
    if (factor_.ready()) {
      out.T = factor_.solve(rhs);
      const double bn = rhs.norm();
      out.report.relative_residual = bn > 0.0 ? (rhs - system_ * out.T).norm() / bn : 0.0;
    } else {
      auto res = conjugate_gradient(system_, rhs, settings_.solver, &T_prev);
      out.T = std::move(res.x);
      out.report = res.report;
      if (!out.report.converged) throw Error(ErrorCode::NotConverged, "heat solve did not converge");
    }
    return out;
  }

  ThermalTrajectory run(const ControlSchedule& schedule) const {
    schedule.validate();
    if (std::abs(schedule.dt() - dt_) > 1e-12 * dt_) {
      throw Error(ErrorCode::InvalidSchedule, "schedule step differs from the solver step");
    }
    ThermalTrajectory traj;
    traj.warnings = warnings_;
    const auto n = schedule.steps();
    Vector T = Vector::Constant(system_.rows(), mat_.T0);
    traj.times.push_back(0.0);
    traj.fields.push_back(T);
    traj.max_T.push_back(T.maxCoeff());
    const auto [lo_it, hi_it] = std::minmax_element(schedule.T_e.begin(), schedule.T_e.end());
    const double lo = std::min(mat_.T0, *lo_it);
    const double hi = std::max(mat_.T0, *hi_it);
    const double tol = settings_.positivity_tol * std::max(1.0, hi - lo);
    for (std::size_t s = 1; s <= n; ++s) {
      T = step(T, schedule.T_e[s - 1]).T;
      traj.times.push_back(schedule.time(s));
      traj.max_T.push_back(T.maxCoeff());
      if (T.minCoeff() < lo - tol || T.maxCoeff() > hi + tol) {
        traj.positivity_violations.push_back(s);
        traj.warnings.push_back("PositivityViolation at step " + std::to_string(s) +
                                ": min T = " + std::to_string(T.minCoeff()));
      }
      traj.fields.push_back(T);
    }
    return traj;
  }

 private:
  MaterialProperties mat_;
  double dt_;
  HeatSettings settings_;
  HeatOperators ops_;
  SparseMatrix system_;
  CholeskyFactor factor_;
  std::vector<std::string> warnings_;
};

/// Single implicit step (assembles a fresh system).
inline HeatStepResult heat_step(const Mesh& mesh, const MaterialProperties& mat, const Vector& T_prev, double T_e,
                                double dt, const HeatSettings& settings = {}) {
  return HeatSolver(mesh, mat, dt, settings).step(T_prev, T_e);
}

inline ThermalTrajectory run_heat(const Mesh& mesh, const MaterialProperties& mat, const ControlSchedule& schedule,
                                  const HeatSettings& settings = {}) {
  schedule.validate();
  return HeatSolver(mesh, mat, schedule.dt(), settings).run(schedule);
}

}  // namespace thermo_opt
