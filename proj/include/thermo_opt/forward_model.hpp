#pragma once

#include <atomic>
#include <memory>

#include "thermo_opt/elasticity.hpp"
#include "thermo_opt/heat.hpp"

namespace thermo_opt {

struct ForwardSettings {
  HeatSettings heat;
  ElasticitySettings elasticity;
};

struct SimulationResult {
  ThermalTrajectory thermal;
  MechanicalTrajectory mechanical;
};

/// Coupled heat -> thermoelastic forward map for a fixed mesh and time grid.
///
/// Both system matrices are independent of the controls, so they are
/// factorized in the constructor; simulate() only performs solves and is safe
/// to call concurrently.
class ForwardModel {
 public:
  ForwardModel(const Mesh& mesh, const MaterialProperties& mat, std::size_t steps, double t_f,
               ForwardSettings settings = {})
      : mat_(mat), steps_(steps), t_f_(t_f) {
    mat.validate();
    if (steps < 1 || !(t_f > 0.0)) throw Error(ErrorCode::InvalidSchedule, "time grid needs N >= 1 and t_f > 0");
    mesh_ = std::make_shared<const Mesh>(mesh.is_p2() ? mesh : promote_to_p2(mesh));
    heat_ = std::make_shared<const HeatSolver>(*mesh_, mat_, t_f / static_cast<double>(steps), settings.heat);
    elastic_ = std::make_shared<const ElasticitySolver>(*mesh_, mat_, settings.elasticity);
  }

  const Mesh& mesh() const { return *mesh_; }
  const MaterialProperties& material() const { return mat_; }
  std::size_t steps() const { return steps_; }
  double t_f() const { return t_f_; }
  const HeatSolver& heat() const { return *heat_; }
  const ElasticitySolver& elasticity() const { return *elastic_; }

  /// Number of simulate() calls so far.
  long evaluations() const { return evaluations_->load(); }
  void reset_evaluations() const { evaluations_->store(0); }

  SimulationResult simulate(const ControlSchedule& schedule, bool keep_fields = false) const {
    schedule.validate();
    if (schedule.steps() != steps_ || std::abs(schedule.t_f - t_f_) > 1e-9 * t_f_) {
      throw Error(ErrorCode::InvalidSchedule, "schedule does not match the model time grid");
    }
    ++*evaluations_;
    SimulationResult out;
    out.thermal = heat_->run(schedule);
    out.mechanical = run_mechanics(*elastic_, *mesh_, mat_, schedule, out.thermal, keep_fields);
    if (!keep_fields) {
      out.thermal.fields.clear();
      out.thermal.fields.shrink_to_fit();
    }
    return out;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  MaterialProperties mat_;
  std::size_t steps_;
  double t_f_;
  std::shared_ptr<const HeatSolver> heat_;
  std::shared_ptr<const ElasticitySolver> elastic_;
  std::shared_ptr<std::atomic<long>> evaluations_ = std::make_shared<std::atomic<long>>(0);
};

}  // namespace thermo_opt
