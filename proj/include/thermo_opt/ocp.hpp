#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermo_opt/finite_difference.hpp"
#include "thermo_opt/forward_model.hpp"
#include "thermo_opt/sqp.hpp"

namespace thermo_opt {

/// Control bounds, terminal targets and rate limit of the activation problem.
/// Temperatures in degC, rotation in Hz, rate limit in Hz/s.
struct OcpProblem {
  std::size_t steps = 20;
  double t_f = 1800.0;
  double T_e_min = 0.0;
  double T_e_max = 1000.0;
  double omega_min = 0.0;
  double omega_max = 60.0;
  double T_e_final = 750.0;
  double omega_final = 60.0;
  double T_final = 400.0;
  double omega_rate_limit = 0.1;
  /// Also bound deceleration by the rate limit.
  bool symmetric_rate = false;

  double stress_scale = 1000.0;       // MPa
  double temperature_scale = 1000.0;  // degC
  double omega_scale = 60.0;          // Hz

  /// LogSumExp temperature (MPa) for a smoothed max over time; 0 = exact max.
  double smooth_max = 0.0;

  double dt() const { return t_f / static_cast<double>(steps); }
  std::size_t dimension() const { return 2 * steps; }
  std::size_t inequality_count() const { return 2 + steps * (symmetric_rate ? 2 : 1); }

  void validate() const {
    if (steps < 1 || !(t_f > 0.0)) throw Error(ErrorCode::InvalidConfig, "time grid needs N >= 1 and t_f > 0");
    if (!(T_e_min < T_e_max) || !(omega_min < omega_max)) {
      throw Error(ErrorCode::InvalidConfig, "control bounds must satisfy min < max");
    }
    if (T_e_final < T_e_min || T_e_final > T_e_max || omega_final < omega_min || omega_final > omega_max) {
      throw Error(ErrorCode::InvalidConfig, "terminal targets must lie within the control bounds");
    }
    if (!(stress_scale > 0.0) || !(temperature_scale > 0.0) || !(omega_scale > 0.0) || smooth_max < 0.0) {
      throw Error(ErrorCode::InvalidConfig, "scales must be positive");
    }
    if (!(omega_rate_limit > 0.0) || omega_rate_limit * t_f < omega_final - std::max(0.0, omega_min)) {
      throw Error(ErrorCode::InfeasibleRateLimit, "rate limit cannot reach the terminal rotation from rest");
    }
  }
};

/// Constraint values in physical units. Inequalities are slacks (>= 0 means
/// satisfied), the equality is a residual.
struct ConstraintValues {
  double omega_terminal = 0.0;         // omega(t_f) - omega_f  [Hz]
  double T_e_terminal = 0.0;           // T_e(t_f) - T_e,f      [degC]
  double T_terminal = 0.0;             // max T(t_f) - T_f      [degC]
  std::vector<double> rate;            // omega_lim*dt - (omega[n] - omega[n-1])  [Hz]
  std::vector<double> rate_decel;      // omega_lim*dt + (omega[n] - omega[n-1])  [Hz], symmetric option only

  /// Largest violation in scaled units.
  double max_scaled_violation(const OcpProblem& p) const {
    double v = std::abs(omega_terminal) / p.omega_scale;
    v = std::max(v, -T_e_terminal / p.temperature_scale);
    v = std::max(v, -T_terminal / p.temperature_scale);
    for (double r : rate) v = std::max(v, -r / p.omega_scale);
    for (double r : rate_decel) v = std::max(v, -r / p.omega_scale);
    return v;
  }
};

struct EvaluationRecord {
  ControlSchedule schedule;
  double J = std::numeric_limits<double>::infinity();  // MPa
  ConstraintValues constraints;
  bool failed = false;
  std::string message;
  /// Per knot n = 0..N (knot 0 is the rest state).
  std::vector<double> max_sigma_v;
  std::vector<double> max_T;
  std::vector<int> argmax_node;
  std::size_t argmax_step = 0;
  std::optional<SimulationResult> trajectories;
};

inline ConstraintValues ocp_constraints(const OcpProblem& problem, const ControlSchedule& s, double max_T_final) {
  ConstraintValues c;
  const std::size_t n = s.steps();
  const double dt = s.dt();
  c.omega_terminal = s.omega_hz[n - 1] - problem.omega_final;
  c.T_e_terminal = s.T_e[n - 1] - problem.T_e_final;
  c.T_terminal = max_T_final - problem.T_final;
  c.rate.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = i == 0 ? 0.0 : s.omega_hz[i - 1];
    c.rate[i] = problem.omega_rate_limit * dt - (s.omega_hz[i] - prev);
    if (problem.symmetric_rate) c.rate_decel.push_back(problem.omega_rate_limit * dt + (s.omega_hz[i] - prev));
  }
  return c;
}

inline double time_max(const OcpProblem& problem, const std::vector<double>& values) {
  const double peak = *std::max_element(values.begin(), values.end());
  if (problem.smooth_max <= 0.0) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - peak) / problem.smooth_max);
  return peak + problem.smooth_max * std::log(sum);
}

/// Runs the coupled forward model and evaluates objective and constraints.
/// Solver failures produce a flagged record with J = +inf.
inline EvaluationRecord evaluate(const ForwardModel& model, const OcpProblem& problem, const ControlSchedule& schedule,
                                 bool keep_trajectories = false) {
  EvaluationRecord rec;
  rec.schedule = schedule;
  try {
    SimulationResult sim = model.simulate(schedule, keep_trajectories);
    const auto& snaps = sim.mechanical.snapshots;
    for (const auto& snap : snaps) {
      rec.max_sigma_v.push_back(snap.max_value);
      rec.argmax_node.push_back(snap.max_node);
    }
    rec.max_T = sim.thermal.max_T;
    rec.argmax_step = sim.mechanical.argmax_step;
    rec.J = time_max(problem, rec.max_sigma_v);
    rec.constraints = ocp_constraints(problem, schedule, sim.thermal.max_T.back());
    if (keep_trajectories) rec.trajectories = std::move(sim);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::InvalidSchedule) throw;
    rec.failed = true;
    rec.message = err.what();
    rec.J = std::numeric_limits<double>::infinity();
    rec.constraints = ocp_constraints(problem, schedule, std::numeric_limits<double>::quiet_NaN());
  }
  return rec;
}

/// Physical decision vector [T_e[0..N-1], omega[0..N-1]].
inline Eigen::VectorXd schedule_to_vector(const ControlSchedule& s) {
  const auto n = static_cast<Eigen::Index>(s.steps());
  Eigen::VectorXd v(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = s.T_e[static_cast<std::size_t>(i)];
    v[n + i] = s.omega_hz[static_cast<std::size_t>(i)];
  }
  return v;
}

inline ControlSchedule vector_to_schedule(const Eigen::VectorXd& v, double t_f) {
  const auto n = v.size() / 2;
  ControlSchedule s;
  s.t_f = t_f;
  s.T_e.assign(v.data(), v.data() + n);
  s.omega_hz.assign(v.data() + n, v.data() + 2 * n);
  return s;
}

/// Stacked physical outputs [J, omega residual, T_e slack, T slack, rate slacks...].
inline Eigen::VectorXd stack_outputs(const EvaluationRecord& rec) {
  const auto& c = rec.constraints;
  Eigen::VectorXd out(4 + c.rate.size() + c.rate_decel.size());
  out[0] = rec.J;
  out[1] = c.omega_terminal;
  out[2] = c.T_e_terminal;
  out[3] = c.T_terminal;
  Eigen::Index k = 4;
  for (double r : c.rate) out[k++] = r;
  for (double r : c.rate_decel) out[k++] = r;
  return out;
}

struct OcpGradient {
  Eigen::VectorXd dJ;             // MPa per (degC | Hz)
  Eigen::MatrixXd jacobian;       // rows follow stack_outputs
  std::vector<char> column_failed;
  long evaluations = 0;
};

/// Finite-difference derivatives of J and every constraint with respect to
/// the physical controls. Forward mode costs exactly 2N forward evaluations.
inline OcpGradient fd_gradient(const ForwardModel& model, const OcpProblem& problem, const ControlSchedule& schedule,
                               const EvaluationRecord& baseline, const FdSettings& settings = {}) {
  if (baseline.failed) throw Error(ErrorCode::ForwardModelFailure, "baseline evaluation failed");
  const Eigen::VectorXd x = schedule_to_vector(schedule);
  const auto n = static_cast<Eigen::Index>(schedule.steps());
  Eigen::VectorXd lo(2 * n), hi(2 * n);
  lo << Eigen::VectorXd::Constant(n, problem.T_e_min), Eigen::VectorXd::Constant(n, problem.omega_min);
  hi << Eigen::VectorXd::Constant(n, problem.T_e_max), Eigen::VectorXd::Constant(n, problem.omega_max);
  auto f = [&](const Eigen::VectorXd& xp) -> Eigen::VectorXd {
    const EvaluationRecord rec = evaluate(model, problem, vector_to_schedule(xp, schedule.t_f));
    if (rec.failed) throw Error(ErrorCode::ForwardModelFailure, rec.message);
    return stack_outputs(rec);
  };
  FdJacobian jac = fd_jacobian(f, x, stack_outputs(baseline), lo, hi, settings);
  OcpGradient out;
  out.dJ = jac.jacobian.row(0).transpose();
  out.jacobian = std::move(jac.jacobian);
  out.column_failed = std::move(jac.column_failed);
  out.evaluations = jac.evaluations;
  return out;
}

enum class GuessKind { LinearRamp, HeatFirst };

inline GuessKind parse_guess_kind(const std::string& s) {
  if (s == "linear-ramp") return GuessKind::LinearRamp;
  if (s == "heat-first") return GuessKind::HeatFirst;
  throw Error(ErrorCode::InvalidConfig, "unknown initial guess '" + s + "'");
}

inline std::string to_string(GuessKind k) { return k == GuessKind::LinearRamp ? "linear-ramp" : "heat-first"; }

inline ControlSchedule initial_guess(GuessKind kind, const OcpProblem& problem) {
  problem.validate();
  const std::size_t n = problem.steps;
  ControlSchedule s;
  s.t_f = problem.t_f;
  s.T_e.resize(n);
  s.omega_hz.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i + 1) / static_cast<double>(n);
    if (kind == GuessKind::LinearRamp) {
      s.T_e[i] = problem.T_e_final * frac;
      s.omega_hz[i] = problem.omega_final * frac;
    } else {
      s.T_e[i] = i + 1 < n ? problem.T_e_max : problem.T_e_final;
      const double remaining = problem.t_f - s.time(i + 1);
      s.omega_hz[i] = problem.omega_final - problem.omega_rate_limit * remaining;
    }
    s.T_e[i] = std::clamp(s.T_e[i], problem.T_e_min, problem.T_e_max);
    s.omega_hz[i] = std::clamp(s.omega_hz[i], problem.omega_min, problem.omega_max);
  }
  return s;
}

/// Scaled NLP view of the control problem: x = [T_e / T_scale, omega / omega_scale],
/// objective J / stress_scale, equality and inequality rows scaled likewise.
class OcpNlp {
 public:
  OcpNlp(const ForwardModel& model, OcpProblem problem) : model_(&model), problem_(std::move(problem)) {
    problem_.validate();
    if (problem_.steps != model.steps() || std::abs(problem_.t_f - model.t_f()) > 1e-9 * problem_.t_f) {
      throw Error(ErrorCode::InvalidConfig, "problem time grid differs from the forward model");
    }
  }

  const OcpProblem& problem() const { return problem_; }

  Eigen::VectorXd to_x(const ControlSchedule& s) const {
    Eigen::VectorXd x = schedule_to_vector(s);
    const auto n = static_cast<Eigen::Index>(problem_.steps);
    x.head(n) /= problem_.temperature_scale;
    x.tail(n) /= problem_.omega_scale;
    return x;
  }

  ControlSchedule to_schedule(const Eigen::VectorXd& x) const {
    Eigen::VectorXd v = x;
    const auto n = static_cast<Eigen::Index>(problem_.steps);
    v.head(n) *= problem_.temperature_scale;
    v.tail(n) *= problem_.omega_scale;
    return vector_to_schedule(v, problem_.t_f);
  }

  NlpEvaluation scaled(const EvaluationRecord& rec) const {
    NlpEvaluation e;
    e.ok = !rec.failed;
    e.f = rec.J / problem_.stress_scale;
    const auto& c = rec.constraints;
    e.c_eq.resize(1);
    e.c_eq[0] = c.omega_terminal / problem_.omega_scale;
    e.c_in.resize(static_cast<Eigen::Index>(problem_.inequality_count()));
    Eigen::Index k = 0;
    e.c_in[k++] = c.T_e_terminal / problem_.temperature_scale;
    e.c_in[k++] = c.T_terminal / problem_.temperature_scale;
    for (double r : c.rate) e.c_in[k++] = r / problem_.omega_scale;
    for (double r : c.rate_decel) e.c_in[k++] = r / problem_.omega_scale;
    return e;
  }

  NlpProblem nlp() const {
    NlpProblem p;
    p.evaluate = [this](const Eigen::VectorXd& x) { return scaled(evaluate(*model_, problem_, to_schedule(x))); };
    const auto n = static_cast<Eigen::Index>(problem_.steps);
    p.lower.resize(2 * n);
    p.upper.resize(2 * n);
    p.lower << Eigen::VectorXd::Constant(n, problem_.T_e_min / problem_.temperature_scale),
        Eigen::VectorXd::Constant(n, problem_.omega_min / problem_.omega_scale);
    p.upper << Eigen::VectorXd::Constant(n, problem_.T_e_max / problem_.temperature_scale),
        Eigen::VectorXd::Constant(n, problem_.omega_max / problem_.omega_scale);
    return p;
  }

 private:
  const ForwardModel* model_;
  OcpProblem problem_;
};

struct OptimizationResult {
  SqpResult sqp;
  ControlSchedule schedule;
  EvaluationRecord final_record;
};

/// Minimizes the peak von Mises stress from the given initial schedule.
inline OptimizationResult optimize(const ForwardModel& model, const OcpProblem& problem, const ControlSchedule& x0,
                                   const SqpSettings& settings = {}) {
  OcpNlp nlp(model, problem);
  OptimizationResult out;
  out.sqp = minimize(nlp.nlp(), nlp.to_x(x0), settings);
  out.schedule = nlp.to_schedule(out.sqp.x);
  out.final_record = evaluate(model, problem, out.schedule, true);
  return out;
}

}  // namespace thermo_opt
