#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermo_opt/finite_difference.hpp"
#include "thermo_opt/qp.hpp"

namespace thermo_opt {

struct SqpIteration {
  int iter = 0;
  double f = 0.0;
  double max_violation = 0.0;
  double step_norm = 0.0;
  long evaluations = 0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double alpha = 0.0;
  double penalty = 0.0;
  bool relaxed_qp = false;
  bool line_search_failed = false;
};

struct SqpSettings {
  double f_tol = 1e-8;
  /// Largest accepted constraint violation at convergence.
  double constraint_tol = 1e-8;
  int max_iter = 200;
  double fd_step = kDefaultFdStep;
  bool central_differences = false;
  unsigned workers = 1;
  int max_backtracks = 10;
  double armijo = 1e-4;
  double penalty_initial = 1.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e12;
  /// Weight of the slack variable in the relaxed subproblem.
  double relaxation_penalty = 1e6;
  /// Consecutive failed line searches before NonsmoothStall.
  int stall_limit = 3;
  /// Called after every iteration record is appended (optional).
  std::function<void(const SqpIteration&)> on_iteration;

  void validate() const {
    if (!(f_tol > 0.0) || !(constraint_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerances must be positive");
    if (max_iter < 1) throw Error(ErrorCode::InvalidConfig, "max_iter must be at least 1");
    if (!(fd_step > 0.0)) throw Error(ErrorCode::InvalidConfig, "fd_step must be positive");
    if (max_backtracks < 0 || stall_limit < 1) throw Error(ErrorCode::InvalidConfig, "invalid line-search limits");
    if (!(penalty_growth > 1.0) || !(penalty_initial > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "penalty parameters must be positive, growth > 1");
    }
  }
};

/// Values at one point. Equality rows must vanish, inequality rows be >= 0.
struct NlpEvaluation {
  double f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd c_eq;
  Eigen::VectorXd c_in;
  bool ok = true;
};

struct NlpGradient {
  Eigen::VectorXd df;
  Eigen::MatrixXd J_eq;
  Eigen::MatrixXd J_in;
  std::vector<char> column_failed;
};

struct NlpProblem {
  std::function<NlpEvaluation(const Eigen::VectorXd&)> evaluate;
  /// Optional. When empty, finite differences of `evaluate` are used.
  std::function<NlpGradient(const Eigen::VectorXd&, const NlpEvaluation&)> gradient;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

enum class SqpStatus { Converged, NotConverged, NonsmoothStall, CallbackFailure };

inline std::string to_string(SqpStatus s) {
  switch (s) {
    case SqpStatus::Converged: return "Converged";
    case SqpStatus::NotConverged: return "NotConverged";
    case SqpStatus::NonsmoothStall: return "NonsmoothStall";
    case SqpStatus::CallbackFailure: return "CallbackFailure";
  }
  return "Unknown";
}

struct SqpResult {
  Eigen::VectorXd x;
  NlpEvaluation value;
  SqpStatus status = SqpStatus::NotConverged;
  int iterations = 0;
  long evaluations = 0;
  long gradient_evaluations = 0;
  long line_search_probes = 0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd mult_eq;
  Eigen::VectorXd mult_in;
  std::vector<SqpIteration> history;
  std::string message;
};

inline double max_violation(const NlpEvaluation& e) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < e.c_eq.size(); ++i) v = std::max(v, std::abs(e.c_eq[i]));
  for (Eigen::Index i = 0; i < e.c_in.size(); ++i) v = std::max(v, -e.c_in[i]);
  return v;
}

/// Powell-damped BFGS update. Returns B unchanged for s = 0.
inline Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& B, const Eigen::VectorXd& s, const Eigen::VectorXd& y,
                                   double* theta_out = nullptr) {
  if (theta_out) *theta_out = 1.0;
  if (s.squaredNorm() == 0.0) return B;
  const Eigen::VectorXd Bs = B * s;
  const double sBs = s.dot(Bs);
  if (!(sBs > 0.0)) return B;
  const double sy = s.dot(y);
  double theta = 1.0;
  if (sy < 0.2 * sBs) theta = 0.8 * sBs / (sBs - sy);
  if (theta_out) *theta_out = theta;
  const Eigen::VectorXd r = theta * y + (1.0 - theta) * Bs;
  const double sr = s.dot(r);
  Eigen::MatrixXd out = B - Bs * Bs.transpose() / sBs + r * r.transpose() / sr;
  return 0.5 * (out + out.transpose());
}

namespace detail {

// Augmented Lagrangian merit with fixed multipliers.
struct Merit {
  Eigen::VectorXd lambda;  // equality
  Eigen::VectorXd mu;      // inequality, >= 0
  double rho = 1.0;

  double value(const NlpEvaluation& e) const {
    if (!e.ok || !std::isfinite(e.f)) return std::numeric_limits<double>::infinity();
    double phi = e.f;
    for (Eigen::Index i = 0; i < e.c_eq.size(); ++i) phi += -lambda[i] * e.c_eq[i] + 0.5 * rho * e.c_eq[i] * e.c_eq[i];
    for (Eigen::Index i = 0; i < e.c_in.size(); ++i) {
      const double c = e.c_in[i];
      phi += c <= mu[i] / rho ? -mu[i] * c + 0.5 * rho * c * c : -mu[i] * mu[i] / (2.0 * rho);
    }
    return phi;
  }

  double directional(const NlpEvaluation& e, const NlpGradient& g, const Eigen::VectorXd& d) const {
    double dphi = g.df.dot(d);
    if (e.c_eq.size() > 0) {
      const Eigen::VectorXd jd = g.J_eq * d;
      for (Eigen::Index i = 0; i < e.c_eq.size(); ++i) dphi += (-lambda[i] + rho * e.c_eq[i]) * jd[i];
    }
    if (e.c_in.size() > 0) {
      const Eigen::VectorXd jd = g.J_in * d;
      for (Eigen::Index i = 0; i < e.c_in.size(); ++i) {
        if (e.c_in[i] <= mu[i] / rho) dphi += (-mu[i] + rho * e.c_in[i]) * jd[i];
      }
    }
    return dphi;
  }
};

inline Eigen::VectorXd lagrangian_gradient(const NlpGradient& g, const Eigen::VectorXd& lambda,
                                           const Eigen::VectorXd& mu) {
  Eigen::VectorXd out = g.df;
  if (lambda.size() > 0) out -= g.J_eq.transpose() * lambda;
  if (mu.size() > 0) out -= g.J_in.transpose() * mu;
  return out;
}

struct Subproblem {
  QpSolution qp;
  Eigen::VectorXd d;
  bool relaxed = false;
};

// Solves the SQP subproblem; falls back to a relaxed form with slack xi in
// [0, 1] scaling the constraint values when the linearization is infeasible.
inline Subproblem solve_subproblem(const Eigen::MatrixXd& B, const NlpGradient& g, const NlpEvaluation& e,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double relax_penalty) {
  QpProblem qp{B, g.df, g.J_eq, e.c_eq, g.J_in, e.c_in, lo, hi};
  Subproblem out;
  try {
    out.qp = solve_qp(qp);
    out.d = out.qp.x;
    return out;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::QpInfeasible) throw;
  }
  const auto n = B.rows();
  const auto p = e.c_eq.size();
  const auto m = e.c_in.size();
  QpProblem rx;
  rx.G = Eigen::MatrixXd::Zero(n + 1, n + 1);
  rx.G.topLeftCorner(n, n) = B;
  rx.G(n, n) = relax_penalty;
  rx.g = Eigen::VectorXd::Zero(n + 1);
  rx.g.head(n) = g.df;
  rx.g[n] = relax_penalty;
  // c (1 - xi) + J d  ->  [J, -c] [d; xi] + c
  rx.A_eq.resize(p, n + 1);
  if (p > 0) rx.A_eq << g.J_eq, -e.c_eq;
  rx.b_eq = e.c_eq;
  rx.A_in.resize(m, n + 1);
  if (m > 0) rx.A_in << g.J_in, -e.c_in;
  rx.b_in = e.c_in;
  rx.lower.resize(n + 1);
  rx.upper.resize(n + 1);
  rx.lower << lo, 0.0;
  rx.upper << hi, 1.0;
  out.qp = solve_qp(rx);
  out.relaxed = true;
  out.d = out.qp.x.head(n);
  out.qp.mult_lower.conservativeResize(n);
  out.qp.mult_upper.conservativeResize(n);
  return out;
}

}  // namespace detail

/// SLSQP-family minimizer: damped BFGS, QP subproblem with linearized
/// constraints, augmented Lagrangian line search.
inline SqpResult minimize(const NlpProblem& problem, const Eigen::VectorXd& x0, const SqpSettings& settings = {}) {
  settings.validate();
  const auto n = x0.size();
  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd lower = problem.lower.size() == n ? problem.lower : Eigen::VectorXd::Constant(n, -inf);
  const Eigen::VectorXd upper = problem.upper.size() == n ? problem.upper : Eigen::VectorXd::Constant(n, inf);
  if ((lower.array() > upper.array()).any()) throw Error(ErrorCode::InvalidConfig, "lower bound exceeds upper bound");

  SqpResult res;
  std::atomic<long> evaluations{0};
  auto evaluate = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    NlpEvaluation e;
    try {
      e = problem.evaluate(x);
    } catch (const std::exception&) {
      e.ok = false;
    }
    if (e.ok && (!std::isfinite(e.f) || !e.c_eq.allFinite() || !e.c_in.allFinite())) e.ok = false;
    return e;
  };

  auto gradient = [&](const Eigen::VectorXd& x, const NlpEvaluation& e) {
    ++res.gradient_evaluations;
    if (problem.gradient) return problem.gradient(x, e);
    const auto p = e.c_eq.size();
    const auto m = e.c_in.size();
    Eigen::VectorXd f0(1 + p + m);
    f0 << e.f, e.c_eq, e.c_in;
    auto stacked = [&](const Eigen::VectorXd& xp) -> Eigen::VectorXd {
      const NlpEvaluation ep = evaluate(xp);
      if (!ep.ok) throw Error(ErrorCode::ForwardModelFailure, "probe failed");
      Eigen::VectorXd v(1 + p + m);
      v << ep.f, ep.c_eq, ep.c_in;
      return v;
    };
    FdSettings fd{settings.fd_step, settings.central_differences, settings.workers};
    FdJacobian jac = fd_jacobian(stacked, x, f0, lower, upper, fd);
    NlpGradient g;
    g.df = jac.jacobian.row(0).transpose();
    g.J_eq = jac.jacobian.middleRows(1, p);
    g.J_in = jac.jacobian.bottomRows(m);
    g.column_failed = std::move(jac.column_failed);
    return g;
  };

  auto push_history = [&](const SqpIteration& rec) {
    res.history.push_back(rec);
    if (settings.on_iteration) settings.on_iteration(rec);
  };

  Eigen::VectorXd x = x0.cwiseMax(lower).cwiseMin(upper);
  NlpEvaluation ev = evaluate(x);
  auto finish = [&](SqpStatus status, std::string message) {
    res.x = x;
    res.value = ev;
    res.status = status;
    res.message = std::move(message);
    res.evaluations = evaluations.load();
    return res;
  };
  if (!ev.ok) return finish(SqpStatus::CallbackFailure, "evaluation failed at the initial point");
  const auto p = ev.c_eq.size();
  const auto m = ev.c_in.size();

  NlpGradient grad;
  try {
    grad = gradient(x, ev);
  } catch (const std::exception& err) {
    return finish(SqpStatus::CallbackFailure, std::string("gradient failed at iteration 0: ") + err.what());
  }

  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
  detail::Merit merit{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), settings.penalty_initial};
  res.mult_eq = Eigen::VectorXd::Zero(p);
  res.mult_in = Eigen::VectorXd::Zero(m);
  push_history({0, ev.f, max_violation(ev), 0.0, evaluations.load(), 0, 0, 0, merit.rho, false, false});
  int consecutive_failures = 0;

  for (int k = 1; k <= settings.max_iter; ++k) {
    res.iterations = k;
    detail::Subproblem sub;
    try {
      sub = detail::solve_subproblem(B, grad, ev, lower - x, upper - x, settings.relaxation_penalty);
    } catch (const Error& err) {
      return finish(SqpStatus::NotConverged, std::string("subproblem failed: ") + err.what());
    }
    const Eigen::VectorXd& d = sub.d;
    res.mult_eq = sub.qp.mult_eq;
    res.mult_in = sub.qp.mult_in.head(m);
    merit.lambda = res.mult_eq;
    merit.mu = res.mult_in;

    const Eigen::VectorXd lag_grad = detail::lagrangian_gradient(grad, merit.lambda, merit.mu) -
                                     sub.qp.mult_lower + sub.qp.mult_upper;
    res.kkt_residual = lag_grad.lpNorm<Eigen::Infinity>();

    if (d.norm() < settings.f_tol && max_violation(ev) < settings.constraint_tol) {
      push_history({k, ev.f, max_violation(ev), d.norm(), evaluations.load(), merit.value(ev),
                             merit.value(ev), 0.0, merit.rho, sub.relaxed, false});
      return finish(SqpStatus::Converged, "search direction below tolerance");
    }

    double dphi = merit.directional(ev, grad, d);
    while (dphi >= -1e-14 * std::max(1.0, std::abs(ev.f)) * d.norm() && merit.rho < settings.penalty_max) {
      merit.rho *= settings.penalty_growth;
      dphi = merit.directional(ev, grad, d);
    }
    const double phi0 = merit.value(ev);

    double alpha = 1.0;
    bool accepted = false;
    NlpEvaluation trial;
    Eigen::VectorXd x_trial;
    double phi_trial = inf;
    if (dphi < 0.0) {
      for (int bt = 0; bt <= settings.max_backtracks; ++bt) {
        x_trial = (x + alpha * d).cwiseMax(lower).cwiseMin(upper);
        trial = evaluate(x_trial);
        ++res.line_search_probes;
        phi_trial = merit.value(trial);
        if (phi_trial <= phi0 + settings.armijo * alpha * dphi) {
          accepted = true;
          break;
        }
        double next = 0.1 * alpha;
        if (std::isfinite(phi_trial)) {
          const double denom = 2.0 * (phi_trial - phi0 - dphi * alpha);
          if (denom > 0.0) next = std::max(next, -dphi * alpha * alpha / denom);
        }
        alpha = std::min(next, 0.5 * alpha);
      }
    }

    SqpIteration rec{k, ev.f, max_violation(ev), 0.0, 0, phi0, phi0, 0.0, merit.rho, sub.relaxed, !accepted};
    if (!accepted) {
      B = Eigen::MatrixXd::Identity(n, n);
      rec.evaluations = evaluations.load();
      push_history(rec);
      const bool significant = grad.df.lpNorm<Eigen::Infinity>() > settings.f_tol;
      if (++consecutive_failures >= settings.stall_limit && significant) {
        return finish(SqpStatus::NonsmoothStall, "line search failed in consecutive iterations");
      }
      continue;
    }
    consecutive_failures = 0;

    const Eigen::VectorXd s = x_trial - x;
    const double f_old = ev.f;
    NlpGradient grad_new;
    try {
      grad_new = gradient(x_trial, trial);
    } catch (const std::exception& err) {
      x = x_trial;
      ev = trial;
      return finish(SqpStatus::CallbackFailure,
                    "gradient failed at iteration " + std::to_string(k) + ": " + err.what());
    }
    const Eigen::VectorXd y = detail::lagrangian_gradient(grad_new, merit.lambda, merit.mu) -
                              detail::lagrangian_gradient(grad, merit.lambda, merit.mu);
    B = bfgs_update(B, s, y);
    x = x_trial;
    ev = trial;
    grad = std::move(grad_new);

    rec.f = ev.f;
    rec.max_violation = max_violation(ev);
    rec.step_norm = s.norm();
    rec.merit_after = phi_trial;
    rec.alpha = alpha;
    rec.evaluations = evaluations.load();
    push_history(rec);

    if ((std::abs(ev.f - f_old) < settings.f_tol || s.norm() < settings.f_tol) &&
        max_violation(ev) < settings.constraint_tol) {
      return finish(SqpStatus::Converged, "objective change below tolerance");
    }
  }
  return finish(SqpStatus::NotConverged, "iteration limit reached");
}

}  // namespace thermo_opt
