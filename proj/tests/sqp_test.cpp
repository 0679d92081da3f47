#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "thermo_opt/sqp.hpp"

using namespace thermo_opt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NlpProblem circle_on_line() {
  NlpProblem p;
  p.evaluate = [](const VectorXd& x) {
    NlpEvaluation e;
    e.f = x.squaredNorm();
    e.c_eq = VectorXd::Constant(1, x[0] + x[1] - 1.0);
    e.c_in = VectorXd(0);
    return e;
  };
  p.lower = VectorXd::Constant(2, -kInf);
  p.upper = VectorXd::Constant(2, kInf);
  return p;
}

NlpProblem rosenbrock() {
  NlpProblem p;
  p.evaluate = [](const VectorXd& x) {
    NlpEvaluation e;
    e.f = std::pow(1 - x[0], 2) + 100 * std::pow(x[1] - x[0] * x[0], 2);
    e.c_eq = VectorXd(0);
    e.c_in = VectorXd(0);
    return e;
  };
  p.lower = VectorXd::Constant(2, -2.0);
  p.upper = VectorXd::Constant(2, 2.0);
  return p;
}

}  // namespace

TEST(Minimize, EqualityConstrainedQuadratic) {
  const SqpResult r = minimize(circle_on_line(), VectorXd::Zero(2));
  EXPECT_EQ(r.status, SqpStatus::Converged) << r.message;
  EXPECT_NEAR(r.x[0], 0.5, 1e-6);
  EXPECT_NEAR(r.x[1], 0.5, 1e-6);
  ASSERT_EQ(r.mult_eq.size(), 1);
  EXPECT_NEAR(std::abs(r.mult_eq[0]), 1.0, 1e-5);
}

TEST(Minimize, RosenbrockInBox) {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  const SqpResult r = minimize(rosenbrock(), x0);
  EXPECT_EQ(r.status, SqpStatus::Converged) << r.message;
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(Minimize, AnalyticGradientCallback) {
  NlpProblem p = rosenbrock();
  p.gradient = [](const VectorXd& x, const NlpEvaluation&) {
    NlpGradient g;
    g.df = VectorXd(2);
    g.df << -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] * x[0]), 200 * (x[1] - x[0] * x[0]);
    g.J_eq = MatrixXd(0, 2);
    g.J_in = MatrixXd(0, 2);
    g.column_failed.assign(2, 0);
    return g;
  };
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  const SqpResult r = minimize(p, x0);
  EXPECT_EQ(r.status, SqpStatus::Converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  // No finite-difference probes: one evaluation per accepted or rejected trial.
  EXPECT_EQ(r.evaluations, 1 + r.line_search_probes);
}

TEST(Minimize, ActiveInequality) {
  NlpProblem p;
  p.evaluate = [](const VectorXd& x) {
    NlpEvaluation e;
    e.f = x[0];
    e.c_eq = VectorXd(0);
    e.c_in = VectorXd::Constant(1, x[0] - 3.0);
    return e;
  };
  p.lower = VectorXd::Constant(1, 0.0);
  p.upper = VectorXd::Constant(1, 10.0);
  const SqpResult r = minimize(p, VectorXd::Constant(1, 7.0));
  EXPECT_EQ(r.status, SqpStatus::Converged) << r.message;
  EXPECT_NEAR(r.x[0], 3.0, 1e-8);
  EXPECT_NEAR(r.mult_in[0], 1.0, 1e-6);
}

TEST(Minimize, InfeasibleStartIsRecovered) {
  // min (x-2)^2 + (y-1)^2  s.t. x^2 <= y, x + y <= 2.
  NlpProblem p;
  p.evaluate = [](const VectorXd& x) {
    NlpEvaluation e;
    e.f = std::pow(x[0] - 2, 2) + std::pow(x[1] - 1, 2);
    e.c_eq = VectorXd(0);
    e.c_in = VectorXd(2);
    e.c_in << x[1] - x[0] * x[0], 2 - x[0] - x[1];
    return e;
  };
  p.lower = VectorXd::Constant(2, -5.0);
  p.upper = VectorXd::Constant(2, 5.0);
  VectorXd x0(2);
  x0 << 3.0, -2.0;
  const SqpResult r = minimize(p, x0);
  EXPECT_EQ(r.status, SqpStatus::Converged) << r.message;
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  EXPECT_LT(max_violation(r.value), 1e-8);
}

TEST(Minimize, MeritDoesNotIncrease) {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  const SqpResult r = minimize(rosenbrock(), x0);
  ASSERT_FALSE(r.history.empty());
  for (const auto& h : r.history) {
    if (h.line_search_failed) continue;
    EXPECT_LE(h.merit_after, h.merit_before + 1e-14 * std::abs(h.merit_before)) << "iter " << h.iter;
  }
}

TEST(Minimize, EvaluationAccounting) {
  const SqpResult r = minimize(circle_on_line(), VectorXd::Zero(2));
  // Baseline, n forward probes per gradient, one per line-search trial.
  EXPECT_EQ(r.evaluations, 1 + 2 * r.gradient_evaluations + r.line_search_probes);
  EXPECT_EQ(r.history.back().evaluations, r.evaluations);
}

TEST(Minimize, IterationCallback) {
  int calls = 0;
  SqpSettings s;
  s.on_iteration = [&](const SqpIteration&) { ++calls; };
  const SqpResult r = minimize(circle_on_line(), VectorXd::Zero(2), s);
  EXPECT_EQ(calls, static_cast<int>(r.history.size()));
}

TEST(Minimize, IterationLimit) {
  SqpSettings s;
  s.max_iter = 2;
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  const SqpResult r = minimize(rosenbrock(), x0, s);
  EXPECT_EQ(r.status, SqpStatus::NotConverged);
  EXPECT_EQ(r.iterations, 2);
}

TEST(Minimize, FailedStartingPoint) {
  NlpProblem p = rosenbrock();
  p.evaluate = [](const VectorXd&) {
    NlpEvaluation e;
    e.ok = false;
    e.c_eq = VectorXd(0);
    e.c_in = VectorXd(0);
    return e;
  };
  const SqpResult r = minimize(p, VectorXd::Zero(2));
  EXPECT_EQ(r.status, SqpStatus::CallbackFailure);
}

TEST(Minimize, StartIsProjectedIntoBounds) {
  VectorXd x0(2);
  x0 << 5.0, -7.0;
  const SqpResult r = minimize(rosenbrock(), x0);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(SqpSettings, Validation) {
  SqpSettings s;
  s.max_iter = 0;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.penalty_growth = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.f_tol = 0.0;
  EXPECT_THROW(minimize(circle_on_line(), VectorXd::Zero(2), s), Error);
}

TEST(BfgsUpdate, ZeroStepKeepsMatrix) {
  const MatrixXd B = MatrixXd::Identity(3, 3) * 2.0;
  EXPECT_EQ(bfgs_update(B, VectorXd::Zero(3), VectorXd::Ones(3)), B);
}

TEST(BfgsUpdate, DampingOnNegativeCurvature) {
  MatrixXd B(2, 2);
  B << 3, 1, 1, 2;
  VectorXd s(2), y(2);
  s << 1.0, 0.5;
  y << -1.0, 0.2;
  double theta = 0.0;
  const MatrixXd Bn = bfgs_update(B, s, y, &theta);
  EXPECT_LT(theta, 1.0);
  const double sBs = s.dot(B * s);
  const VectorXd r = theta * y + (1 - theta) * B * s;
  EXPECT_NEAR(s.dot(r), 0.2 * sBs, 1e-12 * sBs);
  // The update satisfies the secant condition for the damped difference.
  EXPECT_LT((Bn * s - r).norm(), 1e-12);
  EXPECT_GT(Bn.llt().info() == Eigen::Success ? 1 : 0, 0);
}

TEST(BfgsUpdate, RecoversQuadraticHessian) {
  MatrixXd H(3, 3);
  H << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  MatrixXd B = MatrixXd::Identity(3, 3);
  // Conjugate directions: exact line searches on a quadratic give H after n steps.
  MatrixXd S = MatrixXd::Identity(3, 3);
  for (int i = 0; i < 3; ++i) {
    VectorXd s = S.col(i);
    for (int j = 0; j < i; ++j) {
      const VectorXd sj = S.col(j);
      s -= (sj.dot(H * s) / sj.dot(H * sj)) * sj;
    }
    S.col(i) = s;
    double theta = 0.0;
    B = bfgs_update(B, s, H * s, &theta);
    EXPECT_EQ(theta, 1.0);
  }
  EXPECT_LT((B - H).cwiseAbs().maxCoeff(), 1e-6);
}
