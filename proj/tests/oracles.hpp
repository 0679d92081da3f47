#pragma once

// Reference computations shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "thermo_opt.hpp"

namespace thermo_opt::oracle {

/// Exact QP minimizer by enumerating every active subset of the inequality
/// rows (equalities always active). Bounds are not supported.
inline std::optional<Eigen::VectorXd> enumerate_active_sets(const QpProblem& qp) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const auto n = qp.G.rows();
  const auto p = qp.A_eq.rows();
  const auto m = qp.A_in.rows();
  std::optional<VectorXd> best;
  double best_f = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1 << i)) act.push_back(i);
    const auto k = p + static_cast<Eigen::Index>(act.size());
    if (k > n) continue;
    MatrixXd A(k, n);
    VectorXd b(k);
    if (p) {
      A.topRows(p) = qp.A_eq;
      b.head(p) = -qp.b_eq;
    }
    for (std::size_t j = 0; j < act.size(); ++j) {
      A.row(p + static_cast<Eigen::Index>(j)) = qp.A_in.row(act[j]);
      b[p + static_cast<Eigen::Index>(j)] = -qp.b_in[act[j]];
    }
    MatrixXd K = MatrixXd::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = qp.G;
    K.topRightCorner(n, k) = -A.transpose();
    K.bottomLeftCorner(k, n) = A;
    VectorXd rhs(n + k);
    rhs << -qp.g, b;
    Eigen::FullPivLU<MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd x = sol.head(n);
    if (m > 0 && (qp.A_in * x + qp.b_in).minCoeff() < -1e-10) continue;
    if (k > p && sol.tail(k - p).minCoeff() < -1e-10) continue;
    const double f = 0.5 * x.dot(qp.G * x) + qp.g.dot(x);
    if (f < best_f) {
      best_f = f;
      best = x;
    }
  }
  return best;
}

/// Random strictly convex QP with five inequality rows and optionally one
/// equality row.
template <class Rng>
QpProblem random_qp(Rng& rng, bool with_equality) {
  std::normal_distribution<double> n01;
  const int n = 5;
  Eigen::MatrixXd R(n, n);
  for (auto& v : R.reshaped()) v = n01(rng);
  QpProblem qp;
  qp.G = R * R.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  qp.g = Eigen::VectorXd(n);
  for (auto& v : qp.g) v = 3.0 * n01(rng);
  qp.A_in = Eigen::MatrixXd(5, n);
  qp.b_in = Eigen::VectorXd(5);
  for (auto& v : qp.A_in.reshaped()) v = n01(rng);
  for (auto& v : qp.b_in) v = n01(rng);
  if (with_equality) {
    qp.A_eq = Eigen::MatrixXd(1, n);
    for (auto& v : qp.A_eq.reshaped()) v = n01(rng);
    qp.b_eq = Eigen::VectorXd::Constant(1, n01(rng));
  }
  return qp;
}

/// Volume average of a P1 field.
inline double volume_average(const Mesh& m, const Vector& T) {
  double s = 0.0;
  for (std::size_t t = 0; t < m.tets.size(); ++t) {
    double mean = 0.0;
    for (int v : m.tets[t]) mean += 0.25 * T[v];
    s += tet_volume(m, t) * mean;
  }
  return s / total_volume(m);
}

/// Closed-form lumped-capacitance temperature of a body heated by
/// convection: T_e (1 - exp(-t h A / (rho c_p V))) for T0 = 0.
inline double lumped_temperature(const MaterialProperties& mat, double area_over_volume, double T_e, double t) {
  return T_e * (1.0 - std::exp(-t * mat.h * area_over_volume / (mat.rho * mat.c_p)));
}

/// All P2 nodes on the boundary surface.
inline std::set<int> boundary_nodes(const Mesh& m) {
  std::set<int> out;
  for (const auto& tri : m.boundary_tris) {
    for (int i = 0; i < 3; ++i) {
      out.insert(tri.nodes[i]);
      const auto key = std::minmax(tri.nodes[i], tri.nodes[(i + 1) % 3]);
      out.insert(m.edge_midpoint_index.at({key.first, key.second}));
    }
  }
  return out;
}

/// Dirichlet data u = grad * x + shift on the given nodes.
inline std::vector<DofConstraint> prescribe_affine(const Mesh& m, const std::set<int>& nodes,
                                                   const Eigen::Matrix3d& grad, const Eigen::Vector3d& shift) {
  std::vector<DofConstraint> out;
  for (int n : nodes) {
    const Eigen::Vector3d x(m.nodes[n][0], m.nodes[n][1], m.nodes[n][2]);
    const Eigen::Vector3d u = grad * x + shift;
    for (int d = 0; d < 3; ++d) {
      Point3 dir{0, 0, 0};
      dir[d] = 1.0;
      out.push_back({n, dir, u[d]});
    }
  }
  return out;
}

/// 3-2-1 support of a box with a corner at the origin: removes the rigid
/// modes without restraining free expansion.
inline std::vector<DofConstraint> minimal_support(const Mesh& m) {
  int origin = -1;
  int on_x = -1;
  int in_xy = -1;
  for (std::size_t i = 0; i < m.vertex_count; ++i) {
    const auto& p = m.nodes[i];
    const bool y0 = p[1] == 0.0;
    const bool z0 = p[2] == 0.0;
    if (p[0] == 0.0 && y0 && z0) origin = static_cast<int>(i);
    if (p[0] > 0.0 && y0 && z0 && on_x < 0) on_x = static_cast<int>(i);
    if (p[1] > 0.0 && z0 && in_xy < 0) in_xy = static_cast<int>(i);
  }
  return {{origin, {1, 0, 0}, 0.0}, {origin, {0, 1, 0}, 0.0}, {origin, {0, 0, 1}, 0.0},
          {on_x, {0, 1, 0}, 0.0},   {on_x, {0, 0, 1}, 0.0},   {in_xy, {0, 0, 1}, 0.0}};
}

/// Axis stress of a solid cylinder of radius b spinning at w with u_z = 0 on
/// both ends: sigma_r = sigma_theta = (3 - 2 nu) / (8 (1 - nu)) rho w^2 b^2,
/// sigma_z = nu (sigma_r + sigma_theta), von Mises = |sigma_r - sigma_z|.
inline double rotating_cylinder_axis_von_mises(const MaterialProperties& mat, double w, double b) {
  const double nu = mat.nu;
  const double sr = (3.0 - 2.0 * nu) / (8.0 * (1.0 - nu)) * mat.rho * w * w * b * b;
  return std::abs(sr - 2.0 * nu * sr);
}

/// Weighted time centroid sum(t_n v_n) / sum(v_n) over knots 1..N.
inline double time_centroid(const ControlSchedule& s, const std::vector<double>& v) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    num += s.time(i + 1) * v[i];
    den += v[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace thermo_opt::oracle
