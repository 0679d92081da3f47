#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "thermo_opt/error.hpp"
#include "thermo_opt/material.hpp"
#include "thermo_opt/mesh.hpp"
#include "thermo_opt/quadrature.hpp"
#include "thermo_opt/shape.hpp"
#include "thermo_opt/sparse_system.hpp"

namespace thermo_opt {

// ---------------------------------------------------------------------------
// Heat conduction (P1 on the vertex nodes)
// ---------------------------------------------------------------------------

/// Time-step independent pieces of the implicit heat system:
///   (M/dt + K + R) T_next = M/dt T_prev + T_e * robin_load.
struct HeatOperators {
  SparseMatrix mass;       // rho c_p (consistent or row-lumped)
  SparseMatrix stiffness;  // k grad.grad
  SparseMatrix robin;      // h on Robin patches
  Vector robin_load;       // integral of h * v over Robin patches
  bool has_robin = false;
};

inline HeatOperators assemble_heat_operators(const Mesh& mesh, const MaterialProperties& mat, bool lumped_mass = false) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count);
  Triplets mass;
  Triplets stiff;
  mass.reserve(mesh.tets.size() * 16);
  stiff.reserve(mesh.tets.size() * 16);
  const auto& rule = tet_rule_degree2();
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& v = mesh.tets[t];
    const TetGeometry geo = TetGeometry::of(mesh, t);
    std::array<std::array<double, 4>, 4> me{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& b = rule.points[q];
      const double w = rule.weights[q] * geo.det;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) me[i][j] += w * mat.rho * mat.c_p * b[i] * b[j];
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const double ke = mat.k * geo.volume() * geometry::dot(geo.bary_grad[i], geo.bary_grad[j]);
        stiff.emplace_back(v[i], v[j], ke);
        if (lumped_mass) {
          mass.emplace_back(v[i], v[i], me[i][j]);
        } else {
          mass.emplace_back(v[i], v[j], me[i][j]);
        }
      }
    }
  }
  HeatOperators ops;
  ops.mass.resize(n, n);
  ops.mass.setFromTriplets(mass.begin(), mass.end());
  ops.stiffness.resize(n, n);
  ops.stiffness.setFromTriplets(stiff.begin(), stiff.end());

  Triplets robin;
  ops.robin_load = Vector::Zero(n);
  const auto& trule = tri_rule_degree2();
  for (const auto& tri : mesh.boundary_tris) {
    if (mesh.label_of(tri) != PatchLabel::Robin) continue;
    ops.has_robin = true;
    const double area = tri_area(mesh, tri);
    for (std::size_t q = 0; q < trule.points.size(); ++q) {
      const auto& b = trule.points[q];
      const double w = trule.weights[q] * 2.0 * area;
      for (int i = 0; i < 3; ++i) {
        ops.robin_load[tri.nodes[i]] += w * mat.h * b[i];
        for (int j = 0; j < 3; ++j) robin.emplace_back(tri.nodes[i], tri.nodes[j], w * mat.h * b[i] * b[j]);
      }
    }
  }
  ops.robin.resize(n, n);
  ops.robin.setFromTriplets(robin.begin(), robin.end());
  return ops;
}

/// Implicit (backward Euler) heat system at one step.
inline SparseSystem assemble_heat(const Mesh& mesh, const MaterialProperties& mat, double dt, const Vector& T_prev,
                                  double T_e, bool lumped_mass = false) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonpositiveDt, "heat step requires dt > 0");
  if (T_prev.size() != static_cast<Eigen::Index>(mesh.vertex_count)) {
    throw Error(ErrorCode::MissingTemperatureField, "previous temperature has wrong length");
  }
  const HeatOperators ops = assemble_heat_operators(mesh, mat, lumped_mass);
  SparseSystem sys;
  sys.dof_map = {1, mesh.vertex_count};
  sys.matrix = ops.mass / dt + ops.stiffness + ops.robin;
  sys.rhs = ops.mass * T_prev / dt + T_e * ops.robin_load;
  return sys;
}

// ---------------------------------------------------------------------------
// Linear thermoelasticity (P2 displacement, P1 temperature)
// ---------------------------------------------------------------------------

/// Load-independent pieces of the elasticity system:
///   K u = omega^2 * centrifugal + coupling * (T - T0).
struct ElasticityOperators {
  SparseMatrix stiffness;
  Vector centrifugal;     // per (rad/s)^2
  SparseMatrix coupling;  // displacement rows x vertex temperatures
  DofMap dof_map;
};

inline void require_p2(const Mesh& mesh) {
  if (!mesh.is_p2()) throw Error(ErrorCode::NotP2, "elasticity needs a mesh promoted to P2");
}

inline ElasticityOperators assemble_elasticity_operators(const Mesh& mesh, const MaterialProperties& mat) {
  require_p2(mesh);
  ElasticityOperators ops;
  ops.dof_map = {3, mesh.nodes.size()};
  const Eigen::Index ndof = ops.dof_map.size();
  const auto nT = static_cast<Eigen::Index>(mesh.vertex_count);
  const double lambda = mat.lambda();
  const double mu = mat.mu();
  const double beta = mat.thermal_modulus();
  const auto& rule = tet_rule_degree5();

  Triplets k_trip;
  Triplets c_trip;
  k_trip.reserve(mesh.tets.size() * 900);
  c_trip.reserve(mesh.tets.size() * 120);
  ops.centrifugal = Vector::Zero(ndof);

  Eigen::Matrix<double, 30, 30> ke;
  Eigen::Matrix<double, 30, 4> ce;
  Eigen::Matrix<double, 30, 1> fe;
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& nodes = mesh.p2_tets[t];
    const TetGeometry geo = TetGeometry::of(mesh, t);
    ke.setZero();
    ce.setZero();
    fe.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& b = rule.points[q];
      const double w = rule.weights[q] * geo.det;
      const auto grad = geo.p2_gradients(b);
      const ShapeEval phi = shape_eval(2, b);
      Point3 x{0.0, 0.0, 0.0};
      for (int i = 0; i < 4; ++i)
        for (int d = 0; d < 3; ++d) x[d] += b[i] * mesh.nodes[mesh.tets[t][i]][d];
      for (int a = 0; a < 10; ++a) {
        for (int c = 0; c < 10; ++c) {
          const double gg = geometry::dot(grad[a], grad[c]);
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              ke(3 * a + i, 3 * c + j) +=
                  w * (lambda * grad[a][i] * grad[c][j] + mu * grad[a][j] * grad[c][i] + (i == j ? mu * gg : 0.0));
            }
        }
        for (int i = 0; i < 3; ++i) {
          for (int m = 0; m < 4; ++m) ce(3 * a + i, m) += w * beta * b[m] * grad[a][i];
        }
        fe(3 * a + 0) += w * mat.rho * x[0] * phi.value[a];
        fe(3 * a + 1) += w * mat.rho * x[1] * phi.value[a];
      }
    }
    for (int a = 0; a < 10; ++a) {
      for (int i = 0; i < 3; ++i) {
        const auto row = ops.dof_map.row(nodes[a], i);
        ops.centrifugal[row] += fe(3 * a + i);
        for (int c = 0; c < 10; ++c)
          for (int j = 0; j < 3; ++j) k_trip.emplace_back(row, ops.dof_map.row(nodes[c], j), ke(3 * a + i, 3 * c + j));
        for (int m = 0; m < 4; ++m) c_trip.emplace_back(row, mesh.tets[t][m], ce(3 * a + i, m));
      }
    }
  }
  ops.stiffness.resize(ndof, ndof);
  ops.stiffness.setFromTriplets(k_trip.begin(), k_trip.end());
  ops.coupling.resize(ndof, nT);
  ops.coupling.setFromTriplets(c_trip.begin(), c_trip.end());
  return ops;
}

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

/// n . u(node) = value, n a unit vector. Non-axis-aligned directions are
/// handled by rotating the node's displacement frame (value must then be 0).
struct DofConstraint {
  int node = 0;
  Point3 direction{1.0, 0.0, 0.0};
  double value = 0.0;
};

namespace detail {

inline int axis_of(const Point3& n) {
  for (int d = 0; d < 3; ++d) {
    if (std::abs(std::abs(n[d]) - 1.0) < 1e-12) return d;
  }
  return -1;
}

// Symmetric elimination of rows/cols flagged in `fixed`, moving known values
// to the right-hand side.
inline void eliminate_rows(SparseSystem& sys, const std::vector<char>& fixed, const Vector& values) {
  auto& a = sys.matrix;
  for (int r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      const auto c = it.col();
      if (fixed[r]) {
        it.valueRef() = (c == r) ? 1.0 : 0.0;
      } else if (fixed[c]) {
        sys.rhs[r] -= it.value() * values[c];
        it.valueRef() = 0.0;
      }
    }
  }
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(fixed.size()); ++r) {
    if (fixed[r]) {
      sys.rhs[r] = values[r];
      sys.constrained_rows.push_back(r);
    }
  }
  a.prune(0.0);
}

}  // namespace detail

/// Applies displacement constraints by symmetric row/column elimination.
/// Constrained rows become identity rows; symmetry of the matrix is kept.
inline void apply_constraints(SparseSystem& sys, std::span<const DofConstraint> constraints) {
  if (constraints.empty()) return;
  const Eigen::Index n = sys.matrix.rows();
  std::vector<char> fixed(n, 0);
  Vector values = Vector::Zero(n);

  // Group by node to build rotated frames where needed.
  std::map<int, std::vector<const DofConstraint*>> by_node;
  for (const auto& c : constraints) by_node[c.node].push_back(&c);

  Triplets rot;
  bool any_rotation = false;
  std::vector<std::pair<int, Eigen::Matrix3d>> frames;
  for (const auto& [node, list] : by_node) {
    bool aligned = true;
    for (const auto* c : list) aligned = aligned && detail::axis_of(c->direction) >= 0;
    if (aligned) {
      for (const auto* c : list) {
        const int axis = detail::axis_of(c->direction);
        const auto row = sys.dof_map.row(node, axis);
        fixed[row] = 1;
        values[row] = c->value * (c->direction[axis] > 0 ? 1.0 : -1.0);
      }
      continue;
    }
    // Orthonormal basis whose leading columns span the constrained normals.
    Eigen::Matrix3d basis;
    int k = 0;
    auto try_add = [&](const Eigen::Vector3d& v) {
      Eigen::Vector3d w = v;
      for (int j = 0; j < k; ++j) w -= basis.col(j).dot(w) * basis.col(j);
      if (w.norm() < 1e-8) return false;
      basis.col(k++) = w.normalized();
      return true;
    };
    for (const auto* c : list) {
      if (c->value != 0.0) {
        throw Error(ErrorCode::InvalidConfig, "nonzero constraint values need axis-aligned directions");
      }
      try_add(Eigen::Vector3d(c->direction[0], c->direction[1], c->direction[2]));
    }
    const int constrained = k;
    for (int d = 0; d < 3 && k < 3; ++d) try_add(Eigen::Vector3d::Unit(d));
    for (int j = 0; j < constrained; ++j) fixed[sys.dof_map.row(node, j)] = 1;
    frames.emplace_back(node, basis);
    any_rotation = true;
  }

  if (any_rotation) {
    // A' = T^T A T, b' = T^T b with T block-diagonal (identity off the frames).
    std::vector<char> rotated_node(sys.dof_map.nodes, 0);
    for (const auto& [node, basis] : frames) {
      rotated_node[node] = 1;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) rot.emplace_back(sys.dof_map.row(node, i), sys.dof_map.row(node, j), basis(i, j));
    }
    for (std::size_t node = 0; node < sys.dof_map.nodes; ++node) {
      if (rotated_node[node]) continue;
      for (int i = 0; i < 3; ++i) rot.emplace_back(sys.dof_map.row(node, i), sys.dof_map.row(node, i), 1.0);
    }
    SparseMatrix t(n, n);
    t.setFromTriplets(rot.begin(), rot.end());
    const SparseMatrix tt = t.transpose();
    SparseMatrix rotated = tt * sys.matrix * t;
    // Restore exact symmetry lost to rounding in the triple product.
    const SparseMatrix rotated_t = rotated.transpose();
    sys.matrix = 0.5 * (rotated + rotated_t);
    sys.rhs = tt * sys.rhs;
    for (const auto& [node, basis] : frames) sys.frames.push_back({node, basis});
  }
  detail::eliminate_rows(sys, fixed, values);
}

/// Unit normals of the SymX / SymY patches (area-weighted mean, outward).
inline std::map<PatchLabel, Point3> symmetry_normals(const Mesh& mesh) {
  std::map<PatchLabel, Point3> sum;
  for (const auto& tri : mesh.boundary_tris) {
    const auto label = mesh.label_of(tri);
    if (label != PatchLabel::SymX && label != PatchLabel::SymY) continue;
    const auto& p = mesh.nodes;
    const Point3 n = geometry::cross(geometry::sub(p[tri.nodes[1]], p[tri.nodes[0]]),
                                     geometry::sub(p[tri.nodes[2]], p[tri.nodes[0]]));
    auto& s = sum[label];
    for (int d = 0; d < 3; ++d) s[d] += n[d];
  }
  for (auto& [label, n] : sum) {
    const double len = geometry::norm(n);
    for (auto& c : n) {
      c /= len;
      // Snap to the coordinate axes when the patch is axis aligned.
      if (std::abs(c) < 1e-12) c = 0.0;
    }
    const int axis = detail::axis_of(n);
    if (axis >= 0) {
      const double sign = n[axis] > 0 ? 1.0 : -1.0;
      n = {0.0, 0.0, 0.0};
      n[axis] = sign;
    }
  }
  return sum;
}

/// Zero normal displacement on SymX / SymY patches, every P2 node on them.
inline std::vector<DofConstraint> symmetry_constraints(const Mesh& mesh) {
  require_p2(mesh);
  const auto normals = symmetry_normals(mesh);
  std::map<std::pair<int, PatchLabel>, bool> seen;
  std::vector<DofConstraint> out;
  auto add = [&](int node, PatchLabel label) {
    if (seen.emplace(std::make_pair(node, label), true).second) out.push_back({node, normals.at(label), 0.0});
  };
  for (const auto& tri : mesh.boundary_tris) {
    const auto label = mesh.label_of(tri);
    if (label != PatchLabel::SymX && label != PatchLabel::SymY) continue;
    for (int i = 0; i < 3; ++i) {
      add(tri.nodes[i], label);
      const auto key = std::minmax(tri.nodes[i], tri.nodes[(i + 1) % 3]);
      add(mesh.edge_midpoint_index.at({key.first, key.second}), label);
    }
  }
  return out;
}

/// Applies the cut-plane symmetry conditions. Without SymX/SymY patches the
/// system is returned unchanged.
inline SparseSystem apply_symmetry(SparseSystem system, const Mesh& mesh) {
  const auto constraints = symmetry_constraints(mesh);
  apply_constraints(system, constraints);
  return system;
}

/// Elasticity system for a nodal temperature field and rotation speed
/// omega (rad/s), with symmetry constraints applied.
inline SparseSystem assemble_elasticity(const Mesh& mesh, const MaterialProperties& mat, const Vector& T,
                                        double omega) {
  require_p2(mesh);
  if (T.size() != static_cast<Eigen::Index>(mesh.vertex_count)) {
    throw Error(ErrorCode::MissingTemperatureField, "temperature field must live on the vertex nodes");
  }
  const ElasticityOperators ops = assemble_elasticity_operators(mesh, mat);
  SparseSystem sys;
  sys.dof_map = ops.dof_map;
  sys.matrix = ops.stiffness;
  sys.rhs = omega * omega * ops.centrifugal + ops.coupling * (T.array() - mat.T0).matrix();
  return apply_symmetry(std::move(sys), mesh);
}

}  // namespace thermo_opt
