#pragma once

#include <array>
#include <cmath>

#include "thermo_opt/error.hpp"
#include "thermo_opt/mesh.hpp"

namespace thermo_opt {

using Barycentric = std::array<double, 4>;

/// Basis values and gradients with respect to the reference coordinates
/// (xi, eta, zeta) = (L1, L2, L3), L0 = 1 - xi - eta - zeta.
struct ShapeEval {
  int count = 0;
  std::array<double, 10> value{};
  std::array<Point3, 10> ref_grad{};
};

namespace detail {

// d L_i / d(xi, eta, zeta)
inline constexpr std::array<Point3, 4> kBaryRefGrad{{{-1.0, -1.0, -1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};

inline void check_barycentric(const Barycentric& b) {
  double sum = 0.0;
  for (double v : b) {
    if (!(v >= -1e-14)) throw Error(ErrorCode::InvalidPoint, "negative barycentric coordinate");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorCode::InvalidPoint, "barycentric coordinates must sum to 1");
}

}  // namespace detail

/// Lagrange P1 (4 functions) or P2 (10 functions: vertices then the edge
/// midpoints in kTetEdges order) on the reference tet.
inline ShapeEval shape_eval(int order, const Barycentric& b) {
  detail::check_barycentric(b);
  ShapeEval out;
  const auto& dl = detail::kBaryRefGrad;
  if (order == 1) {
    out.count = 4;
    for (int i = 0; i < 4; ++i) {
      out.value[i] = b[i];
      out.ref_grad[i] = dl[i];
    }
    return out;
  }
  if (order != 2) throw Error(ErrorCode::InvalidPoint, "only orders 1 and 2 are available");
  out.count = 10;
  for (int i = 0; i < 4; ++i) {
    out.value[i] = b[i] * (2.0 * b[i] - 1.0);
    for (int d = 0; d < 3; ++d) out.ref_grad[i][d] = (4.0 * b[i] - 1.0) * dl[i][d];
  }
  for (int e = 0; e < 6; ++e) {
    const int i = kTetEdges[e][0];
    const int j = kTetEdges[e][1];
    out.value[4 + e] = 4.0 * b[i] * b[j];
    for (int d = 0; d < 3; ++d) out.ref_grad[4 + e][d] = 4.0 * (b[i] * dl[j][d] + b[j] * dl[i][d]);
  }
  return out;
}

/// Affine map data of one tetrahedron: physical gradients of the barycentric
/// coordinates and the absolute Jacobian determinant (= 6 * volume).
struct TetGeometry {
  std::array<Point3, 4> bary_grad{};
  double det = 0.0;

  TetGeometry(const Point3& p0, const Point3& p1, const Point3& p2, const Point3& p3) {
    using namespace geometry;
    const Point3 e1 = sub(p1, p0);
    const Point3 e2 = sub(p2, p0);
    const Point3 e3 = sub(p3, p0);
    det = dot(e1, cross(e2, e3));
    // Rows of J^{-1} are the gradients of L1, L2, L3.
    const Point3 g1 = cross(e2, e3);
    const Point3 g2 = cross(e3, e1);
    const Point3 g3 = cross(e1, e2);
    for (int d = 0; d < 3; ++d) {
      bary_grad[1][d] = g1[d] / det;
      bary_grad[2][d] = g2[d] / det;
      bary_grad[3][d] = g3[d] / det;
      bary_grad[0][d] = -(bary_grad[1][d] + bary_grad[2][d] + bary_grad[3][d]);
    }
    det = std::abs(det);
  }

  static TetGeometry of(const Mesh& mesh, std::size_t t) {
    const auto& v = mesh.tets[t];
    return TetGeometry(mesh.nodes[v[0]], mesh.nodes[v[1]], mesh.nodes[v[2]], mesh.nodes[v[3]]);
  }

  double volume() const { return det / 6.0; }

  /// Physical P2 gradients at a barycentric point.
  std::array<Point3, 10> p2_gradients(const Barycentric& b) const {
    std::array<Point3, 10> g{};
    for (int i = 0; i < 4; ++i)
      for (int d = 0; d < 3; ++d) g[i][d] = (4.0 * b[i] - 1.0) * bary_grad[i][d];
    for (int e = 0; e < 6; ++e) {
      const int i = kTetEdges[e][0];
      const int j = kTetEdges[e][1];
      for (int d = 0; d < 3; ++d) g[4 + e][d] = 4.0 * (b[i] * bary_grad[j][d] + b[j] * bary_grad[i][d]);
    }
    return g;
  }
};

}  // namespace thermo_opt
