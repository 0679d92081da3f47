#pragma once

#include <array>
#include <vector>

namespace thermo_opt {

/// Quadrature on the reference tet (volume 1/6) or triangle (area 1/2).
/// Points are barycentric; weights are reference-measure weights.
struct QuadratureRule {
  int degree = 0;
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

/// Degree 2, 4 points.
inline const QuadratureRule& tet_rule_degree2() {
  static const QuadratureRule rule = [] {
    constexpr double a = 0.5854101966249685;
    constexpr double b = 0.1381966011250105;
    QuadratureRule r;
    r.degree = 2;
    r.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
    r.weights.assign(4, 1.0 / 24.0);
    return r;
  }();
  return rule;
}

/// 14-point rule, exact to degree 5 with positive weights. Used wherever a
/// degree-4 rule is needed (quadratic elasticity terms).
inline const QuadratureRule& tet_rule_degree5() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 5;
    auto add_class4 = [&](double a, double w) {
      const double c = 1.0 - 3.0 * a;
      r.points.push_back({c, a, a, a});
      r.points.push_back({a, c, a, a});
      r.points.push_back({a, a, c, a});
      r.points.push_back({a, a, a, c});
      r.weights.insert(r.weights.end(), 4, w);
    };
    add_class4(0.31088591926330060980, 0.018781320953002641800);
    add_class4(0.092735250310891226402, 0.012248840519393658257);
    const double b = 0.045503704125649649492;
    const double c = 0.5 - b;
    const double w = 0.0070910034628469110730;
    r.points.push_back({b, b, c, c});
    r.points.push_back({b, c, b, c});
    r.points.push_back({b, c, c, b});
    r.points.push_back({c, b, b, c});
    r.points.push_back({c, b, c, b});
    r.points.push_back({c, c, b, b});
    r.weights.insert(r.weights.end(), 6, w);
    return r;
  }();
  return rule;
}

/// Triangle, degree 2, 3 interior points. The fourth barycentric slot is 0.
inline const QuadratureRule& tri_rule_degree2() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 2;
    r.points = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 0.0},
                {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0},
                {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 0.0}};
    r.weights.assign(3, 1.0 / 6.0);
    return r;
  }();
  return rule;
}

}  // namespace thermo_opt
