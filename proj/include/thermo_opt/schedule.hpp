#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "thermo_opt/error.hpp"

namespace thermo_opt {

inline double hz_to_rad_per_s(double hz) { return 2.0 * std::numbers::pi * hz; }

/// Piecewise-constant controls on N equidistant steps over [0, t_f].
///
/// Entry n (0-based) is the knot value at t_{n+1} = (n+1) * t_f / N and drives
/// the implicit step that ends there. Rotation is given in Hz.
struct ControlSchedule {
  std::vector<double> T_e;
  std::vector<double> omega_hz;
  double t_f = 1800.0;

  std::size_t steps() const { return T_e.size(); }
  double dt() const { return t_f / static_cast<double>(steps()); }
  /// t_n for n = 0..N, with t_N == t_f exactly.
  double time(std::size_t n) const { return n == steps() ? t_f : dt() * static_cast<double>(n); }

  void validate() const {
    if (T_e.empty()) throw Error(ErrorCode::InvalidSchedule, "schedule needs at least one step");
    if (T_e.size() != omega_hz.size()) {
      throw Error(ErrorCode::InvalidSchedule, "T_e and omega must have the same length");
    }
    if (!(t_f > 0.0) || !std::isfinite(t_f)) throw Error(ErrorCode::InvalidSchedule, "t_f must be positive");
    for (std::size_t i = 0; i < T_e.size(); ++i) {
      if (!std::isfinite(T_e[i]) || !std::isfinite(omega_hz[i])) {
        throw Error(ErrorCode::InvalidSchedule, "non-finite control at step " + std::to_string(i + 1));
      }
    }
  }

  static ControlSchedule constant(std::size_t n, double t_f, double T_e, double omega_hz) {
    return {std::vector<double>(n, T_e), std::vector<double>(n, omega_hz), t_f};
  }
};

}  // namespace thermo_opt
