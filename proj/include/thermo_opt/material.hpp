#pragma once

#include <string>

#include "thermo_opt/error.hpp"

namespace thermo_opt {

/// Isotropic, temperature-independent material and convection data.
/// Defaults are the steel values of the reference rotor study.
struct MaterialProperties {
  double E = 210e9;        // Pa
  double nu = 0.3;
  double rho = 8050.0;     // kg/m^3
  double alpha = 13.5e-6;  // 1/K
  double c_p = 420.0;      // J/(kg K)
  double k = 36.0;         // W/(m K)
  double h = 20.0;         // W/(m^2 K)
  double T0 = 0.0;         // reference temperature, degC

  double lambda() const { return nu * E / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
  double mu() const { return E / (2.0 * (1.0 + nu)); }
  /// Thermal stress modulus alpha * (3 lambda + 2 mu).
  double thermal_modulus() const { return alpha * (3.0 * lambda() + 2.0 * mu()); }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorCode::InvalidConfig, std::string("material: ") + what);
    };
    require(E > 0.0, "E must be positive");
    require(nu > 0.0 && nu < 0.5, "nu must lie in (0, 0.5)");
    require(rho > 0.0, "rho must be positive");
    require(c_p > 0.0, "c_p must be positive");
    require(k > 0.0, "k must be positive");
    require(h > 0.0, "h must be positive");
    require(alpha > 0.0, "alpha must be positive");
  }
};

}  // namespace thermo_opt
