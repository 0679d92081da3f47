#pragma once

// Core library. The JSON run config lives in thermo_opt/config.hpp and
// additionally needs nlohmann/json.

#include "thermo_opt/error.hpp"
#include "thermo_opt/mesh.hpp"
#include "thermo_opt/gmsh.hpp"
#include "thermo_opt/quadrature.hpp"
#include "thermo_opt/shape.hpp"
#include "thermo_opt/material.hpp"
#include "thermo_opt/sparse_system.hpp"
#include "thermo_opt/linsolve.hpp"
#include "thermo_opt/assembly.hpp"
#include "thermo_opt/schedule.hpp"
#include "thermo_opt/heat.hpp"
#include "thermo_opt/elasticity.hpp"
#include "thermo_opt/forward_model.hpp"
#include "thermo_opt/finite_difference.hpp"
#include "thermo_opt/qp.hpp"
#include "thermo_opt/sqp.hpp"
#include "thermo_opt/ocp.hpp"
#include "thermo_opt/io.hpp"
