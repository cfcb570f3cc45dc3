#pragma once

#include <string>
#include <vector>

#include "fluxlab/flow.hpp"
#include "fluxlab/invariants.hpp"

namespace fluxlab {

class GeometryError : public InvariantError {
  using InvariantError::InvariantError;
};

// Radial twist about center whose local Calabi invariant in the patch (with section
// sign e_sign) is c. The time is fixed by measuring the unit-time twist once.
FlowDiffeo calabi_generator(const QuotientSurface& S, Vec2 center, double radius, double c, const Patch& patch,
                            int e_sign, const FormField& eta, const QuadratureSpec& spec = {});

// Largest twist time calabi_generator will produce.
inline constexpr double kMaxGeneratorTime = 1e4;

// U is the fundamental domain, V crosses the seam. In V's cover coordinates the
// overlap is A (same orientation as U) and B (the tau image, orientation reversed).
struct CellGeometry {
  Patch U{"U", {0.0, 1.0, -0.45, 0.45}};
  Patch V{"V", {0.67, 1.335, -0.45, 0.45}};
  Patch A{"A", {0.67, 1.0, -0.45, 0.45}};
  Patch B{"B", {1.0, 1.335, -0.45, 0.45}};
  TwistSite gA{{0.82, 0.0}, 0.13};
  TwistSite gB{{0.18, 0.0}, 0.13};  // U coordinates; (1.18, 0) in V
  int e_U = 1;
  int e_V = 1;
};

// Throws GeometryError naming the failed condition.
void validate_cell_geometry(const QuotientSurface& S, const CellGeometry& G);

struct CellDivision {
  FlowDiffeo u, v, gA, gB;
  CellGeometry geometry;
  double c = 0.0;        // Cal_U(h) / 2
  double cal_U_h = 0.0;
  double cal_U_u = 0.0;
  double cal_V_v = 0.0;
  double cal_U_gA = 0.0, cal_V_gA = 0.0;
  double cal_U_gB = 0.0, cal_V_gB = 0.0;
  double composition_residual = 0.0;  // sup |u v - h| on a 64 x 64 grid
  bool trivial = false;                // Cal_U(h) = 0, so u = h and v = id
};

// h must have zero flux and be supported in U away from V. h_sites lists twist disks
// of h so the primitive used for the invariants is adapted to them (may be empty).
CellDivision cell_division_split(const QuotientSurface& S, const FlowDiffeo& h,
                                 const std::vector<TwistSite>& h_sites = {}, const CellGeometry& G = {},
                                 const QuadratureSpec& spec = {});

}  // namespace fluxlab
