#pragma once

#include <string>
#include <vector>

#include "fluxlab/circle.hpp"
#include "fluxlab/flow.hpp"
#include "fluxlab/surface.hpp"

namespace fluxlab {

// int (eta - h*eta) ^ lambda for any boundary-preserving h of the Moebius band.
double F_lambda(const QuotientSurface& S, const FlowDiffeo& h, const FormField& lambda, const FormField& eta,
                const QuadratureSpec& spec = {}, const std::vector<Rect>& lambda_support = {});

// Restriction of a 1-form to the boundary circle, period 1 in theta. Odd forms are
// read through the boundary orientation so that the restriction of eta integrates to the area.
CircleOneForm boundary_form_restriction(const QuotientSurface& S, const FormField& mu);

struct TransgressionOptions {
  // per support piece; the collar shear needs more nodes across the collar than along it
  QuadratureSpec surface_spec{8, 4, 8, false};
  QuadratureSpec circle_spec{8, 64, 64, false};
  double tol = 2e-5;
  std::vector<Rect> lambda_support;  // empty: everywhere
};

struct TransgressionReport {
  double F1 = 0.0, F2 = 0.0, F12 = 0.0;
  double lhs = 0.0;  // F(h1) + F(h2) - F(h1 h2)
  double rhs = 0.0;  // chi(p(h1), p(h2))
  double difference = 0.0;
  double tol = 0.0;
  bool pass = false;
};

TransgressionReport verify_transgression(const QuotientSurface& S, const FlowDiffeo& h1, const FlowDiffeo& h2,
                                         const FormField& lambda, const FormField& eta,
                                         const TransgressionOptions& opt = {});

}  // namespace fluxlab
