#include "fluxlab/transgression.hpp"

#include <cmath>

#include "fluxlab/invariants.hpp"

namespace fluxlab {

double F_lambda(const QuotientSurface& S, const FlowDiffeo& h, const FormField& lambda, const FormField& eta,
                const QuadratureSpec& spec, const std::vector<Rect>& lambda_support) {
  if (S.kind != SurfaceKind::mobius) throw SurfaceError("F_lambda is set up on the Moebius band");
  return lambda_pairing(S, h, lambda, eta, spec, lambda_support);
}

CircleOneForm boundary_form_restriction(const QuotientSurface& S, const FormField& mu) {
  if (mu.degree() != 1) throw FormError("only 1-forms restrict to the boundary circle");
  if (S.kind == SurfaceKind::annulus) {
    throw SurfaceError("the annulus has two boundary circles; no single boundary parameterization");
  }
  const double sign = mu.parity() == Parity::odd ? boundary_orientation(S) : 1.0;
  return CircleOneForm(
      [S, mu, sign](double theta) {
        Vec2 p = boundary_point(S, theta), v = boundary_velocity(S, theta);
        double c[2];
        mu.eval(p, c);
        return sign * (c[0] * v.x + c[1] * v.y);
      },
      "i*[" + mu.provenance() + "]");
}

TransgressionReport verify_transgression(const QuotientSurface& S, const FlowDiffeo& h1, const FlowDiffeo& h2,
                                         const FormField& lambda, const FormField& eta,
                                         const TransgressionOptions& opt) {
  TransgressionReport r;
  r.tol = opt.tol;
  // surface side; h2 is revisited at the same nodes inside h1 h2
  FlowDiffeo m2 = memoized(h2);
  r.F1 = F_lambda(S, h1, lambda, eta, opt.surface_spec, opt.lambda_support);
  r.F2 = F_lambda(S, m2, lambda, eta, opt.surface_spec, opt.lambda_support);
  r.F12 = F_lambda(S, compose_diffeos(h1, m2), lambda, eta, opt.surface_spec, opt.lambda_support);
  r.lhs = r.F1 + r.F2 - r.F12;
  // circle side
  CircleOneForm phi = boundary_form_restriction(S, eta);
  CircleOneForm psi = boundary_form_restriction(S, lambda);
  CircleLift p1 = boundary_trace(h1), p2 = boundary_trace(h2);
  r.rhs = euler_cocycle_chi(phi, psi, p1, p2, opt.circle_spec);
  r.difference = r.lhs - r.rhs;
  r.pass = std::fabs(r.difference) <= r.tol;
  return r;
}

}  // namespace fluxlab
