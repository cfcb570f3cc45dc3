#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fluxlab/flow.hpp"
#include "fluxlab/surface.hpp"

namespace fluxlab {

class InvariantError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// map support not where the invariant needs it
class SupportError : public InvariantError {
  using InvariantError::InvariantError;
};

// potential of eta - g*eta failed to close up
class HolonomyError : public InvariantError {
  using InvariantError::InvariantError;
};

// Throws FormError on wrong degree/parity, InvariantError when d lambda != 0
// or d eta != omega on a sample grid.
void check_flux_inputs(const FormField& lambda, const FormField& eta);

// int (eta - g*eta) ^ lambda, no support requirement. lambda_support restricts the
// quadrature to rectangles containing the support of lambda (empty: everywhere).
// Each piece of support(g) cap support(lambda) gets the full panel count of spec.
double lambda_pairing(const QuotientSurface& S, const FlowDiffeo& g, const FormField& lambda,
                      const FormField& eta, const QuadratureSpec& spec = {},
                      const std::vector<Rect>& lambda_support = {});

// Same integral for boundary-fixing g; throws SupportError otherwise.
double flux_lambda(const QuotientSurface& S, const FlowDiffeo& g, const FormField& lambda,
                   const FormField& eta, const QuadratureSpec& spec = {},
                   const std::vector<Rect>& lambda_support = {});

// int eta ^ g*eta over the disk, g supported away from the boundary.
double calabi_disk(const FlowDiffeo& g, const FormField& eta, const QuadratureSpec& spec = {});

// A coordinate patch given as a rectangle of the cover (or of the plane for the disk).
struct Patch {
  std::string name;
  Rect rect;
};

struct LocalCalabi {
  double value = 0.0;
  double holonomy = 0.0;  // largest |f| on the far side of the support
};

// e_sign * int_U f omega with df = eta - g*eta and f = 0 off the support.
// f is integrated up vertical columns through the support boxes placed in patch
// coordinates, with the spec's panel counts on each box.
LocalCalabi local_calabi_detail(const QuotientSurface& S, const FlowDiffeo& g, const Patch& patch, int e_sign,
                                const FormField& eta, const QuadratureSpec& spec = {},
                                double holonomy_tol = 1e-6);
double local_calabi(const QuotientSurface& S, const FlowDiffeo& g, const Patch& patch, int e_sign,
                    const FormField& eta, const QuadratureSpec& spec = {});

// Disk where a twist lives; the adapted primitive is rotationally symmetric about
// each center out to the radius and returns to the standard primitive by 1.25 radius.
struct TwistSite {
  Vec2 center;
  double radius = 0.1;
};
FormField adapted_primitive(const QuotientSurface& S, const std::vector<TwistSite>& sites);

// Isotopy from the identity given by a time-dependent field on [0, 1].
class IsotopyPath {
 public:
  explicit IsotopyPath(VectorField field, int samples = 4, int steps = 0);

  const VectorField& field() const { return field_; }
  const std::vector<double>& times() const { return times_; }
  int steps() const { return steps_; }
  FlowDiffeo at(size_t k) const;
  FlowDiffeo end() const { return at(times_.size() - 1); }
  // sup over an n x n grid of |g_1(p) - target(p)|
  double endpoint_residual(const FlowDiffeo& target, int n = 32) const;

  // same endpoints, run along t = sigma(s); sigma an expression in t with sigma(0) = 0, sigma(1) = 1
  IsotopyPath reparameterized(const Expr& sigma) const;

 private:
  VectorField field_;
  std::vector<double> times_;
  int steps_;
};

// O = -int h*omega, h(s, t) = phi_s(gamma(t)), accumulated along each trajectory
// as int omega(X_s, d_t h) ds.
double swept_area(const QuotientSurface& S, const ArcData& arc, const IsotopyPath& iso,
                  const QuadratureSpec& spec = {});

struct KernelTest {
  bool in_kernel = true;
  std::vector<double> residuals;  // lambda_i flux per cut arc
  double tol = 1e-6;
};

KernelTest flux_kernel_test(const QuotientSurface& S, const FlowDiffeo& g, const std::vector<ArcData>& cut,
                            const FormField& eta, double tol = 1e-6, const QuadratureSpec& spec = {});

}  // namespace fluxlab
