#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fluxlab/fieldexpr.hpp"
#include "fluxlab/geometry.hpp"
#include "fluxlab/quadrature.hpp"

namespace fluxlab {

class SurfaceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// degree/parity mismatches
class FormError : public SurfaceError {
  using SurfaceError::SurfaceError;
};

class SeamError : public SurfaceError {
  using SurfaceError::SurfaceError;
};

enum class SurfaceKind { disk, annulus, mobius };

const char* kind_name(SurfaceKind k);
SurfaceKind parse_kind(std::string_view name);

// Strip kinds live on the cover R x [-w, w] with deck map tau(x, y) = (x + 1, flip * y).
// The disk is the closed unit disk in Cartesian coordinates.
struct QuotientSurface {
  SurfaceKind kind = SurfaceKind::mobius;
  double w = 0.5;

  static QuotientSurface disk() { return {SurfaceKind::disk, 1.0}; }
  static QuotientSurface annulus(double w = 0.5) { return {SurfaceKind::annulus, w}; }
  static QuotientSurface mobius(double w = 0.5) { return {SurfaceKind::mobius, w}; }

  bool strip() const { return kind != SurfaceKind::disk; }
  int flip() const { return kind == SurfaceKind::mobius ? -1 : 1; }
  int jacobian_sign() const { return flip(); }

  Vec2 tau(Vec2 p, int k = 1) const;
  Mat2 tau_jacobian(int k) const;
  // p = tau^k(q) with q.x in [0, 1). The disk returns p and k = 0.
  Vec2 reduce(Vec2 p, int& k) const;

  double area() const;
  Rect domain() const;
  bool inside(Vec2 p, double tol = 1e-12) const;
  std::string describe() const;
};

enum class Parity { even, odd };

inline const char* parity_name(Parity p) { return p == Parity::even ? "even" : "odd"; }

// A degree 0/1/2 form on the cover. Coefficients are defined on the fundamental
// domain and extended to the cover by the seam rule; odd forms carry the
// orientation sign of tau.
class FormField {
 public:
  // out receives 1 (degree 0, 2) or 2 (degree 1: P, Q) values
  using Eval = std::function<void(Vec2, double*)>;

  static FormField from_exprs(const QuotientSurface& S, int degree, Parity parity,
                              std::vector<Expr> coeffs);
  static FormField numeric(const QuotientSurface& S, int degree, Parity parity, Eval fn,
                           std::string provenance);
  static FormField zero(const QuotientSurface& S, int degree, Parity parity);

  int degree() const { return degree_; }
  Parity parity() const { return parity_; }
  const QuotientSurface& surface() const { return surface_; }
  int components() const { return degree_ == 1 ? 2 : 1; }
  bool symbolic() const { return !exprs_.empty(); }
  const std::vector<Expr>& exprs() const;
  const std::string& provenance() const { return provenance_; }

  // value at any cover point
  void eval(Vec2 p, double* out) const;
  double scalar(Vec2 p) const;
  Vec2 covector(Vec2 p) const;

  // sign picked up by component i under pullback by tau
  int seam_sign(int component) const;
  // samples along x = 0 against x = 1
  void check_seam(int samples = 256, double tol = 1e-9) const;

 private:
  FormField() = default;
  QuotientSurface surface_;
  int degree_ = 0;
  Parity parity_ = Parity::even;
  std::vector<Expr> exprs_;
  Eval raw_;
  std::string provenance_;
};

FormField operator+(const FormField& a, const FormField& b);
FormField operator-(const FormField& a, const FormField& b);
FormField operator*(double c, const FormField& a);

// dx^dy, odd
FormField standard_area_form(const QuotientSurface& S);
// strips: -y dx; disk: (x dy - y dx) / 2. Odd.
FormField standard_primitive(const QuotientSurface& S);

FormField wedge(const FormField& a, const FormField& b);
FormField exterior_derivative(const FormField& f);

using PointMap = std::function<PointJet(Vec2)>;
FormField pullback(const PointMap& g, const FormField& f, std::string provenance = "map");

// Integral of a density over the surface. Even top forms on the Moebius band are rejected.
double integrate(const FormField& f, const QuadratureSpec& spec = {});
// Same, restricted to rectangles in the cover known to contain the support.
// Panels per rectangle scale with its size relative to the domain.
double integrate(const FormField& f, const std::vector<Rect>& region, const QuadratureSpec& spec = {});

// Plain integral of a function over rectangles with the same panel scaling.
double integrate_region(const std::function<double(Vec2)>& f, const std::vector<Rect>& region,
                        const Rect& reference, const QuadratureSpec& spec);

// Properly embedded straight arc from a to b (cover coordinates).
struct ArcData {
  Vec2 a, b;
  int orientation = 1;  // -1 runs from b to a
  double eps = 0.125;   // tube half-width

  Vec2 start() const { return orientation > 0 ? a : b; }
  Vec2 end() const { return orientation > 0 ? b : a; }
  Vec2 point(double t) const;
  Vec2 velocity() const;  // d gamma / dt
  // unit normal, tangent turned by +90 degrees
  Vec2 normal() const;
  std::string describe() const;
};

void validate_arc(const QuotientSurface& S, const ArcData& arc);

// Transverse profile: smooth, supported in [-eps, eps], unit integral.
double thom_profile(double s, double eps);

// rho(s) ds in tube coordinates. calibration receives the sign used so that a
// positive probe form pairs positively.
FormField poincare_dual(const QuotientSurface& S, const ArcData& arc, int* calibration = nullptr);

// Bounding rectangles of the tube inside the domain.
std::vector<Rect> tube_region(const QuotientSurface& S, const ArcData& arc);

// Vertical arc x = 1/2 for strips, nothing for the disk.
std::vector<ArcData> cut_system(const QuotientSurface& S);

// Boundary circle with period 1 in theta.
// Moebius: gamma(theta) = (2 theta, w) on the cover. Disk: (cos 2 pi theta, sin 2 pi theta).
Vec2 boundary_point(const QuotientSurface& S, double theta);
Vec2 boundary_velocity(const QuotientSurface& S, double theta);
// +1 when increasing theta is the boundary orientation induced by the local
// orientation used for the odd forms, -1 otherwise.
int boundary_orientation(const QuotientSurface& S);

}  // namespace fluxlab
