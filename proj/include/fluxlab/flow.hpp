#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxlab/circle.hpp"
#include "fluxlab/fieldexpr.hpp"
#include "fluxlab/geometry.hpp"
#include "fluxlab/surface.hpp"

namespace fluxlab {

class FlowError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TangencyError : public FlowError {
  using FlowError::FlowError;
};

class DomainExit : public FlowError {
  using FlowError::FlowError;
};

// Where a field or map can differ from zero / the identity. Rectangles are in
// fundamental-domain coordinates; the disk collar is kept as a radius bound.
class SupportSet {
 public:
  static SupportSet everywhere();
  static SupportSet none();
  // disk of radius r around c, with its deck images on strips
  static SupportSet disk(const QuotientSurface& S, Vec2 c, double r);
  // strips: w - depth <= |y| <= w; disk: 1 - depth <= |p| <= 1
  static SupportSet collar(const QuotientSurface& S, double depth);
  // strips: y0 <= y <= y1 for every x
  static SupportSet band(const QuotientSurface& S, double y0, double y1);

  bool is_everywhere() const { return everywhere_; }
  bool contains(const QuotientSurface& S, Vec2 p) const;
  // rectangles covering the support inside the fundamental domain
  std::vector<Rect> rects(const QuotientSurface& S) const;
  // disjoint rectangles with the same union, keeping small boxes whole
  std::vector<Rect> pieces(const QuotientSurface& S) const;
  // closure stays away from the boundary
  bool interior() const { return interior_; }

  static SupportSet unite(const SupportSet& a, const SupportSet& b);

 private:
  bool everywhere_ = false;
  bool interior_ = true;
  std::vector<Rect> rects_;
  std::vector<Rect> boxes_;  // as added, may overlap
  double disk_collar_ = 0.0;  // disk kind only
};

// Time-dependent vector field X(x, y, t) on the cover, extended from the
// fundamental domain by X(tau q) = D tau X(q).
class VectorField {
 public:
  VectorField(const QuotientSurface& S, Expr X1, Expr X2, SupportSet support, std::string provenance);

  const QuotientSurface& surface() const { return surface_; }
  const Expr& X1() const { return x1_; }
  const Expr& X2() const { return x2_; }
  const SupportSet& support() const { return support_; }
  const std::string& provenance() const { return provenance_; }

  void eval(double t, Vec2 p, Vec2& X, Mat2& DX) const;
  Vec2 value(double t, Vec2 p) const;

  Expr divergence() const;
  // each throws on the first failing sample
  void check_divergence_free(int samples = 64, double tol = 1e-8) const;
  void check_tangency(int samples = 64, double tol = 1e-9) const;
  void check_equivariance(int samples = 256, double tol = 1e-9) const;
  void validate() const;

 private:
  QuotientSurface surface_;
  Expr x1_, x2_;
  SupportSet support_;
  std::string provenance_;
  std::shared_ptr<Program> prog_;  // X1, X2, X1_x, X1_y, X2_x, X2_y
};

// i(X) omega = dH, so X = (H_y, -H_x). H is multiplied by the cutoff when given.
VectorField hamiltonian_field(const QuotientSurface& S, const Expr& H,
                              const std::optional<Expr>& cutoff = std::nullopt,
                              SupportSet support = SupportSet::everywhere());

// Divergence-free extension of a boundary field xi(theta, t) into a collar of the
// given depth, cut off by mu(s), s = distance to the boundary / depth.
// Moebius and disk only.
VectorField boundary_extension(const QuotientSurface& S, const Expr& xi, double collar_depth,
                               const Expr& mu);
Expr default_collar_cutoff();  // bump((s + 0.85) / 7.2)
double default_collar_depth(const QuotientSurface& S);

// Area-preserving map with Jacobian, as a time-1 map or in closed form.
class FlowDiffeo {
 public:
  struct Impl {
    virtual ~Impl() = default;
    // winding: accumulated turning about the origin / 2 pi (disk boundary traces)
    virtual PointJet jet(Vec2 p, double* winding) const = 0;
    virtual std::shared_ptr<const Impl> inverse() const = 0;
    virtual double step_error(Vec2) const { return 0.0; }
  };

  FlowDiffeo(const QuotientSurface& S, std::shared_ptr<const Impl> impl, SupportSet support,
             std::string provenance);

  PointJet operator()(Vec2 p) const { return impl_->jet(p, nullptr); }
  PointJet jet(Vec2 p, double* winding = nullptr) const { return impl_->jet(p, winding); }
  Vec2 map(Vec2 p) const { return impl_->jet(p, nullptr).p; }
  PointMap as_map() const;

  const QuotientSurface& surface() const { return surface_; }
  const SupportSet& support() const { return support_; }
  bool rel_boundary() const { return support_.interior(); }
  const std::string& provenance() const { return provenance_; }
  const std::shared_ptr<const Impl>& impl() const { return impl_; }

  // |g_n(p) - g_2n(p)| for integrated maps, 0 for closed forms
  double step_doubling_error(Vec2 p) const { return impl_->step_error(p); }

  static FlowDiffeo identity(const QuotientSurface& S);
  // (x + t b(y), y); profile defaults to bump(y) and must be even on the Moebius band
  static FlowDiffeo shear(const QuotientSurface& S, double t, const std::optional<Expr>& profile = std::nullopt);
  // time-t map of H = R^2 K(|p - c|^2 / R^2); K in the variable s, default (1 - s)^8 / 8
  static FlowDiffeo radial_twist(const QuotientSurface& S, Vec2 center, double radius, double t,
                                 const std::optional<Expr>& profile = std::nullopt);

 private:
  QuotientSurface surface_;
  std::shared_ptr<const Impl> impl_;
  SupportSet support_;
  std::string provenance_;
};

Expr default_twist_profile();

FlowDiffeo mobius_shear(const QuotientSurface& S, double t);

// RK4 on dp/dt = X, dJ/dt = DX J over [t0, t1].
FlowDiffeo flow_map(const VectorField& X, double t_end, int steps = 0);
FlowDiffeo flow_between(const VectorField& X, double t0, double t1, int steps = 0);
int default_steps(double duration);

FlowDiffeo compose_diffeos(const FlowDiffeo& g, const FlowDiffeo& h);  // g o h
FlowDiffeo invert_diffeo(const FlowDiffeo& g);
// Remembers jets by exact point, for quadratures that revisit the same nodes.
FlowDiffeo memoized(const FlowDiffeo& g);

// Restriction to the boundary circle as a lift (Moebius: theta = x / 2 on the top edge).
CircleLift boundary_trace(const FlowDiffeo& g);

// sup over an n x n grid of |det Dg - 1|
double area_defect(const FlowDiffeo& g, int n = 32);

}  // namespace fluxlab
