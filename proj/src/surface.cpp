#include "fluxlab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fluxlab/bump.hpp"

namespace fluxlab {

const char* kind_name(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::disk:
      return "disk";
    case SurfaceKind::annulus:
      return "annulus";
    case SurfaceKind::mobius:
      return "mobius";
  }
  return "?";
}

SurfaceKind parse_kind(std::string_view name) {
  if (name == "disk") return SurfaceKind::disk;
  if (name == "annulus") return SurfaceKind::annulus;
  if (name == "mobius") return SurfaceKind::mobius;
  throw SurfaceError("unknown surface kind '" + std::string(name) + "' (disk, annulus, mobius)");
}

Vec2 QuotientSurface::tau(Vec2 p, int k) const {
  if (!strip()) return p;
  double s = (k % 2 != 0) ? flip() : 1.0;
  return {p.x + k, s * p.y};
}

Mat2 QuotientSurface::tau_jacobian(int k) const {
  double s = (strip() && k % 2 != 0) ? flip() : 1.0;
  return {1.0, 0.0, 0.0, s};
}

Vec2 QuotientSurface::reduce(Vec2 p, int& k) const {
  if (!strip()) {
    k = 0;
    return p;
  }
  double fl = std::floor(p.x);
  k = static_cast<int>(fl);
  double s = (k % 2 != 0) ? flip() : 1.0;
  double x = p.x - fl;
  if (x >= 1.0) {  // p.x just below an integer
    x -= 1.0;
    ++k;
    s = (k % 2 != 0) ? flip() : 1.0;
  }
  return {x, s * p.y};
}

double QuotientSurface::area() const { return strip() ? 2.0 * w : kPi; }

Rect QuotientSurface::domain() const {
  if (strip()) return {0.0, 1.0, -w, w};
  return {-1.0, 1.0, -1.0, 1.0};
}

bool QuotientSurface::inside(Vec2 p, double tol) const {
  if (strip()) return std::fabs(p.y) <= w + tol;
  return norm(p) <= 1.0 + tol;
}

std::string QuotientSurface::describe() const {
  std::ostringstream os;
  os << kind_name(kind);
  if (strip()) os << "(w=" << w << ")";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

bool same_surface(const QuotientSurface& a, const QuotientSurface& b) {
  return a.kind == b.kind && a.w == b.w;
}

void require_same(const FormField& a, const FormField& b, const char* op) {
  if (!same_surface(a.surface(), b.surface())) {
    throw FormError(std::string(op) + ": forms live on different surfaces");
  }
}

Parity product_parity(Parity a, Parity b) { return a == b ? Parity::even : Parity::odd; }

}  // namespace

FormField FormField::from_exprs(const QuotientSurface& S, int degree, Parity parity,
                                std::vector<Expr> coeffs) {
  if (degree < 0 || degree > 2) throw FormError("form degree must be 0, 1 or 2");
  size_t want = degree == 1 ? 2 : 1;
  if (coeffs.size() != want) {
    throw FormError("degree " + std::to_string(degree) + " form needs " + std::to_string(want) +
                    " coefficients");
  }
  FormField f;
  f.surface_ = S;
  f.degree_ = degree;
  f.parity_ = parity;
  f.exprs_ = coeffs;
  auto prog = std::make_shared<Program>(coeffs);
  f.raw_ = [prog](Vec2 p, double* out) { prog->run({p.x, p.y, 0.0, 0.0, 0.0}, out); };
  std::string s;
  if (degree == 0) s = to_string(coeffs[0]);
  if (degree == 1) s = "(" + to_string(coeffs[0]) + ") dx + (" + to_string(coeffs[1]) + ") dy";
  if (degree == 2) s = "(" + to_string(coeffs[0]) + ") dx^dy";
  f.provenance_ = s;
  return f;
}

FormField FormField::numeric(const QuotientSurface& S, int degree, Parity parity, Eval fn,
                             std::string provenance) {
  if (degree < 0 || degree > 2) throw FormError("form degree must be 0, 1 or 2");
  FormField f;
  f.surface_ = S;
  f.degree_ = degree;
  f.parity_ = parity;
  f.raw_ = std::move(fn);
  f.provenance_ = std::move(provenance);
  return f;
}

FormField FormField::zero(const QuotientSurface& S, int degree, Parity parity) {
  std::vector<Expr> c(degree == 1 ? 2 : 1, Expr::constant(0.0));
  return from_exprs(S, degree, parity, c);
}

const std::vector<Expr>& FormField::exprs() const {
  if (exprs_.empty()) throw FormError("form " + provenance_ + " has no symbolic coefficients");
  return exprs_;
}

int FormField::seam_sign(int component) const {
  int flip = surface_.flip();
  int sigma = parity_ == Parity::odd ? flip : 1;
  if (degree_ == 0) return sigma;
  if (degree_ == 2) return sigma * flip;
  return component == 0 ? sigma : sigma * flip;
}

void FormField::eval(Vec2 p, double* out) const {
  int k = 0;
  Vec2 q = surface_.reduce(p, k);
  raw_(q, out);
  if (k % 2 != 0) {
    for (int i = 0; i < components(); ++i) out[i] *= seam_sign(i);
  }
}

double FormField::scalar(Vec2 p) const {
  if (degree_ == 1) throw FormError("scalar() on a 1-form");
  double v;
  eval(p, &v);
  return v;
}

Vec2 FormField::covector(Vec2 p) const {
  if (degree_ != 1) throw FormError("covector() needs a 1-form");
  double v[2];
  eval(p, v);
  return {v[0], v[1]};
}

void FormField::check_seam(int samples, double tol) const {
  if (!surface_.strip()) return;
  const double w = surface_.w;
  for (int i = 0; i < samples; ++i) {
    double y = -w + 2.0 * w * (i + 0.5) / samples;
    double lo[2], hi[2];
    raw_({0.0, y}, lo);
    Vec2 img = surface_.tau({0.0, y});
    raw_(img, hi);
    for (int c = 0; c < components(); ++c) {
      double want = seam_sign(c) * lo[c];
      if (!std::isfinite(hi[c]) || std::fabs(hi[c] - want) > tol) {
        std::ostringstream os;
        os << parity_name(parity_) << " " << degree_ << "-form " << provenance_
           << " violates the seam rule at (1, " << img.y << "), component " << c << ": " << hi[c]
           << " vs " << want;
        throw SeamError(os.str());
      }
    }
  }
}

namespace {

FormField combine(const FormField& a, const FormField& b, double sb, const char* op) {
  require_same(a, b, op);
  if (a.degree() != b.degree() || a.parity() != b.parity()) {
    throw FormError(std::string(op) + ": degree or parity mismatch");
  }
  if (a.symbolic() && b.symbolic()) {
    std::vector<Expr> c;
    for (size_t i = 0; i < a.exprs().size(); ++i) {
      c.push_back(sb > 0 ? a.exprs()[i] + b.exprs()[i] : a.exprs()[i] - b.exprs()[i]);
    }
    return FormField::from_exprs(a.surface(), a.degree(), a.parity(), c);
  }
  int n = a.components();
  return FormField::numeric(
      a.surface(), a.degree(), a.parity(),
      [a, b, sb, n](Vec2 p, double* out) {
        double u[2], v[2];
        a.eval(p, u);
        b.eval(p, v);
        for (int i = 0; i < n; ++i) out[i] = u[i] + sb * v[i];
      },
      "(" + a.provenance() + ") " + (sb > 0 ? "+" : "-") + " (" + b.provenance() + ")");
}

}  // namespace

FormField operator+(const FormField& a, const FormField& b) { return combine(a, b, 1.0, "sum"); }
FormField operator-(const FormField& a, const FormField& b) { return combine(a, b, -1.0, "difference"); }

FormField operator*(double c, const FormField& a) {
  if (a.symbolic()) {
    std::vector<Expr> e;
    for (auto& x : a.exprs()) e.push_back(c * x);
    return FormField::from_exprs(a.surface(), a.degree(), a.parity(), e);
  }
  int n = a.components();
  std::ostringstream os;
  os << c << " * (" << a.provenance() << ")";
  return FormField::numeric(
      a.surface(), a.degree(), a.parity(),
      [a, c, n](Vec2 p, double* out) {
        a.eval(p, out);
        for (int i = 0; i < n; ++i) out[i] *= c;
      },
      os.str());
}

FormField standard_area_form(const QuotientSurface& S) {
  return FormField::from_exprs(S, 2, Parity::odd, {Expr::constant(1.0)});
}

FormField standard_primitive(const QuotientSurface& S) {
  Expr x = Expr::variable(Var::x), y = Expr::variable(Var::y);
  if (S.strip()) return FormField::from_exprs(S, 1, Parity::odd, {-y, Expr::constant(0.0)});
  return FormField::from_exprs(S, 1, Parity::odd, {-0.5 * y, 0.5 * x});
}

FormField wedge(const FormField& a, const FormField& b) {
  require_same(a, b, "wedge");
  if (a.degree() + b.degree() != 2) {
    throw FormError("wedge: degrees " + std::to_string(a.degree()) + " and " +
                    std::to_string(b.degree()) + " do not sum to 2");
  }
  Parity par = product_parity(a.parity(), b.parity());
  const QuotientSurface& S = a.surface();
  if (a.symbolic() && b.symbolic()) {
    Expr c;
    if (a.degree() == 1) {
      c = a.exprs()[0] * b.exprs()[1] - a.exprs()[1] * b.exprs()[0];
    } else {
      c = a.exprs()[0] * b.exprs()[0];
    }
    return FormField::from_exprs(S, 2, par, {c});
  }
  std::string prov = "(" + a.provenance() + ") ^ (" + b.provenance() + ")";
  if (a.degree() == 1) {
    return FormField::numeric(
        S, 2, par,
        [a, b](Vec2 p, double* out) {
          double u[2], v[2];
          a.eval(p, u);
          b.eval(p, v);
          out[0] = u[0] * v[1] - u[1] * v[0];
        },
        prov);
  }
  return FormField::numeric(
      S, 2, par,
      [a, b](Vec2 p, double* out) {
        double u, v;
        a.eval(p, &u);
        b.eval(p, &v);
        out[0] = u * v;
      },
      prov);
}

FormField exterior_derivative(const FormField& f) {
  if (!f.symbolic()) throw FormError("exterior derivative needs symbolic coefficients");
  const auto& e = f.exprs();
  if (f.degree() == 0) {
    return FormField::from_exprs(f.surface(), 1, f.parity(),
                                 {differentiate(e[0], Var::x), differentiate(e[0], Var::y)});
  }
  if (f.degree() == 1) {
    return FormField::from_exprs(f.surface(), 2, f.parity(),
                                 {differentiate(e[1], Var::x) - differentiate(e[0], Var::y)});
  }
  throw FormError("d of a 2-form: there are no 3-forms on a surface");
}

FormField pullback(const PointMap& g, const FormField& f, std::string provenance) {
  if (!g) throw FormError("pullback: map has no Jacobian");
  const int deg = f.degree();
  std::string prov = provenance + "*(" + f.provenance() + ")";
  return FormField::numeric(
      f.surface(), deg, f.parity(),
      [g, f, deg](Vec2 p, double* out) {
        PointJet j = g(p);
        if (deg == 0) {
          f.eval(j.p, out);
        } else if (deg == 1) {
          double v[2];
          f.eval(j.p, v);
          out[0] = v[0] * j.J.a + v[1] * j.J.c;
          out[1] = v[0] * j.J.b + v[1] * j.J.d;
        } else {
          double v;
          f.eval(j.p, &v);
          out[0] = v * j.J.det();
        }
      },
      prov);
}

// ---------------------------------------------------------------------------

double integrate_region(const std::function<double(Vec2)>& f, const std::vector<Rect>& region,
                        const Rect& reference, const QuadratureSpec& spec) {
  spec.validate();
  double total = 0.0;
  for (const Rect& r : region) {
    if (r.empty()) continue;
    int px = std::max(1, static_cast<int>(std::ceil(spec.panels_x * r.width() / reference.width() - 1e-9)));
    int py = std::max(1, static_cast<int>(std::ceil(spec.panels_y * r.height() / reference.height() - 1e-9)));
    QuadratureSpec s = spec;
    s.panels_x = px;
    s.panels_y = py;
    s.periodic = false;
    total += integrate_2d([&](double x, double y) { return f({x, y}); }, r, s);
  }
  return total;
}

namespace {

void require_density(const FormField& f) {
  if (f.degree() != 2) throw FormError("only 2-forms can be integrated over the surface");
  if (f.surface().kind == SurfaceKind::mobius && f.parity() == Parity::even) {
    throw FormError("an even 2-form on the Moebius band is not a density: " + f.provenance());
  }
}

}  // namespace

double integrate(const FormField& f, const QuadratureSpec& spec) {
  require_density(f);
  const QuotientSurface& S = f.surface();
  if (S.strip()) {
    QuadratureSpec s = spec;
    s.periodic = false;
    return integrate_2d([&](double x, double y) { return f.scalar({x, y}); }, S.domain(), s);
  }
  // polar: theta periodic, r Gauss
  Rule1D rr = composite_gauss(0.0, 1.0, spec.order, spec.panels_y);
  Rule1D rt = periodic_trapezoid(0.0, 1.0, spec.order * spec.panels_x);
  double total = 0.0;
  for (size_t i = 0; i < rr.size(); ++i) {
    double r = rr.nodes[i], row = 0.0;
    for (size_t j = 0; j < rt.size(); ++j) {
      double a = 2.0 * kPi * rt.nodes[j];
      double v = f.scalar({r * std::cos(a), r * std::sin(a)});
      check_finite(v, r * std::cos(a), r * std::sin(a));
      row += rt.weights[j] * v;
    }
    total += rr.weights[i] * row * 2.0 * kPi * r;
  }
  return total;
}

double integrate(const FormField& f, const std::vector<Rect>& region, const QuadratureSpec& spec) {
  require_density(f);
  return integrate_region([&](Vec2 p) { return f.scalar(p); }, region, f.surface().domain(), spec);
}

// ---------------------------------------------------------------------------

Vec2 ArcData::point(double t) const {
  Vec2 s = start(), e = end();
  return s + t * (e - s);
}

Vec2 ArcData::velocity() const { return end() - start(); }

Vec2 ArcData::normal() const {
  Vec2 v = velocity();
  double n = norm(v);
  return {-v.y / n, v.x / n};
}

std::string ArcData::describe() const {
  std::ostringstream os;
  os << "arc (" << start().x << ", " << start().y << ") -> (" << end().x << ", " << end().y
     << "), eps " << eps;
  return os.str();
}

namespace {

double signed_offset(const ArcData& arc, Vec2 p) { return dot(arc.normal(), p - arc.start()); }

}  // namespace

void validate_arc(const QuotientSurface& S, const ArcData& arc) {
  auto fail = [&](const std::string& why) { throw SurfaceError(arc.describe() + ": " + why); };
  if (!(arc.eps > 0.0)) fail("tube width must be positive");
  if (arc.orientation != 1 && arc.orientation != -1) fail("orientation must be +1 or -1");
  if (norm(arc.b - arc.a) < 1e-12) fail("degenerate arc");
  if (S.strip()) {
    const double w = S.w;
    bool ok = (std::fabs(arc.a.y + w) < 1e-12 && std::fabs(arc.b.y - w) < 1e-12) ||
              (std::fabs(arc.a.y - w) < 1e-12 && std::fabs(arc.b.y + w) < 1e-12);
    if (!ok) fail("endpoints must lie on opposite edges y = -w and y = w");
    // tube against its deck images
    const int n = 32;
    Vec2 lo = arc.a, hi = arc.b;
    double reach = arc.eps / std::fabs(arc.normal().x);
    double x0 = std::fmin(lo.x, hi.x) - reach, x1 = std::fmax(lo.x, hi.x) + reach;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        Vec2 p{x0 + (x1 - x0) * i / n, -w + 2 * w * j / n};
        if (std::fabs(signed_offset(arc, p)) > arc.eps) continue;
        for (int k : {-1, 1}) {
          if (std::fabs(signed_offset(arc, S.tau(p, k))) <= arc.eps) {
            fail("tubular neighbourhood overlaps its image under the seam map");
          }
        }
      }
    }
  } else {
    if (std::fabs(norm(arc.a) - 1.0) > 1e-9 || std::fabs(norm(arc.b) - 1.0) > 1e-9) {
      fail("endpoints must lie on the unit circle");
    }
    if (arc.eps >= 1.0) fail("tube too wide");
  }
}

double thom_profile(double s, double eps) {
  return bump(s / (4.0 * eps)) / (4.0 * eps * bump_integral());
}

std::vector<Rect> tube_region(const QuotientSurface& S, const ArcData& arc) {
  if (S.strip()) {
    double reach = arc.eps / std::fabs(arc.normal().x);
    double x0 = std::fmin(arc.a.x, arc.b.x) - reach, x1 = std::fmax(arc.a.x, arc.b.x) + reach;
    // shift into [0, 1) and split at the seam; full height so the y flip is harmless
    double sh = std::floor(x0);
    x0 -= sh;
    x1 -= sh;
    std::vector<Rect> out;
    out.push_back({x0, std::fmin(x1, 1.0), -S.w, S.w});
    if (x1 > 1.0) out.push_back({0.0, std::fmin(x1 - 1.0, 1.0), -S.w, S.w});
    return out;
  }
  Vec2 t = arc.velocity();
  t = (1.0 / norm(t)) * t;
  Vec2 n = arc.normal();
  Rect box{1e300, -1e300, 1e300, -1e300};
  for (Vec2 c : {arc.a, arc.b}) {
    for (double sn : {-1.0, 1.0}) {
      for (double st : {-1.0, 1.0}) {
        Vec2 q = c + (sn * arc.eps) * n + (st * arc.eps) * t;
        box.x0 = std::fmin(box.x0, q.x);
        box.x1 = std::fmax(box.x1, q.x);
        box.y0 = std::fmin(box.y0, q.y);
        box.y1 = std::fmax(box.y1, q.y);
      }
    }
  }
  return {intersect(box, S.domain())};
}

FormField poincare_dual(const QuotientSurface& S, const ArcData& arc, int* calibration) {
  validate_arc(S, arc);
  const Vec2 n = arc.normal();
  const Vec2 a = arc.start();
  const double eps = arc.eps;
  auto lambda0 = [n, a, eps](Vec2 p, double sign, double* out) {
    double r = sign * thom_profile(dot(n, p - a), eps);
    out[0] = r * n.x;
    out[1] = r * n.y;
  };

  // probe: a positive multiple of the tangent covector near the middle of the arc
  Vec2 mid = arc.point(0.5);
  Vec2 t = arc.velocity();
  t = (1.0 / norm(t)) * t;
  double probe_radius = std::fmin(eps, S.strip() ? S.w : 1.0 - norm(mid));
  auto probe = [&](Vec2 p) {
    double phi = bump(norm(p - mid) / (4.0 * probe_radius));
    double l[2];
    lambda0(p, 1.0, l);
    return phi * (t.x * l[1] - t.y * l[0]);
  };
  Rect box{mid.x - probe_radius, mid.x + probe_radius, mid.y - probe_radius, mid.y + probe_radius};
  QuadratureSpec ps;
  ps.panels_x = ps.panels_y = 16;
  double pairing = integrate_2d([&](double x, double y) { return probe({x, y}); }, box, ps);
  const double sign = pairing >= 0.0 ? 1.0 : -1.0;
  if (calibration) *calibration = static_cast<int>(sign);

  std::ostringstream os;
  os << "PD[" << arc.describe() << "]";
  if (!S.strip()) {
    return FormField::numeric(
        S, 1, Parity::even, [lambda0, sign](Vec2 p, double* out) { lambda0(p, sign, out); }, os.str());
  }
  // sum over the deck images of the tube that can reach the fundamental domain
  QuotientSurface surf = S;
  return FormField::numeric(
      S, 1, Parity::even,
      [lambda0, sign, surf](Vec2 q, double* out) {
        out[0] = out[1] = 0.0;
        for (int j = -1; j <= 1; ++j) {
          double v[2];
          lambda0(surf.tau(q, -j), sign, v);
          double s = (j % 2 != 0) ? surf.flip() : 1.0;
          out[0] += v[0];
          out[1] += s * v[1];
        }
      },
      os.str());
}

std::vector<ArcData> cut_system(const QuotientSurface& S) {
  if (!S.strip()) return {};
  ArcData arc;
  arc.a = {0.5, -S.w};
  arc.b = {0.5, S.w};
  arc.eps = 0.125;
  return {arc};
}

Vec2 boundary_point(const QuotientSurface& S, double theta) {
  switch (S.kind) {
    case SurfaceKind::mobius:
      return {2.0 * theta, S.w};
    case SurfaceKind::disk:
      return {std::cos(2 * kPi * theta), std::sin(2 * kPi * theta)};
    default:
      throw SurfaceError("the annulus has two boundary circles; no single boundary parameterization");
  }
}

Vec2 boundary_velocity(const QuotientSurface& S, double theta) {
  switch (S.kind) {
    case SurfaceKind::mobius:
      return {2.0, 0.0};
    case SurfaceKind::disk:
      return {-2 * kPi * std::sin(2 * kPi * theta), 2 * kPi * std::cos(2 * kPi * theta)};
    default:
      throw SurfaceError("the annulus has two boundary circles; no single boundary parameterization");
  }
}

int boundary_orientation(const QuotientSurface& S) {
  switch (S.kind) {
    case SurfaceKind::mobius:
      return -1;  // outward normal +y on the top edge, so the induced direction is -x
    case SurfaceKind::disk:
      return 1;
    default:
      throw SurfaceError("the annulus has two boundary circles; no single boundary parameterization");
  }
}

}  // namespace fluxlab
