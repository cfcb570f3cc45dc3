#include "fluxlab/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxlab/bump.hpp"

namespace fluxlab {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// (eta - g*eta)(p) as a covector
Vec2 flux_covector(const FlowDiffeo& g, const FormField& eta, Vec2 p) {
  PointJet j = g(p);
  double e0[2], e1[2];
  eta.eval(p, e0);
  eta.eval(j.p, e1);
  return {e0[0] - (e1[0] * j.J.a + e1[1] * j.J.c), e0[1] - (e1[0] * j.J.b + e1[1] * j.J.d)};
}

std::vector<Rect> intersect_regions(const std::vector<Rect>& a, const std::vector<Rect>& b) {
  std::vector<Rect> out;
  for (const Rect& r : a)
    for (const Rect& s : b) {
      Rect i = intersect(r, s);
      if (!i.empty()) out.push_back(i);
    }
  return out;
}

void sample_grid(const QuotientSurface& S, int n, const std::function<void(Vec2)>& fn) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double u = (i + 0.5) / n, v = (j + 0.5) / n;
      if (S.strip()) {
        fn({u, -S.w + 2 * S.w * v});
      } else {
        Vec2 p{-1 + 2 * u, -1 + 2 * v};
        if (norm(p) < 1) fn(p);
      }
    }
}

}  // namespace

void check_flux_inputs(const FormField& lambda, const FormField& eta) {
  if (lambda.degree() != 1 || lambda.parity() != Parity::even) {
    throw FormError("lambda must be an even 1-form, got degree " + std::to_string(lambda.degree()) + " " +
                    parity_name(lambda.parity()));
  }
  if (eta.degree() != 1 || eta.parity() != Parity::odd) {
    throw FormError("eta must be an odd 1-form, got degree " + std::to_string(eta.degree()) + " " +
                    parity_name(eta.parity()));
  }
  const QuotientSurface& S = eta.surface();
  if (lambda.symbolic()) {
    FormField d = exterior_derivative(lambda);
    sample_grid(S, 12, [&](Vec2 p) {
      double v = d.scalar(p);
      if (std::fabs(v) > 1e-8) {
        throw InvariantError("lambda is not closed: d lambda = " + fmt(v) + " at (" + fmt(p.x) + ", " +
                             fmt(p.y) + ")");
      }
    });
  }
  if (eta.symbolic()) {
    FormField d = exterior_derivative(eta);
    sample_grid(S, 12, [&](Vec2 p) {
      double v = d.scalar(p);
      if (std::fabs(v - 1.0) > 1e-8) {
        throw InvariantError("d eta is not the area form: " + fmt(v) + " at (" + fmt(p.x) + ", " + fmt(p.y) +
                             ")");
      }
    });
  }
}

double lambda_pairing(const QuotientSurface& S, const FlowDiffeo& g, const FormField& lambda,
                      const FormField& eta, const QuadratureSpec& spec, const std::vector<Rect>& lambda_support) {
  check_flux_inputs(lambda, eta);
  if (!S.strip()) throw SurfaceError("lambda-flux is defined here for strip surfaces");
  std::vector<Rect> region = lambda_support.empty() ? std::vector<Rect>{S.domain()} : lambda_support;
  if (!g.support().is_everywhere()) region = intersect_regions(region, g.support().pieces(S));
  auto density = [&](Vec2 p) {
    Vec2 a = flux_covector(g, eta, p);
    double l[2];
    lambda.eval(p, l);
    return a.x * l[1] - a.y * l[0];
  };
  // full panel count per piece: a map's features scale with its support
  double total = 0.0;
  for (const Rect& r : region) total += integrate_region(density, {r}, r, spec);
  return total;
}

double flux_lambda(const QuotientSurface& S, const FlowDiffeo& g, const FormField& lambda, const FormField& eta,
                   const QuadratureSpec& spec, const std::vector<Rect>& lambda_support) {
  if (!g.rel_boundary()) {
    throw SupportError("flux homomorphism needs a boundary-fixing map; " + g.provenance() +
                       " moves the boundary (use F_lambda)");
  }
  return lambda_pairing(S, g, lambda, eta, spec, lambda_support);
}

double calabi_disk(const FlowDiffeo& g, const FormField& eta, const QuadratureSpec& spec) {
  const QuotientSurface& S = g.surface();
  if (S.kind != SurfaceKind::disk) throw SurfaceError("calabi_disk needs the disk");
  if (eta.degree() != 1) throw FormError("eta must be a 1-form");
  if (!g.rel_boundary() || g.support().is_everywhere()) {
    throw SupportError("Calabi invariant needs a map fixing a neighborhood of the boundary; got " +
                       g.provenance());
  }
  auto density = [&](Vec2 p) {
    if (dot(p, p) >= 1.0) return 0.0;
    Vec2 a = flux_covector(g, eta, p);
    double e[2];
    eta.eval(p, e);
    // eta ^ g*eta = eta ^ (eta - a) = -eta ^ a
    return -(e[0] * a.y - e[1] * a.x);
  };
  // full panel count per support box, as for local_calabi
  double total = 0.0;
  for (const Rect& r : g.support().pieces(S)) total += integrate_region(density, {r}, r, spec);
  return total;
}

LocalCalabi local_calabi_detail(const QuotientSurface& S, const FlowDiffeo& g, const Patch& patch, int e_sign,
                                const FormField& eta, const QuadratureSpec& spec, double holonomy_tol) {
  if (e_sign != 1 && e_sign != -1) throw InvariantError("section sign must be +1 or -1");
  if (eta.degree() != 1) throw FormError("eta must be a 1-form");
  spec.validate();
  LocalCalabi out;
  if (g.support().is_everywhere() || !g.rel_boundary()) {
    throw SupportError("local Calabi needs a compactly supported map; " + g.provenance() + " is not");
  }
  // place each support box inside the patch
  std::vector<Rect> boxes;
  for (const Rect& r : g.support().rects(S)) {
    bool placed = false;
    for (int k = S.strip() ? -2 : 0; k <= (S.strip() ? 2 : 0) && !placed; ++k) {
      Rect img = r;
      if (k != 0) {
        img.x0 += k;
        img.x1 += k;
        if (S.flip() < 0 && (k & 1)) img = {img.x0, img.x1, -r.y1, -r.y0};
      }
      // the patch is open and the support closed
      if (img.x0 > patch.rect.x0 && img.x1 < patch.rect.x1 && img.y0 > patch.rect.y0 && img.y1 < patch.rect.y1) {
        boxes.push_back(img);
        placed = true;
      }
    }
    if (!placed) {
      throw SupportError("support box [" + fmt(r.x0) + ", " + fmt(r.x1) + "] x [" + fmt(r.y0) + ", " + fmt(r.y1) +
                         "] of " + g.provenance() + " does not fit in patch " + patch.name);
    }
  }

  const int n = spec.order;
  const Rule1D& gl = gauss_legendre(n);
  const std::vector<double>& M = gauss_integration_matrix(n);
  std::vector<double> q(n);
  double total = 0.0;
  for (const Rect& b : boxes) {
    // full panel count on every leg, boxes are small
    const int px = spec.panels_x, py = spec.panels_y;
    Rule1D rx = composite_gauss(b.x0, b.x1, n, px);
    const double hy = b.height() / py;
    for (size_t i = 0; i < rx.size(); ++i) {
      const double x = rx.nodes[i];
      double f0 = 0.0, column = 0.0;
      for (int pnl = 0; pnl < py; ++pnl) {
        const double ya = b.y0 + pnl * hy, half = 0.5 * hy;
        for (int k = 0; k < n; ++k) q[k] = flux_covector(g, eta, {x, ya + half * (gl.nodes[k] + 1.0)}).y;
        double end = 0.0;
        for (int j = 0; j < n; ++j) {
          double f = 0.0;
          for (int k = 0; k < n; ++k) f += M[j * n + k] * q[k];
          f = f0 + half * f;
          column += half * gl.weights[j] * f;
          end += half * gl.weights[j] * q[j];
        }
        f0 += end;
      }
      check_finite(column, x, b.y1);
      out.holonomy = std::fmax(out.holonomy, std::fabs(f0));
      total += rx.weights[i] * column;
    }
  }
  if (out.holonomy > holonomy_tol) {
    throw HolonomyError("potential of eta - g*eta does not vanish above the support of " + g.provenance() +
                        " (" + fmt(out.holonomy) + "); support leaks out of its boxes");
  }
  out.value = e_sign * total;
  return out;
}

double local_calabi(const QuotientSurface& S, const FlowDiffeo& g, const Patch& patch, int e_sign,
                    const FormField& eta, const QuadratureSpec& spec) {
  return local_calabi_detail(S, g, patch, e_sign, eta, spec).value;
}

FormField adapted_primitive(const QuotientSurface& S, const std::vector<TwistSite>& sites) {
  const Expr X = Expr::variable(Var::x), Y = Expr::variable(Var::y);
  Expr beta = Expr::constant(0);
  for (const TwistSite& s : sites) {
    if (!(s.radius > 0)) throw InvariantError("twist site radius must be positive");
    const double R2 = s.radius * s.radius, Ro2 = 1.5625 * R2;
    auto cutoff = [&](Vec2 c) {
      Expr d2 = (X - c.x) * (X - c.x) + (Y - c.y) * (Y - c.y);
      return bump((d2 - R2) / (8 * (Ro2 - R2)) + 0.125);
    };
    if (S.strip()) {
      for (int j = -1; j <= 1; ++j) {
        Vec2 c = S.tau(s.center, j);
        beta = beta + cutoff(c) * (X - c.x) * (Y + c.y) * 0.5;
      }
    } else {
      Vec2 c = s.center;
      beta = beta + cutoff(c) * (c.y * X - c.x * Y) * 0.5;
    }
  }
  FormField base = standard_primitive(S);
  const std::vector<Expr>& e = base.exprs();
  return FormField::from_exprs(S, 1, Parity::odd,
                               {e[0] + differentiate(beta, Var::x), e[1] + differentiate(beta, Var::y)});
}

// ---------------------------------------------------------------------------

IsotopyPath::IsotopyPath(VectorField field, int samples, int steps)
    : field_(std::move(field)), steps_(steps > 0 ? steps : default_steps(1.0)) {
  if (samples < 1) throw InvariantError("isotopy needs at least one sample interval");
  for (int k = 0; k <= samples; ++k) times_.push_back(static_cast<double>(k) / samples);
}

FlowDiffeo IsotopyPath::at(size_t k) const {
  double t = times_.at(k);
  if (t == 0.0) return FlowDiffeo::identity(field_.surface());
  return flow_between(field_, 0.0, t, std::max(1, static_cast<int>(std::ceil(steps_ * t - 1e-9))));
}

double IsotopyPath::endpoint_residual(const FlowDiffeo& target, int n) const {
  FlowDiffeo g = end();
  double worst = 0.0;
  sample_grid(field_.surface(), n, [&](Vec2 p) { worst = std::fmax(worst, norm(g.map(p) - target.map(p))); });
  return worst;
}

IsotopyPath IsotopyPath::reparameterized(const Expr& sigma) const {
  const Expr T = Expr::variable(Var::t);
  Expr ds = differentiate(sigma, Var::t);
  VectorField f(field_.surface(), ds * substitute(field_.X1(), Var::t, sigma),
                ds * substitute(field_.X2(), Var::t, sigma), field_.support(),
                field_.provenance() + " along t = " + to_string(sigma));
  return IsotopyPath(f, static_cast<int>(times_.size()) - 1, steps_);
}

double swept_area(const QuotientSurface& S, const ArcData& arc, const IsotopyPath& iso, const QuadratureSpec& spec) {
  validate_arc(S, arc);
  const VectorField& X = iso.field();
  const int n = iso.steps();
  const double h = 1.0 / n;
  const Vec2 v0 = arc.velocity();
  auto accumulated = [&](double t) {
    Vec2 p = arc.point(t);
    if (!X.support().contains(S, p)) return 0.0;
    Vec2 v = v0;
    double A = 0.0;
    Vec2 F;
    Mat2 DF;
    for (int i = 0; i < n; ++i) {
      double s = i * h;
      X.eval(s, p, F, DF);
      Vec2 k1 = F, m1 = DF * v;
      double a1 = cross(F, v);
      X.eval(s + 0.5 * h, p + (0.5 * h) * k1, F, DF);
      Vec2 v2 = v + (0.5 * h) * m1;
      Vec2 k2 = F, m2 = DF * v2;
      double a2 = cross(F, v2);
      X.eval(s + 0.5 * h, p + (0.5 * h) * k2, F, DF);
      Vec2 v3 = v + (0.5 * h) * m2;
      Vec2 k3 = F, m3 = DF * v3;
      double a3 = cross(F, v3);
      X.eval(s + h, p + h * k3, F, DF);
      Vec2 v4 = v + h * m3;
      Vec2 k4 = F, m4 = DF * v4;
      double a4 = cross(F, v4);
      p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      v = v + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
      A += (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4);
    }
    return A;
  };
  QuadratureSpec s1 = spec;
  s1.periodic = false;
  return -integrate_1d(accumulated, 0.0, 1.0, s1);
}

KernelTest flux_kernel_test(const QuotientSurface& S, const FlowDiffeo& g, const std::vector<ArcData>& cut,
                            const FormField& eta, double tol, const QuadratureSpec& spec) {
  KernelTest out;
  out.tol = tol;
  for (const ArcData& arc : cut) {
    FormField lam = poincare_dual(S, arc);
    double f = flux_lambda(S, g, lam, eta, spec, tube_region(S, arc));
    out.residuals.push_back(f);
    if (!(std::fabs(f) < tol)) out.in_kernel = false;
  }
  return out;
}

}  // namespace fluxlab
