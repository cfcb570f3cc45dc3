#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "doctest.h"
#include "fluxlab/bump.hpp"
#include "fluxlab/surface.hpp"
#include "support.hpp"

using namespace fluxlab;
using testing_support::Rng;

namespace {

const Expr X = Expr::variable(Var::x);
const Expr Y = Expr::variable(Var::y);

double oracle_1d(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

PointJet shear_map(Vec2 p, double t) {
  return {{p.x + t * bump(p.y), p.y}, {1.0, t * bump_derivative(p.y, 1), 0.0, 1.0}};
}

}  // namespace

TEST_CASE("deck map and reduction") {
  QuotientSurface M = QuotientSurface::mobius();
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    Vec2 p{rng.uniform(-3, 3), rng.uniform(-0.5, 0.5)};
    Vec2 q = M.tau(M.tau(p));
    CHECK(q.x == doctest::Approx(p.x + 2.0));
    CHECK(q.y == p.y);
    int k;
    Vec2 r = M.reduce(p, k);
    CHECK(r.x >= 0.0);
    CHECK(r.x < 1.0);
    Vec2 back = M.tau(r, k);
    CHECK(std::fabs(back.x - p.x) < 1e-12);
    CHECK(back.y == p.y);
  }
  CHECK(M.tau_jacobian(1).det() == -1.0);
  CHECK(QuotientSurface::annulus().tau_jacobian(1).det() == 1.0);
  CHECK(parse_kind("mobius") == SurfaceKind::mobius);
  CHECK_THROWS_AS(parse_kind("torus"), SurfaceError);
}

TEST_CASE("areas") {
  for (double w : {0.5, 0.3}) {
    for (auto S : {QuotientSurface::mobius(w), QuotientSurface::annulus(w)}) {
      FormField om = standard_area_form(S);
      om.check_seam();
      CHECK(integrate(om) == doctest::Approx(2 * w).epsilon(1e-13));
      CHECK(S.area() == 2 * w);
    }
  }
  CHECK(integrate(standard_area_form(QuotientSurface::disk())) == doctest::Approx(kPi).epsilon(1e-13));
}

TEST_CASE("standard primitives") {
  for (auto S : {QuotientSurface::mobius(), QuotientSurface::annulus(), QuotientSurface::disk()}) {
    FormField eta = standard_primitive(S);
    CHECK(eta.parity() == Parity::odd);
    eta.check_seam();
    FormField d = exterior_derivative(eta);
    CHECK(d.degree() == 2);
    for (Vec2 p : {Vec2{0.1, 0.2}, Vec2{0.7, -0.3}})
      CHECK(d.scalar(p) == doctest::Approx(1.0).epsilon(1e-15));
  }
  // boundary line integral on the disk
  FormField eta = standard_primitive(QuotientSurface::disk());
  double line = oracle_1d(
      [&](double th) {
        Vec2 p{std::cos(2 * kPi * th), std::sin(2 * kPi * th)};
        Vec2 v{-2 * kPi * p.y, 2 * kPi * p.x};
        Vec2 c = eta.covector(p);
        return c.x * v.x + c.y * v.y;
      },
      0.0, 1.0);
  CHECK(line == doctest::Approx(kPi).epsilon(1e-13));
  // -y dx as an odd form on the Moebius band: P(x+1, -y) = y = -P(x, y)
  FormField m = standard_primitive(QuotientSurface::mobius());
  Vec2 a = m.covector({1.3, 0.2}), b = m.covector({0.3, -0.2});
  CHECK(a.x == -0.2);
  CHECK(b.x == 0.2);
}

TEST_CASE("wedge") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField dx = FormField::from_exprs(M, 1, Parity::even, {Expr::constant(1), Expr::constant(0)});
  FormField dy = FormField::from_exprs(M, 1, Parity::even, {Expr::constant(0), Expr::constant(1)});
  CHECK(wedge(dx, dy).scalar({0.3, 0.1}) == 1.0);
  CHECK(wedge(dy, dx).scalar({0.3, 0.1}) == -1.0);
  FormField eta = standard_primitive(M);
  CHECK(wedge(eta, eta).scalar({0.2, 0.4}) == 0.0);
  CHECK(wedge(eta, dx).scalar({0.2, 0.4}) == 0.0);
  FormField e_dy = wedge(eta, dy);
  CHECK(e_dy.scalar({0.2, 0.4}) == -0.4);
  CHECK(e_dy.parity() == Parity::odd);
  CHECK(wedge(dx, dy).parity() == Parity::even);
  CHECK(wedge(eta, eta).parity() == Parity::even);
  CHECK_THROWS_AS(wedge(standard_area_form(M), dx), FormError);
  CHECK_THROWS_AS(wedge(dx, standard_primitive(QuotientSurface::annulus())), FormError);
  // numeric path agrees with the symbolic one
  FormField num = FormField::numeric(
      M, 1, Parity::odd, [&](Vec2 p, double* o) { eta.eval(p, o); }, "eta copy");
  CHECK(wedge(num, dy).scalar({0.6, -0.1}) == e_dy.scalar({0.6, -0.1}));
  CHECK(wedge(FormField::from_exprs(M, 0, Parity::odd, {Y}), standard_area_form(M)).parity() == Parity::even);
}

TEST_CASE("integration of densities") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField even2 = FormField::from_exprs(M, 2, Parity::even, {Expr::constant(1)});
  CHECK_THROWS_AS(integrate(even2), FormError);
  FormField ann = FormField::from_exprs(QuotientSurface::annulus(), 2, Parity::even, {Expr::constant(1)});
  CHECK(integrate(ann) == doctest::Approx(1.0));
  CHECK_THROWS_AS(integrate(standard_primitive(M)), FormError);

  FormField b = FormField::from_exprs(M, 2, Parity::odd, {bump(Y)});
  b.check_seam();
  double want = oracle_1d([](double y) { return bump(y); }, -0.5, 0.5);
  CHECK(std::fabs(integrate(b) - want) < 1e-9);

  FormField sym = FormField::from_exprs(M, 2, Parity::odd, {Y * sin(Expr::pi() * X)});
  sym.check_seam();
  CHECK(std::fabs(integrate(sym)) < 1e-14);

  // region restriction
  CHECK(std::fabs(integrate(b, {Rect{0, 1, -0.25, 0.25}}) - want) < 1e-9);
}

TEST_CASE("seam violations are detected") {
  QuotientSurface M = QuotientSurface::mobius();
  CHECK_THROWS_AS(FormField::from_exprs(M, 0, Parity::odd, {X * Y}).check_seam(), SeamError);
  CHECK_NOTHROW(FormField::from_exprs(M, 0, Parity::odd, {Y * cos(2 * Expr::pi() * X)}).check_seam());
  CHECK_THROWS_AS(FormField::from_exprs(M, 1, Parity::odd, {Expr::constant(0), Y}).check_seam(), SeamError);
  CHECK_NOTHROW(FormField::from_exprs(M, 1, Parity::even, {Expr::constant(1), Y}).check_seam());
  CHECK_NOTHROW(FormField::from_exprs(M, 1, Parity::odd, {Y, Expr::constant(1)}).check_seam());
  CHECK_THROWS_AS(FormField::from_exprs(M, 1, Parity::even, {Y, Expr::constant(1)}).check_seam(), SeamError);
  CHECK_THROWS_AS(FormField::from_exprs(M, 2, Parity::odd, {Y}).check_seam(), SeamError);
  CHECK_NOTHROW(FormField::from_exprs(M, 2, Parity::even, {Y}).check_seam());
}

TEST_CASE("exterior derivative") {
  QuotientSurface A = QuotientSurface::annulus();
  Rng rng(5);
  const char* src[] = {"sin(3*x)*exp(y)", "x^3*y - cos(x*y)", "bump(y)*sin(2*pi*x)", "exp(-x*x-y*y)"};
  for (const char* s : src) {
    Expr f = parse(s);
    FormField d2 = exterior_derivative(exterior_derivative(FormField::from_exprs(A, 0, Parity::even, {f})));
    for (int i = 0; i < 20; ++i) {
      Vec2 p{rng.uniform(0, 1), rng.uniform(-0.5, 0.5)};
      CHECK(std::fabs(d2.scalar(p)) < 1e-9);
    }
  }
  // curl against central differences
  for (int i = 0; i < 4; ++i) {
    Expr P = parse(src[i]), Q = parse(src[(i + 1) % 4]);
    FormField d = exterior_derivative(FormField::from_exprs(A, 1, Parity::even, {P, Q}));
    for (int k = 0; k < 20; ++k) {
      double x = rng.uniform(0.1, 0.9), y = rng.uniform(-0.4, 0.4), h = 1e-5;
      double fd = (Q(x + h, y) - Q(x - h, y)) / (2 * h) - (P(x, y + h) - P(x, y - h)) / (2 * h);
      CHECK(std::fabs(d.scalar({x, y}) - fd) < 1e-6 * std::fmax(1.0, std::fabs(fd)));
    }
  }
  CHECK_THROWS_AS(exterior_derivative(standard_area_form(A)), FormError);
  FormField num = FormField::numeric(A, 0, Parity::even, [](Vec2, double* o) { o[0] = 0; }, "zero");
  CHECK_THROWS_AS(exterior_derivative(num), FormError);
}

TEST_CASE("pullbacks") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  PointMap id = [](Vec2 p) { return PointJet{p, Mat2::identity()}; };
  FormField pe = pullback(id, eta, "id");
  for (Vec2 p : {Vec2{0.2, 0.3}, Vec2{1.7, -0.1}}) {
    CHECK(pe.covector(p).x == eta.covector(p).x);
    CHECK(pe.covector(p).y == eta.covector(p).y);
  }
  // shear preserves the area form and is seam-compatible
  FormField om = standard_area_form(M);
  for (double t : {0.5, 2.0}) {
    FormField po = pullback([t](Vec2 p) { return shear_map(p, t); }, om, "shear");
    double worst = 0;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j)
        worst = std::fmax(worst, std::fabs(po.scalar({(i + 0.5) / 32, -0.5 + (j + 0.5) / 32}) - 1.0));
    CHECK(worst < 1e-12);
    FormField ps = pullback([t](Vec2 p) { return shear_map(p, t); }, eta, "shear");
    CHECK_NOTHROW(ps.check_seam());
    // -y dx pulls back to -y (dx + t b'(y) dy)
    Vec2 c = ps.covector({0.4, 0.2});
    CHECK(c.x == doctest::Approx(-0.2));
    CHECK(c.y == doctest::Approx(-0.2 * t * bump_derivative(0.2, 1)));
  }
  // shift pulls dx back to dx
  QuotientSurface A = QuotientSurface::annulus();
  FormField dx = FormField::from_exprs(A, 1, Parity::even, {Expr::constant(1), Expr::constant(0)});
  FormField sdx = pullback([](Vec2 p) { return PointJet{{p.x + 0.3, p.y}, Mat2::identity()}; }, dx, "shift");
  CHECK(sdx.covector({0.5, 0.1}).x == 1.0);
  CHECK(sdx.covector({0.5, 0.1}).y == 0.0);
  CHECK_THROWS_AS(pullback(PointMap{}, dx), FormError);
}

TEST_CASE("arcs and cut systems") {
  QuotientSurface M = QuotientSurface::mobius();
  CHECK(cut_system(M).size() == 1);
  CHECK(cut_system(QuotientSurface::annulus()).size() == 1);
  CHECK(cut_system(QuotientSurface::disk()).empty());
  ArcData arc = cut_system(M)[0];
  CHECK_NOTHROW(validate_arc(M, arc));
  CHECK(arc.eps == 0.125);
  ArcData bad = arc;
  bad.b = {0.5, 0.3};
  CHECK_THROWS_AS(validate_arc(M, bad), SurfaceError);
  ArcData wide = arc;
  wide.eps = 0.6;
  CHECK_THROWS_AS(validate_arc(M, wide), SurfaceError);
  ArcData chord{{0, -1}, {0, 1}};
  CHECK_NOTHROW(validate_arc(QuotientSurface::disk(), chord));
  chord.b = {0, 0.5};
  CHECK_THROWS_AS(validate_arc(QuotientSurface::disk(), chord), SurfaceError);
}

TEST_CASE("thom profile") {
  for (double eps : {0.125, 0.05}) {
    double total = oracle_1d([&](double s) { return thom_profile(s, eps); }, -eps, eps);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(thom_profile(eps * 1.0001, eps) == 0.0);
  }
}

TEST_CASE("Poincare dual pairs with forms like integration along the arc") {
  QuotientSurface M = QuotientSurface::mobius();
  ArcData arc = cut_system(M)[0];
  int cal = 0;
  FormField lam = poincare_dual(M, arc, &cal);
  CHECK(cal == 1);
  lam.check_seam();
  CHECK(lam.parity() == Parity::even);
  auto region = tube_region(M, arc);
  REQUIRE(region.size() == 1);
  CHECK(region[0].x0 == 0.375);
  CHECK(region[0].x1 == 0.625);

  FormField eta = standard_primitive(M);
  CHECK(std::fabs(integrate(wedge(eta, lam), region)) < 1e-15);

  Expr g = cos(Y) + Y * Y;
  FormField mu = FormField::from_exprs(M, 1, Parity::odd, {Expr::constant(0), g});
  mu.check_seam();
  double along = oracle_1d([&](double y) { return g(0.5, y); }, -0.5, 0.5);
  CHECK(std::fabs(integrate(wedge(mu, lam), region) - along) < 1e-6);

  // closed odd form with x-dependence; the exact part vanishes near the boundary
  FormField nu = exterior_derivative(FormField::from_exprs(M, 0, Parity::odd, {Y * cos(2 * Expr::pi() * X) * bump(Y)})) +
                 FormField::from_exprs(M, 1, Parity::odd, {Expr::constant(0), cos(Y)});
  nu.check_seam();
  auto nu_along = [](double) { return 2 * std::sin(0.5); };
  CHECK(std::fabs(integrate(wedge(nu, lam), region) - nu_along(0.5)) < 1e-6);
  CHECK(std::fabs(integrate(wedge(nu, lam), region) - integrate(wedge(mu, lam), region)) > 0);

  // support away from the tube
  FormField far = FormField::from_exprs(M, 1, Parity::odd, {Expr::constant(0), bump(4 * (X - 0.1)) * g});
  CHECK(std::fabs(integrate(wedge(far, lam))) < 1e-15);

  // reversing the arc reverses the dual
  ArcData rev = arc;
  rev.orientation = -1;
  FormField lr = poincare_dual(M, rev);
  CHECK(lr.covector({0.5, 0.0}).x == doctest::Approx(-lam.covector({0.5, 0.0}).x));

  // arc close to the seam: the tube is split and still pairs correctly
  ArcData edge = arc;
  edge.a.x = edge.b.x = 0.05;
  FormField le = poincare_dual(M, edge);
  le.check_seam();
  auto reg2 = tube_region(M, edge);
  CHECK(reg2.size() == 2);
  CHECK(std::fabs(integrate(wedge(nu, le), reg2) - nu_along(0.05)) < 1e-6);
}

TEST_CASE("Poincare dual of a disk chord") {
  QuotientSurface D = QuotientSurface::disk();
  double c = 0.3;
  ArcData chord{{c, -std::sqrt(1 - c * c)}, {c, std::sqrt(1 - c * c)}, 1, 0.1};
  FormField lam = poincare_dual(D, chord);
  FormField mu = FormField::from_exprs(D, 1, Parity::odd, {Expr::constant(0), exp(Y)});
  double along = oracle_1d([](double y) { return std::exp(y); }, -std::sqrt(1 - c * c), std::sqrt(1 - c * c));
  // the tube leaves the disk near the endpoints, so compare on the slab inside the disk only
  double inside = integrate_region(
      [&](Vec2 p) {
        if (norm(p) > 1.0) return 0.0;
        Vec2 m = mu.covector(p), l = lam.covector(p);
        return m.x * l.y - m.y * l.x;
      },
      tube_region(D, chord), D.domain(), QuadratureSpec{8, 256, 256});
  CHECK(std::fabs(inside - along) < 0.05);  // clipped by the circle near the ends
  CHECK(inside > 0);
}

TEST_CASE("boundary parameterization") {
  QuotientSurface M = QuotientSurface::mobius();
  CHECK(boundary_point(M, 0.25).x == 0.5);
  CHECK(boundary_point(M, 0.25).y == 0.5);
  CHECK(boundary_orientation(M) == -1);
  CHECK(boundary_orientation(QuotientSurface::disk()) == 1);
  CHECK_THROWS_AS(boundary_point(QuotientSurface::annulus(), 0.1), SurfaceError);
  // the Moebius boundary circle closes up after theta = 1
  int k;
  Vec2 q = M.reduce(boundary_point(M, 1.0), k);
  Vec2 q0 = M.reduce(boundary_point(M, 0.0), k);
  CHECK(q.x == q0.x);
  CHECK(q.y == q0.y);
  Vec2 half = M.reduce(boundary_point(M, 0.6), k);
  CHECK(half.y == -0.5);
}
