#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "doctest.h"
#include "fluxlab/bump.hpp"
#include "fluxlab/flow.hpp"
#include "support.hpp"

using namespace fluxlab;
using testing_support::Rng;

namespace {

const Expr X = Expr::variable(Var::x);
const Expr Y = Expr::variable(Var::y);
const Expr T = Expr::variable(Var::t);

double grid_distance(const FlowDiffeo& a, const FlowDiffeo& b, int n = 16) {
  const QuotientSurface& S = a.surface();
  double m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 p = S.strip() ? Vec2{(i + 0.5) / n, -S.w + 2 * S.w * (j + 0.5) / n}
                         : Vec2{-1 + 2 * (i + 0.5) / n, -1 + 2 * (j + 0.5) / n};
      if (!S.strip() && norm(p) >= 1) continue;
      m = std::fmax(m, norm(a.map(p) - b.map(p)));
    }
  return m;
}

// independent 1-D flow of d theta / dt = xi(theta, t)
double circle_flow(const Expr& xi, double theta0) {
  using namespace boost::numeric::odeint;
  double th = theta0;
  auto rhs = [&](const double& s, double& ds, double t) { ds = xi.eval({0, 0, t, s, 0}); };
  integrate_adaptive(make_controlled(1e-14, 1e-14, runge_kutta_dopri5<double>()), rhs, th, 0.0, 1.0, 1e-3);
  return th;
}

// a random smooth Hamiltonian supported in a disk inside the strip
Expr random_disk_hamiltonian(Rng& rng, Vec2 c, double r, double amp) {
  Expr rho = ((X - c.x) * (X - c.x) + (Y - c.y) * (Y - c.y)) / (4 * r * r);
  Expr osc = sin(rng.uniform(1, 4) * X + rng.uniform(-2, 2) * Y + rng.uniform(0, 6)) *
             cos(rng.uniform(1, 3) * Y - rng.uniform(0, 2) * X) * (1 + rng.uniform(-0.5, 0.5) * T);
  return amp * bump(rho) * (1.0 + 0.5 * osc);
}

}  // namespace

TEST_CASE("hamiltonian fields") {
  QuotientSurface A = QuotientSurface::annulus();
  VectorField shear = hamiltonian_field(A, Y);
  CHECK(shear.value(0.3, {0.2, 0.1}).x == 1.0);
  CHECK(shear.value(0.3, {0.2, 0.1}).y == 0.0);

  // radial on the disk: H = rho(r^2), rho(q) = q^2 / 2 + q
  QuotientSurface D = QuotientSurface::disk();
  Expr q = X * X + Y * Y;
  VectorField rot = hamiltonian_field(D, 0.5 * q * q + q);
  for (Vec2 p : {Vec2{0.3, 0.2}, Vec2{-0.5, 0.6}}) {
    double r2 = dot(p, p);
    Vec2 v = rot.value(0, p);
    CHECK(dot(v, p) == doctest::Approx(0).scale(1));
    CHECK(norm(v) / std::sqrt(r2) == doctest::Approx(2 * (r2 + 1)).epsilon(1e-12));
    CHECK(cross(p, v) < 0);  // clockwise for increasing rho
  }

  QuotientSurface M = QuotientSurface::mobius();
  Rng rng(3);
  Expr H = random_disk_hamiltonian(rng, {0.5, 0.0}, 0.3, 0.05);
  VectorField F = hamiltonian_field(M, H, std::nullopt, SupportSet::disk(M, {0.5, 0}, 0.3));
  CHECK_NOTHROW(F.check_divergence_free());
  CHECK(F.value(0.2, {0.1, 0.4}).x == 0.0);
  CHECK(norm(F.value(0.2, {0.55, 0.05})) > 0);

  CHECK_THROWS_AS(hamiltonian_field(A, X), TangencyError);
  // tangent, but x (y^2 - w^2)^2 does not descend to the band
  CHECK_THROWS_AS(hamiltonian_field(M, X * (Y * Y - 0.25) * (Y * Y - 0.25)), SeamError);
  // cutoff multiplies H
  VectorField cut = hamiltonian_field(A, Y, bump(Y));
  CHECK(cut.value(0, {0.3, 0.3}).x == 0.0);
  CHECK(cut.value(0, {0.3, 0.0}).x == 1.0);
}

TEST_CASE("support sets") {
  QuotientSurface M = QuotientSurface::mobius();
  SupportSet s = SupportSet::disk(M, {0.95, 0.2}, 0.1);
  auto r = s.rects(M);
  CHECK(r.size() == 2);
  CHECK(s.contains(M, {0.97, 0.25}));
  CHECK(s.contains(M, {0.02, -0.25}));   // seam image, y flipped
  CHECK(!s.contains(M, {0.02, 0.25}));
  CHECK(s.contains(M, {1.02, 0.25}));    // cover point
  CHECK(s.interior());
  CHECK(!SupportSet::collar(M, 0.125).interior());
  CHECK(SupportSet::collar(M, 0.125).contains(M, {0.3, -0.45}));
  CHECK(!SupportSet::collar(M, 0.125).contains(M, {0.3, 0.2}));
  SupportSet u = SupportSet::unite(SupportSet::disk(M, {0.3, 0}, 0.1), SupportSet::disk(M, {0.35, 0}, 0.1));
  CHECK(u.rects(M).size() == 1);
  CHECK(SupportSet::unite(u, SupportSet::everywhere()).is_everywhere());
  QuotientSurface D = QuotientSurface::disk();
  CHECK(SupportSet::collar(D, 0.25).contains(D, {0.8, 0.0}));
  CHECK(!SupportSet::collar(D, 0.25).contains(D, {0.5, 0.0}));
}

TEST_CASE("mobius shear") {
  QuotientSurface M = QuotientSurface::mobius();
  CHECK(grid_distance(mobius_shear(M, 0.0), FlowDiffeo::identity(M)) == 0.0);
  for (auto [t, s] : {std::pair{0.5, 0.25}, std::pair{1.0, -2.0}, std::pair{2.0, 1.5}}) {
    FlowDiffeo a = compose_diffeos(mobius_shear(M, t), mobius_shear(M, s));
    CHECK(grid_distance(a, mobius_shear(M, t + s), 32) < 1e-12);
  }
  FlowDiffeo p = mobius_shear(M, 1.3);
  CHECK(area_defect(p) == 0.0);
  CHECK(p.rel_boundary());
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    Vec2 q{rng.uniform(0, 1), rng.uniform(-0.5, 0.5)};
    Vec2 a = p.map(M.tau(q)), b = M.tau(p.map(q));
    CHECK(norm(a - b) < 1e-14);
  }
  CHECK_THROWS_AS(mobius_shear(QuotientSurface::annulus(), 1.0), FlowError);
  CHECK_THROWS_AS(FlowDiffeo::shear(M, 1.0, Y), SeamError);
}

TEST_CASE("integrated flows") {
  QuotientSurface M = QuotientSurface::mobius();
  VectorField zero(M, Expr::constant(0), Expr::constant(0), SupportSet::everywhere(), "zero");
  FlowDiffeo z = flow_map(zero, 1.0);
  PointJet j = z({0.3, 0.2});
  CHECK(j.p.x == 0.3);
  CHECK(j.p.y == 0.2);
  CHECK(j.J.a == 1.0);
  CHECK(j.J.b == 0.0);

  // constant shear field against the closed form
  for (double t : {0.5, 1.0, 2.0}) {
    VectorField sf(M, t * bump(Y), Expr::constant(0), SupportSet::band(M, -0.25, 0.25), "shear field");
    sf.validate();
    FlowDiffeo f = flow_map(sf, 1.0);
    FlowDiffeo c = mobius_shear(M, t);
    double worst = 0;
    for (int i = 0; i < 16; ++i)
      for (int k = 0; k < 16; ++k) {
        Vec2 p{(i + 0.5) / 16, -0.5 + (k + 0.5) / 16};
        PointJet a = f(p), b = c(p);
        worst = std::fmax(worst, norm(a.p - b.p) + std::fabs(a.J.b - b.J.b));
      }
    CHECK(worst < 1e-10);
  }

  // RK4 order: halving the step cuts the error by about 16
  Rng rng(7);
  Expr H = random_disk_hamiltonian(rng, {0.5, 0.0}, 0.35, 0.15);
  VectorField F = hamiltonian_field(M, H, std::nullopt, SupportSet::disk(M, {0.5, 0}, 0.35));
  Vec2 p{0.45, 0.1};
  Vec2 ref = flow_map(F, 1.0, 4096).map(p);
  double e8 = norm(flow_map(F, 1.0, 8).map(p) - ref);
  double e16 = norm(flow_map(F, 1.0, 16).map(p) - ref);
  double e32 = norm(flow_map(F, 1.0, 32).map(p) - ref);
  CHECK(e8 / e16 > 10);
  CHECK(e8 / e16 < 24);
  CHECK(e16 / e32 > 10);
  CHECK(e16 / e32 < 24);
  Expr Hs = random_disk_hamiltonian(rng, {0.5, 0.0}, 0.35, 0.04);
  FlowDiffeo g = flow_map(hamiltonian_field(M, Hs, std::nullopt, SupportSet::disk(M, {0.5, 0}, 0.35)), 1.0);
  CHECK(g.step_doubling_error(p) < 1e-9);
  CHECK(g.step_doubling_error(p) > 0);

  // area preservation and equivariance
  CHECK(area_defect(g) < 1e-6);
  for (int i = 0; i < 10; ++i) {
    Vec2 q{rng.uniform(0, 1), rng.uniform(-0.5, 0.5)};
    CHECK(norm(g.map(M.tau(q)) - M.tau(g.map(q))) < 1e-12);
  }
  // variational Jacobian against central differences
  for (int i = 0; i < 5; ++i) {
    Vec2 q{rng.uniform(0.3, 0.7), rng.uniform(-0.2, 0.2)};
    PointJet jq = g(q);
    double h = 1e-6;
    Vec2 dx = (1 / (2 * h)) * (g.map(q + Vec2{h, 0}) - g.map(q - Vec2{h, 0}));
    Vec2 dy = (1 / (2 * h)) * (g.map(q + Vec2{0, h}) - g.map(q - Vec2{0, h}));
    CHECK(std::fabs(jq.J.a - dx.x) < 1e-6);
    CHECK(std::fabs(jq.J.c - dx.y) < 1e-6);
    CHECK(std::fabs(jq.J.b - dy.x) < 1e-6);
    CHECK(std::fabs(jq.J.d - dy.y) < 1e-6);
  }
  // identity outside the support
  CHECK(g.map({0.05, 0.45}).x == 0.05);

  // leaving the surface is reported
  VectorField out(M, Expr::constant(0), Expr::constant(1), SupportSet::everywhere(), "upward");
  CHECK_THROWS_AS(flow_map(out, 1.0).map({0.5, 0.0}), DomainExit);
}

TEST_CASE("composition and inversion") {
  QuotientSurface M = QuotientSurface::mobius();
  Rng rng(11);
  Expr H1 = random_disk_hamiltonian(rng, {0.4, 0.05}, 0.3, 0.04);
  Expr H2 = random_disk_hamiltonian(rng, {0.6, -0.05}, 0.3, 0.04);
  FlowDiffeo g = flow_map(hamiltonian_field(M, H1, std::nullopt, SupportSet::disk(M, {0.4, 0.05}, 0.3)), 1.0);
  FlowDiffeo h = flow_map(hamiltonian_field(M, H2, std::nullopt, SupportSet::disk(M, {0.6, -0.05}, 0.3)), 1.0);
  CHECK(grid_distance(compose_diffeos(g, invert_diffeo(g)), FlowDiffeo::identity(M)) < 1e-6);
  CHECK(grid_distance(invert_diffeo(compose_diffeos(g, h)),
                      compose_diffeos(invert_diffeo(h), invert_diffeo(g))) < 1e-6);
  FlowDiffeo gh = compose_diffeos(g, h);
  Vec2 p{0.5, 0.02};
  PointJet a = gh(p), hb = h(p), ga = g(hb.p);
  Mat2 prod = ga.J * hb.J;
  CHECK(std::fabs(a.J.a - prod.a) + std::fabs(a.J.b - prod.b) + std::fabs(a.J.c - prod.c) +
            std::fabs(a.J.d - prod.d) ==
        0.0);
  CHECK(area_defect(gh) < 1e-6);

  // the commutator is the identity off the union of supports
  FlowDiffeo comm = compose_diffeos(compose_diffeos(g, h), compose_diffeos(invert_diffeo(g), invert_diffeo(h)));
  SupportSet u = SupportSet::unite(g.support(), h.support());
  int outside = 0;
  for (int i = 0; i < 400; ++i) {
    Vec2 q{rng.uniform(0, 1), rng.uniform(-0.5, 0.5)};
    if (u.contains(M, q)) continue;
    ++outside;
    CHECK(norm(comm.map(q) - q) == 0.0);
  }
  CHECK(outside > 50);
}

TEST_CASE("radial twists") {
  QuotientSurface M = QuotientSurface::mobius();
  Vec2 c{0.5, 0.1};
  double R = 0.2, t = 0.7;
  FlowDiffeo tw = FlowDiffeo::radial_twist(M, c, R, t);
  // the same map as the flow of H = R^2 K(|p - c|^2 / R^2)
  Expr K = default_twist_profile();
  Expr rho = ((X - c.x) * (X - c.x) + (Y - c.y) * (Y - c.y)) / (R * R);
  Expr H = R * R * substitute(K, Var::s, rho);
  // K is a polynomial, so H is cut off outside the disk; inside, the cutoff is 1.
  // The two maps only agree on the disk, which both preserve.
  FlowDiffeo fl = flow_map(hamiltonian_field(M, H, bump((rho - 1) / 8), SupportSet::disk(M, c, R)), t, 1024);
  double m = 0;
  int inside = 0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      Vec2 q{(i + 0.5) / 24, -0.5 + (j + 0.5) / 24};
      if (norm(q - c) >= R) continue;
      ++inside;
      m = std::fmax(m, norm(tw.map(q) - fl.map(q)));
    }
  CHECK(inside > 20);
  CHECK(m < 1e-8);
  Vec2 p{0.55, 0.05};
  PointJet a = tw(p), b = fl(p);
  CHECK(std::fabs(a.J.a - b.J.a) + std::fabs(a.J.b - b.J.b) + std::fabs(a.J.c - b.J.c) + std::fabs(a.J.d - b.J.d) < 1e-7);
  CHECK(area_defect(tw) < 1e-12);
  // circles about c turn by -2 t K'(rho)
  Vec2 core = c + Vec2{0.05, 0.0};
  Vec2 img = tw.map(core);
  CHECK(norm(img - c) == doctest::Approx(0.05));
  CHECK(std::atan2(img.y - c.y, img.x - c.x) == doctest::Approx(2 * t * std::pow(1 - 1.0 / 16, 7)));
  // twist across the seam stays equivariant and area preserving
  FlowDiffeo seam = FlowDiffeo::radial_twist(M, {0.97, 0.1}, 0.15, 3.0);
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    Vec2 q{rng.uniform(0, 1), rng.uniform(-0.5, 0.5)};
    CHECK(norm(seam.map(M.tau(q)) - M.tau(seam.map(q))) < 1e-12);
    CHECK(std::fabs(seam(q).J.det() - 1) < 1e-12);
  }
  // continuity across x = 1
  CHECK(norm(seam.map({1.0 - 1e-12, -0.1}) - seam.map({1.0 + 1e-12, -0.1})) < 1e-9);
  CHECK(norm(invert_diffeo(seam).map(seam.map({0.02, -0.12})) - Vec2{0.02, -0.12}) < 1e-12);
  CHECK_THROWS_AS(FlowDiffeo::radial_twist(M, c, 0.6, 1.0), FlowError);
}

TEST_CASE("boundary extension on the Moebius band") {
  QuotientSurface M = QuotientSurface::mobius();
  double depth = default_collar_depth(M);
  CHECK(depth == 0.125);
  for (double c : {0.3, -0.45}) {
    VectorField F = boundary_extension(M, Expr::constant(c), depth, default_collar_cutoff());
    // near-boundary field is c d/dtheta, i.e. speed 2c along the top edge
    CHECK(F.value(0, {0.3, 0.5}).x == doctest::Approx(2 * c));
    FlowDiffeo g = flow_map(F, 1.0);
    CircleLift tr = boundary_trace(g);
    for (int i = 0; i < 32; ++i) {
      double th = i / 32.0;
      CHECK(std::fabs(tr(th) - (th + c)) < 1e-8);
    }
    CHECK(area_defect(g) < 1e-6);
    CHECK(!g.rel_boundary());
  }
  Expr xi = parse("0.25*sin(2*pi*theta) + 0.1*cos(4*pi*theta)*(1 + t)");
  VectorField F = boundary_extension(M, xi, depth, default_collar_cutoff());
  CHECK_NOTHROW(F.validate());
  FlowDiffeo g = flow_map(F, 1.0);
  CHECK(area_defect(g) < 1e-6);
  CircleLift tr = boundary_trace(g);
  double worst = 0;
  for (int i = 0; i < 64; ++i) {
    double th = i / 64.0;
    worst = std::fmax(worst, std::fabs(tr(th) - circle_flow(xi, th)));
  }
  CHECK(worst < 1e-6);
  // boundary preserved setwise, interior untouched
  CHECK(std::fabs(g.map({0.3, 0.5}).y - 0.5) < 1e-12);
  CHECK(g.map({0.3, 0.2}).x == 0.3);

  CHECK_THROWS_AS(boundary_extension(M, xi, depth, parse("1 - s", VarSet::collar())), FlowError);
  CHECK_THROWS_AS(boundary_extension(QuotientSurface::annulus(), xi, depth, default_collar_cutoff()), FlowError);
}

TEST_CASE("boundary extension on the disk") {
  QuotientSurface D = QuotientSurface::disk();
  Expr xi = parse("0.2 + 0.15*sin(2*pi*theta)");
  VectorField F = boundary_extension(D, xi, default_collar_depth(D), default_collar_cutoff());
  // the disk collar turns faster than the band collar, so the step count is doubled
  FlowDiffeo g = flow_map(F, 1.0, 512);
  CHECK(area_defect(g) < 1e-6);
  CircleLift tr = boundary_trace(g);
  double worst = 0;
  for (int i = 0; i < 32; ++i) {
    double th = i / 32.0;
    worst = std::fmax(worst, std::fabs(tr(th) - circle_flow(xi, th)));
  }
  CHECK(worst < 1e-6);
  // derivative of the trace
  double h = 1e-5;
  CHECK(tr.derivative(0.3) == doctest::Approx((tr(0.3 + h) - tr(0.3 - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("boundary traces") {
  QuotientSurface M = QuotientSurface::mobius();
  CircleLift id = boundary_trace(FlowDiffeo::identity(M));
  CHECK(id(0.3) == doctest::Approx(0.3));
  CircleLift sh = boundary_trace(mobius_shear(M, 1.7));
  for (double th : {0.0, 0.2, 0.55, 0.9}) CHECK(sh(th) == doctest::Approx(th));
  CHECK_THROWS_AS(boundary_trace(FlowDiffeo::identity(QuotientSurface::annulus())), FlowError);
  // traces of a composition compose
  Expr xi1 = parse("0.2*sin(2*pi*theta)"), xi2 = parse("0.1 + 0.1*cos(2*pi*theta)");
  double d = default_collar_depth(M);
  FlowDiffeo g1 = flow_map(boundary_extension(M, xi1, d, default_collar_cutoff()), 1.0);
  FlowDiffeo g2 = flow_map(boundary_extension(M, xi2, d, default_collar_cutoff()), 1.0);
  CircleLift a = boundary_trace(compose_diffeos(g1, g2));
  CircleLift b = compose(boundary_trace(g1), boundary_trace(g2));
  for (double th : {0.1, 0.45, 0.8}) CHECK(std::fabs(a(th) - b(th)) < 1e-12);
}
