#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "doctest.h"
#include "fluxlab/bump.hpp"
#include "fluxlab/invariants.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace fluxlab;
using boost::math::quadrature::gauss_kronrod;
using testing_support::Rng;

namespace {

const Expr X = Expr::variable(Var::x);
const Expr Y = Expr::variable(Var::y);
const Expr T = Expr::variable(Var::t);

FormField dx_form(const QuotientSurface& S) {
  return FormField::from_exprs(S, 1, Parity::even, {Expr::constant(1), Expr::constant(0)});
}

// int_R y b'(y) dy
double y_bprime_integral() {
  return gauss_kronrod<double, 61>::integrate([](double y) { return y * bump_derivative(y, 1); }, -0.5, 0.5, 10,
                                              1e-14);
}

// int_0^1 K for the default twist profile
double twist_profile_integral() {
  return gauss_kronrod<double, 61>::integrate([](double s) { return std::pow(1 - s, 8) / 8; }, 0.0, 1.0, 10, 1e-14);
}

// the cutoff ring is thin, so amplitudes stay small to keep the map resolvable
FlowDiffeo disk_hamiltonian_flow(const QuotientSurface& S, Vec2 c, double r, double amp, double t, double phase) {
  Expr rho = ((X - c.x) * (X - c.x) + (Y - c.y) * (Y - c.y)) / (4 * r * r);
  Expr H = amp * bump(rho) * (1.0 + 0.5 * sin(3 * X + Y + phase) * cos(2 * Y - X));
  return memoized(flow_map(hamiltonian_field(S, H, std::nullopt, SupportSet::disk(S, c, r)), t, 32));
}

// enough for the smooth integrated flows below
const QuadratureSpec kFlowSpec{8, 32, 32, false};

}  // namespace

TEST_CASE("flux of the Moebius shear") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M), dx = dx_form(M);
  CHECK(flux_lambda(M, FlowDiffeo::identity(M), dx, eta) == 0.0);
  const double oracle = -y_bprime_integral();
  CHECK(oracle == doctest::Approx(0.375).epsilon(1e-12));
  double f1 = flux_lambda(M, mobius_shear(M, 1.0), dx, eta);
  for (double t : {0.25, 1.0, 2.0}) {
    double f = flux_lambda(M, mobius_shear(M, t), dx, eta);
    CHECK(std::fabs(f - t * oracle) < 1e-6);
    CHECK(std::fabs(f - t * f1) < 1e-6);
  }
}

TEST_CASE("flux input validation") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  FlowDiffeo p = mobius_shear(M, 1.0);
  FormField odd_dx = FormField::from_exprs(M, 1, Parity::odd, {Expr::constant(1), Expr::constant(0)});
  CHECK_THROWS_AS(flux_lambda(M, p, odd_dx, eta), FormError);
  FormField ydx = FormField::from_exprs(M, 1, Parity::even, {Y * cos(2 * kPi * X), Expr::constant(0)});
  CHECK_THROWS_AS(flux_lambda(M, p, ydx, eta), InvariantError);
  FormField twice = FormField::from_exprs(M, 1, Parity::odd, {-2 * Y, Expr::constant(0)});
  CHECK_THROWS_AS(flux_lambda(M, p, dx_form(M), twice), InvariantError);
  FlowDiffeo ext = flow_map(boundary_extension(M, Expr::constant(0.1), 0.125, default_collar_cutoff()), 1.0);
  CHECK_THROWS_AS(flux_lambda(M, ext, dx_form(M), eta), SupportError);
  CHECK_NOTHROW(lambda_pairing(M, ext, dx_form(M), eta, {2, 2, 2, false}));
}

TEST_CASE("flux is additive") {
  Rng rng(101);
  for (QuotientSurface S : {QuotientSurface::mobius(), QuotientSurface::annulus()}) {
    FormField eta = standard_primitive(S);
    ArcData arc = cut_system(S)[0];
    FormField pd = poincare_dual(S, arc);
    auto tube = tube_region(S, arc);
    for (int i = 0; i < 5; ++i) {
      FlowDiffeo g = testing_support::random_rel_map(S, rng), h = testing_support::random_rel_map(S, rng);
      FlowDiffeo gh = compose_diffeos(g, h);
      double a = flux_lambda(S, gh, dx_form(S), eta) - flux_lambda(S, g, dx_form(S), eta) -
                 flux_lambda(S, h, dx_form(S), eta);
      double b = flux_lambda(S, gh, pd, eta, {}, tube) - flux_lambda(S, g, pd, eta, {}, tube) -
                 flux_lambda(S, h, pd, eta, {}, tube);
      CHECK(std::fabs(a) < 1e-6);
      CHECK(std::fabs(b) < 1e-6);
    }
  }
  // integrated flows
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  FlowDiffeo g = disk_hamiltonian_flow(M, {0.3, 0.1}, 0.25, 0.003, 1.0, 0.4);
  FlowDiffeo h = disk_hamiltonian_flow(M, {0.55, -0.1}, 0.25, 0.003, 1.0, 2.0);
  // the composite bends both bump rings, so it needs the finer rule
  const QuadratureSpec fine{8, 64, 64, false};
  double d = flux_lambda(M, compose_diffeos(g, h), dx_form(M), eta, fine) -
             flux_lambda(M, g, dx_form(M), eta, fine) - flux_lambda(M, h, dx_form(M), eta, fine);
  CHECK(std::fabs(d) < 1e-6);
}

TEST_CASE("flux does not depend on the primitive") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  // odd 0-form vanishing for |y| >= 0.45: beta(x + 1, -y) = -beta(x, y)
  Expr beta = Y * bump(Y / 1.8) * (1 + 0.5 * cos(2 * kPi * X));
  FormField eta2 = eta + FormField::from_exprs(M, 1, Parity::odd,
                                               {differentiate(beta, Var::x), differentiate(beta, Var::y)});
  CHECK_NOTHROW(eta2.check_seam());
  Rng rng(5);
  for (int i = 0; i < 4; ++i) {
    FlowDiffeo g = testing_support::random_rel_map(M, rng);
    CHECK(std::fabs(flux_lambda(M, g, dx_form(M), eta) - flux_lambda(M, g, dx_form(M), eta2)) < 1e-6);
  }
}

TEST_CASE("flux kernel") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  auto cut = cut_system(M);
  KernelTest id = flux_kernel_test(M, FlowDiffeo::identity(M), cut, eta);
  CHECK(id.in_kernel);
  KernelTest disk =
      flux_kernel_test(M, disk_hamiltonian_flow(M, {0.45, 0.05}, 0.3, 0.003, 1.0, 1.0), cut, eta, 1e-6, kFlowSpec);
  CHECK(disk.in_kernel);
  CHECK(std::fabs(disk.residuals.at(0)) < 1e-6);
  KernelTest tw = flux_kernel_test(M, FlowDiffeo::radial_twist(M, {0.95, 0.1}, 0.2, 2.0), cut, eta);
  CHECK(tw.in_kernel);
  KernelTest p1 = flux_kernel_test(M, mobius_shear(M, 1.0), cut, eta);
  CHECK(!p1.in_kernel);
  CHECK(p1.residuals.at(0) == doctest::Approx(-0.375).epsilon(1e-7));
}

TEST_CASE("Calabi invariant on the disk") {
  QuotientSurface D = QuotientSurface::disk();
  FormField eta0 = standard_primitive(D);
  FormField eta1 = FormField::from_exprs(D, 1, Parity::odd, {Expr::constant(0), X});
  CHECK(calabi_disk(FlowDiffeo::identity(D), eta0) == 0.0);
  const double k = twist_profile_integral();
  for (auto [c, R, t] : {std::tuple{Vec2{0.1, 0.2}, 0.3, 1.0}, std::tuple{Vec2{-0.4, 0.1}, 0.2, -2.5}}) {
    FlowDiffeo tw = FlowDiffeo::radial_twist(D, c, R, t);
    double cal = calabi_disk(tw, eta0);
    CHECK(std::fabs(cal - 2 * kPi * std::pow(R, 4) * t * k) < 1e-6);
    CHECK(std::fabs(cal - calabi_disk(tw, eta1)) < 1e-6);
  }
  // one-parameter subgroup of an autonomous Hamiltonian
  Vec2 c{0.2, -0.1};
  Expr rho = ((X - c.x) * (X - c.x) + (Y - c.y) * (Y - c.y)) / (4 * 0.16);
  Expr H = 0.004 * bump(rho) * (1 + 0.5 * sin(2 * X + Y) * cos(Y - X));
  VectorField F = hamiltonian_field(D, H, std::nullopt, SupportSet::disk(D, c, 0.4));
  double c1 = calabi_disk(flow_map(F, 1.0, 32), eta0, kFlowSpec);
  CHECK(std::fabs(c1) > 1e-5);
  CHECK(std::fabs(calabi_disk(flow_map(F, 0.5, 16), eta0, kFlowSpec) - 0.5 * c1) < 1e-6);
  CHECK(std::fabs(calabi_disk(flow_map(F, 2.0, 64), eta0, kFlowSpec) - 2 * c1) < 1e-6);
  // additivity, supports overlapping
  Rng rng(17);
  for (int i = 0; i < 5; ++i) {
    FlowDiffeo g = testing_support::random_twist(D, rng), h = testing_support::random_twist(D, rng);
    double d = calabi_disk(compose_diffeos(g, h), eta0) - calabi_disk(g, eta0) - calabi_disk(h, eta0);
    CHECK(std::fabs(d) < 1e-6);
  }
  FlowDiffeo ext = flow_map(boundary_extension(D, Expr::constant(0.1), 0.5, default_collar_cutoff()), 1.0);
  CHECK_THROWS_AS(calabi_disk(ext, eta0), SupportError);
  CHECK_THROWS_AS(calabi_disk(FlowDiffeo::identity(QuotientSurface::mobius()), eta0), SurfaceError);
}

TEST_CASE("local Calabi invariant") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  Patch U{"U", {0.0, 1.0, -0.45, 0.45}};
  CHECK(local_calabi(M, FlowDiffeo::identity(M), U, 1, eta) == 0.0);
  FlowDiffeo tw = FlowDiffeo::radial_twist(M, {0.5, 0.1}, 0.2, 1.5);
  double plus = local_calabi(M, tw, U, 1, eta), minus = local_calabi(M, tw, U, -1, eta);
  CHECK(plus == -minus);
  CHECK(plus != 0.0);
  // against the same twist in the standard disk, whose Calabi sign is opposite
  QuotientSurface D = QuotientSurface::disk();
  double disk = calabi_disk(FlowDiffeo::radial_twist(D, {0.1, 0.1}, 0.2, 1.5), standard_primitive(D));
  CHECK(std::fabs(local_calabi(M, tw, U, -1, eta) - disk) < 1e-6);
  // closed form
  CHECK(std::fabs(plus + 2 * kPi * std::pow(0.2, 4) * 1.5 * twist_profile_integral()) < 1e-6);
  // the same twist carried across the seam, seen from a patch around it
  Patch W{"W", {0.5, 1.5, -0.45, 0.45}};
  FlowDiffeo seam = FlowDiffeo::radial_twist(M, {0.98, 0.1}, 0.2, 1.5);
  CHECK(std::fabs(local_calabi(M, seam, W, 1, eta) - plus) < 1e-6);
  CHECK_THROWS_AS(local_calabi(M, seam, U, 1, eta), SupportError);
  // the deck image of the patch reverses orientation
  Patch W2{"W2", {-0.5, 0.5, -0.45, 0.45}};
  FlowDiffeo low = FlowDiffeo::radial_twist(M, {0.02, 0.1}, 0.2, 1.5);
  CHECK(std::fabs(local_calabi(M, low, W2, 1, eta) - plus) < 1e-6);
  // heavy twists need the adapted primitive; the invariant stays linear in time
  FormField adapted = adapted_primitive(M, {{{0.5, 0.1}, 0.2}});
  double unit = local_calabi(M, FlowDiffeo::radial_twist(M, {0.5, 0.1}, 0.2, 1.0), U, 1, adapted);
  CHECK(std::fabs(local_calabi(M, tw, U, 1, adapted) - plus) < 1e-9);
  CHECK(std::fabs(local_calabi(M, FlowDiffeo::radial_twist(M, {0.5, 0.1}, 0.2, 120.0), U, 1, adapted) - 120 * unit) <
        1e-6);
  // a map reaching outside its declared support is caught by the holonomy monitor
  FlowDiffeo big = FlowDiffeo::radial_twist(M, {0.5, 0.0}, 0.2, 2.0);
  FlowDiffeo liar(M, big.impl(), SupportSet::disk(M, {0.5, 0.0}, 0.12), "mislabelled twist");
  CHECK_THROWS_AS(local_calabi(M, liar, U, 1, eta), HolonomyError);
  CHECK_THROWS_AS(local_calabi(M, tw, U, 2, eta), InvariantError);
}

TEST_CASE("adapted primitive") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField a = adapted_primitive(M, {{{0.97, 0.1}, 0.15}, {{0.4, -0.2}, 0.1}});
  CHECK_NOTHROW(a.check_seam());
  CHECK_NOTHROW(check_flux_inputs(dx_form(M), a));
  // rotationally symmetric near each center
  Vec2 c{0.4, -0.2}, p{0.43, -0.16};
  Vec2 v = a.covector(p);
  CHECK(v.x == doctest::Approx(-(p.y - c.y) / 2).epsilon(1e-12));
  CHECK(v.y == doctest::Approx((p.x - c.x) / 2).epsilon(1e-12));
  // standard far away
  Vec2 q{0.7, 0.4};
  CHECK(a.covector(q).x == doctest::Approx(-0.4));
  CHECK(a.covector(q).y == 0.0);
  QuotientSurface D = QuotientSurface::disk();
  FormField ad = adapted_primitive(D, {{{0.3, 0.2}, 0.2}});
  Vec2 w = ad.covector({0.35, 0.25});
  CHECK(w.x == doctest::Approx(-(0.25 - 0.2) / 2));
  CHECK(w.y == doctest::Approx((0.35 - 0.3) / 2));
}

TEST_CASE("swept area equals lambda flux") {
  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  ArcData arc = cut_system(M)[0];
  int cal = 0;
  FormField pd = poincare_dual(M, arc, &cal);
  CHECK(cal == 1);
  auto tube = tube_region(M, arc);
  VectorField zero(M, Expr::constant(0), Expr::constant(0), SupportSet::none(), "zero");
  CHECK(swept_area(M, arc, IsotopyPath(zero)) == 0.0);
  for (double t : {0.5, 1.0, 2.0}) {
    VectorField sf(M, t * bump(Y), Expr::constant(0), SupportSet::band(M, -0.25, 0.25), "shear");
    IsotopyPath iso(sf);
    CHECK(iso.endpoint_residual(mobius_shear(M, t)) < 1e-10);
    double O = swept_area(M, arc, iso);
    CHECK(std::fabs(O - flux_lambda(M, mobius_shear(M, t), pd, eta, {}, tube)) < 1e-6);
    CHECK(std::fabs(O + 0.375 * t) < 1e-6);
  }
  // a slanted arc and a time-dependent field that is not a shear
  ArcData slant{{0.3, -0.5}, {0.6, 0.5}};
  FormField pd2 = poincare_dual(M, slant);
  Expr Hd = 0.004 * Y * bump(Y) * cos(2 * kPi * X + 3 * T);
  VectorField F(M, 0.3 * bump(Y) + differentiate(Hd, Var::y), -differentiate(Hd, Var::x), SupportSet::band(M, -0.25, 0.25),
                "shear + wave");
  CHECK_NOTHROW(F.validate());
  IsotopyPath iso(F);
  FlowDiffeo g = iso.end();
  double O = swept_area(M, slant, iso);
  CHECK(std::fabs(O + 0.3 * 0.375) < 1e-6);
  CHECK(std::fabs(O - flux_lambda(M, memoized(flow_map(F, 1.0, 32)), pd2, eta, kFlowSpec, tube_region(M, slant))) < 1e-6);
  // reparameterized isotopy, same endpoints
  IsotopyPath slow = iso.reparameterized(T * T * (3 - 2 * T));
  CHECK(slow.endpoint_residual(g) < 1e-7);
  CHECK(std::fabs(swept_area(M, slant, slow) - O) < 1e-6);
  CHECK(iso.at(0).map({0.3, 0.1}).x == 0.3);
}

TEST_CASE("swept area on the annulus") {
  QuotientSurface A = QuotientSurface::annulus();
  FormField eta = standard_primitive(A);
  ArcData arc = cut_system(A)[0];
  FormField pd = poincare_dual(A, arc);
  auto tube = tube_region(A, arc);
  // profiled shear: swept area and flux agree
  VectorField sf(A, 0.8 * bump(Y - 0.1) + 0.3 * bump(2 * Y + 0.2), Expr::constant(0), SupportSet::band(A, -0.35, 0.35),
                 "shear");
  IsotopyPath iso(sf);
  CHECK(std::fabs(swept_area(A, arc, iso) - flux_lambda(A, memoized(flow_map(sf, 1.0, 32)), pd, eta, kFlowSpec, tube)) < 1e-6);
  // the rigid shift moves the boundary: it sweeps -2 w c but has no flux
  double c = 0.3;
  VectorField shift(A, Expr::constant(c), Expr::constant(0), SupportSet::everywhere(), "shift");
  IsotopyPath rigid(shift);
  CHECK(std::fabs(swept_area(A, arc, rigid) + 2 * A.w * c) < 1e-9);
  CHECK(std::fabs(lambda_pairing(A, rigid.end(), pd, eta, {}, tube)) < 1e-12);
}
