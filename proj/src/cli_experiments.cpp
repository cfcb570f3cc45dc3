#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "fluxlab/celldivision.hpp"
#include "fluxlab/circle.hpp"
#include "fluxlab/cli.hpp"
#include "fluxlab/transgression.hpp"

namespace fluxlab::cli {

namespace {

const Expr X = Expr::variable(Var::x);
const Expr Y = Expr::variable(Var::y);
const Expr T = Expr::variable(Var::t);
const Expr TH = Expr::variable(Var::theta);

struct Ctx {
  const ExperimentConfig& cfg;
  const ExperimentSpec& e;
  const RunOptions& opt;
  std::mt19937_64 rng;
  std::vector<ReportRow> rows;

  double tol(double fallback) const {
    if (opt.tol) return *opt.tol;
    auto it = cfg.tolerances.find(e.type);
    return it != cfg.tolerances.end() ? it->second : fallback;
  }
  void check(const std::string& quantity, double value, double oracle, double fallback_tol, const std::string& anchor) {
    rows.push_back(check_row(e.name, quantity, value, oracle, tol(fallback_tol), anchor));
  }

  // fixed map from raw bits, so reports do not depend on the standard library
  double uniform(double a, double b) { return a + (b - a) * static_cast<double>(rng() >> 11) * 0x1.0p-53; }
  int integer(int a, int b) { return a + static_cast<int>(uniform(0, 1) * (b - a + 1)); }

  bool has(const std::string& k) const { return e.params.count(k) > 0; }
  std::string str(const std::string& k, const std::string& fallback) const {
    auto it = e.params.find(k);
    return it == e.params.end() ? fallback : it->second;
  }
  double num(const std::string& k, double fallback) const {
    auto it = e.params.find(k);
    if (it == e.params.end()) return fallback;
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size()) throw ConfigError("'" + k + "' needs a number, got '" + it->second + "'");
    return v;
  }
  long count(const std::string& k, long fallback) const {
    double v = num(k, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v)) throw ConfigError("'" + k + "' needs a non-negative integer");
    return static_cast<long>(v);
  }
  bool flag(const std::string& k) const {
    std::string v = str(k, "false");
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("'" + k + "' needs true or false");
  }
  std::vector<double> list(const std::string& k, const std::string& fallback, size_t n) const {
    std::vector<double> out;
    std::string s = str(k, fallback);
    size_t pos = 0;
    while (pos <= s.size()) {
      size_t c = s.find(',', pos);
      std::string part = s.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
      try {
        out.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw ConfigError("'" + k + "' needs " + std::to_string(n) + " numbers");
      }
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    if (out.size() != n) throw ConfigError("'" + k + "' needs " + std::to_string(n) + " numbers");
    return out;
  }
};

FormField dx_form(const QuotientSurface& S) {
  return FormField::from_exprs(S, 1, Parity::even, {Expr::constant(1), Expr::constant(0)});
}

ArcData cut_arc(const ExperimentConfig& cfg, const QuotientSurface& S) {
  std::vector<ArcData> cut = cut_system(S);
  if (cut.empty()) throw SurfaceError("the disk has no cut arc");
  ArcData arc = cut[0];
  arc.eps = cfg.surface.epsilon;
  return arc;
}

struct Lambda {
  FormField form;
  std::vector<Rect> region;
  std::string name;
};

Lambda make_lambda(const ExperimentConfig& cfg, const QuotientSurface& S, const std::string& which) {
  if (which == "dx") return {dx_form(S), {}, "dx"};
  if (which == "pd") {
    ArcData arc = cut_arc(cfg, S);
    return {poincare_dual(S, arc), tube_region(S, arc), "pd"};
  }
  throw ConfigError("lambda must be dx or pd, got '" + which + "'");
}

// ---- generators -----------------------------------------------------------

CircleLift random_lift(Ctx& c) {
  int modes = c.integer(1, 3);
  std::vector<std::pair<double, double>> bc(modes);
  double budget = c.uniform(0.1, 0.6), total = 0;
  for (auto& [b, k] : bc) {
    b = c.uniform(-1, 1);
    k = c.uniform(-1, 1);
    total += std::fabs(b) + std::fabs(k);
  }
  for (auto& [b, k] : bc) {
    b *= budget / total;
    k *= budget / total;
  }
  return CircleLift::fourier(c.uniform(-0.5, 1.5), bc);
}

CircleOneForm random_circle_form(Ctx& c) {
  double a0 = c.uniform(-1.5, 1.5), a1 = c.uniform(-1, 1), b1 = c.uniform(-1, 1), a2 = c.uniform(-0.5, 0.5);
  return CircleOneForm([=](double t) {
    double w = 2 * kPi * t;
    return a0 + a1 * std::cos(w) + b1 * std::sin(w) + a2 * std::cos(2 * w + 0.3);
  });
}

FlowDiffeo random_twist(Ctx& c, const QuotientSurface& S, TwistSite* site = nullptr) {
  double R = c.uniform(0.1, 0.2);
  Vec2 p;
  if (S.strip()) {
    p = {c.uniform(0, 1), c.uniform(-S.w + R + 0.02, S.w - R - 0.02)};
  } else {
    double r = c.uniform(0, 0.95 - R), a = c.uniform(0, 2 * kPi);
    p = {r * std::cos(a), r * std::sin(a)};
  }
  if (site) *site = {p, R};
  return FlowDiffeo::radial_twist(S, p, R, c.uniform(-1.5, 1.5));
}

FlowDiffeo random_rel_map(Ctx& c, const QuotientSurface& S) {
  switch (c.integer(0, 2)) {
    case 0:
      return FlowDiffeo::shear(S, c.uniform(-0.6, 0.6));
    case 1:
      return random_twist(c, S);
    default: {
      FlowDiffeo sh = FlowDiffeo::shear(S, c.uniform(-0.6, 0.6));
      return compose_diffeos(sh, random_twist(c, S));
    }
  }
}

// small boundary field, so the collar flow stays resolvable
Expr random_boundary_field(Ctx& c) {
  double a0 = c.uniform(-0.04, 0.04), a1 = c.uniform(-0.08, 0.08), a2 = c.uniform(-0.06, 0.06),
         a3 = c.uniform(-0.03, 0.03);
  return a0 + a1 * sin(2 * kPi * TH) + a2 * cos(2 * kPi * TH) * (1 + T) + a3 * sin(4 * kPi * TH);
}

FlowDiffeo collar_flow(const QuotientSurface& S, const Expr& xi, int steps = 0) {
  return memoized(flow_map(boundary_extension(S, xi, default_collar_depth(S), default_collar_cutoff()), 1.0, steps));
}

// d theta / dt = xi(theta, t) on [0, 1], solved on its own
double circle_flow(const Expr& xi, double theta0) {
  using namespace boost::numeric::odeint;
  double th = theta0;
  auto rhs = [&](const double& s, double& ds, double t) { ds = xi.eval({0, 0, t, s, 0}); };
  integrate_adaptive(make_controlled(1e-13, 1e-13, runge_kutta_dopri5<double>()), rhs, th, 0.0, 1.0, 1e-3);
  return th;
}

// ---- experiments ----------------------------------------------------------

void run_flux(Ctx& c) {
  QuotientSurface S = c.cfg.surface.surface();
  if (!c.has("map")) throw ConfigError("flux needs map");
  BuiltMap m = build_map(c.cfg, c.str("map", ""));
  Lambda lam = make_lambda(c.cfg, S, c.str("lambda", "dx"));
  FormField eta = standard_primitive(S);
  const QuadratureSpec& q = c.cfg.integrator.quadrature;
  double v = flux_lambda(S, m.map, lam.form, eta, q, lam.region);
  std::optional<double> closed = lam.name == "dx" ? m.flux_dx : m.flux_pd;
  std::string quantity = "flux_" + lam.name;
  if (closed) {
    c.check(quantity, v, *closed, 1e-6, "flux:closed-form");
  } else {
    c.check(quantity, v, flux_lambda(S, m.map, lam.form, eta, q.refined(), lam.region), 1e-6, "flux:refinement");
  }
}

void run_calabi(Ctx& c) {
  QuotientSurface S = c.cfg.surface.surface();
  if (!c.has("map")) throw ConfigError("calabi needs map");
  BuiltMap m = build_map(c.cfg, c.str("map", ""));
  const QuadratureSpec& q = c.cfg.integrator.quadrature;
  if (S.kind == SurfaceKind::disk) {
    if (c.has("patch") || c.has("section")) throw ConfigError("patch and section apply to strips only");
    FormField eta = standard_primitive(S);
    double v = calabi_disk(m.map, eta, q);
    if (m.calabi_disk) {
      c.check("calabi", v, *m.calabi_disk, 1e-6, "calabi:twist-closed-form");
    } else {
      c.check("calabi", v, calabi_disk(m.map, eta, q.refined()), 1e-6, "calabi:refinement");
    }
    return;
  }
  CellGeometry G;
  std::string which = c.str("patch", "U");
  if (which != "U" && which != "V") throw ConfigError("patch must be U or V");
  const Patch& patch = which == "U" ? G.U : G.V;
  double sec = c.num("section", 1);
  if (sec != 1 && sec != -1) throw ConfigError("section must be 1 or -1");
  int e = static_cast<int>(sec);
  FormField eta = m.sites.empty() ? standard_primitive(S) : adapted_primitive(S, m.sites);
  double v = local_calabi(S, m.map, patch, e, eta, q);
  std::string quantity = "calabi_" + which;
  // in U a twist reads with the opposite sign to the disk
  if (m.calabi_disk && which == "U") {
    c.check(quantity, v, -e * *m.calabi_disk, 1e-6, "calabi:twist-closed-form");
  } else {
    c.check(quantity, v, local_calabi(S, m.map, patch, e, eta, q.refined()), 1e-6, "calabi:refinement");
  }
}

void run_swept_area(Ctx& c) {
  QuotientSurface S = c.cfg.surface.surface();
  if (!S.strip()) throw ConfigError("swept-area needs a strip surface");
  std::string fname = c.str("field", "");
  if (fname.empty()) throw ConfigError("swept-area needs field");
  std::string arc_s = c.str("arc", "cut");
  ArcData arc = cut_arc(c.cfg, S);
  if (arc_s != "cut") {
    std::vector<double> v = c.list("arc", "", 4);
    arc.a = {v[0], v[1]};
    arc.b = {v[2], v[3]};
  }
  validate_arc(S, arc);

  std::optional<double> shear_speed;
  std::optional<VectorField> F;
  if (fname.rfind("shear:", 0) == 0) {
    shear_speed = std::stod(fname.substr(6));
    F.emplace(S, *shear_speed * bump(Y), Expr::constant(0), SupportSet::band(S, -0.25, 0.25), "shear field");
  } else {
    auto it = c.cfg.fields.find(fname);
    if (it == c.cfg.fields.end()) throw ConfigError("no field named '" + fname + "'");
    std::vector<double> band = c.list("band", "-0.25,0.25", 2);
    SupportSet support = SupportSet::band(S, band[0], band[1]);
    F.emplace(hamiltonian_field(S, it->second, std::nullopt, support));
    // the band is a claim about the field, so check it
    Rect d = S.domain();
    for (double t : {0.0, 0.5, 1.0})
      for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 64; ++j) {
          Vec2 p{d.x0 + (d.x1 - d.x0) * (i + 0.5) / 32, d.y0 + (d.y1 - d.y0) * (j + 0.5) / 64};
          if (support.contains(S, p)) continue;
          if (norm(F->value(t, p)) > 1e-12) throw InvariantError("field " + fname + " is not zero outside its band");
        }
  }
  F->validate();
  int steps = c.cfg.integrator.steps;
  IsotopyPath iso(*F, 4, steps);
  const QuadratureSpec& q = c.cfg.integrator.quadrature;
  double O = swept_area(S, arc, iso, q);
  FormField eta = standard_primitive(S);
  double flux = flux_lambda(S, memoized(flow_map(*F, 1.0, steps)), poincare_dual(S, arc), eta, q, tube_region(S, arc));
  c.check("swept_area", O, flux, 1e-6, "swept-area:flux");
  if (shear_speed && arc_s == "cut") c.check("swept_area_shear", O, -0.375 * *shear_speed, 1e-6, "swept-area:shear");
}

void run_cocycle(Ctx& c) {
  long triples = c.count("triples", 50), pairs = c.count("pairs", 20);
  const QuadratureSpec& q = c.cfg.integrator.quadrature;
  auto mul = [](const CircleLift& a, const CircleLift& b) { return compose(a, b); };
  for (long i = 0; i < triples; ++i) {
    CircleOneForm phi = random_circle_form(c), psi = random_circle_form(c);
    CircleLift a = random_lift(c), b = random_lift(c), d = random_lift(c);
    auto chi = [&](const CircleLift& g1, const CircleLift& g2) { return euler_cocycle_chi(phi, psi, g1, g2, q); };
    c.check("delta_chi[" + std::to_string(i) + "]", group_coboundary(chi, a, b, d, mul), 0.0, 1e-7,
            "cocycle:delta-chi");
  }
  for (long i = 0; i < pairs; ++i) {
    CircleOneForm phi = random_circle_form(c), psi = random_circle_form(c);
    CircleLift a = random_lift(c), b = random_lift(c);
    c.check("chi_vs_cF[" + std::to_string(i) + "]", euler_cocycle_chi(phi, psi, a, b, q),
            cF_cocycle(phi, psi, a, b, q), 1e-8, "cocycle:chi-equals-cF");
  }
  if (c.flag("rot")) {
    long n = c.count("n_iter", 1000000);
    for (long i = 0; i < pairs; ++i) {
      CircleLift a = random_lift(c).normalized(), b = random_lift(c).normalized();
      double v = translation_number(a, n) + translation_number(b, n) - translation_number(compose(a, b), n);
      c.check("rot_cocycle[" + std::to_string(i) + "]", v, std::round(v), 1e-3, "cocycle:rot-integrality");
    }
  }
}

void run_transgression(Ctx& c) {
  QuotientSurface S = c.cfg.surface.surface();
  if (S.kind != SurfaceKind::mobius) throw ConfigError("transgression needs the Moebius band");
  long pairs = c.count("pairs", 10);
  Lambda lam = make_lambda(c.cfg, S, c.str("lambda", "pd"));
  FormField eta = standard_primitive(S);
  TransgressionOptions base;
  base.lambda_support = lam.region;
  // cycle through pairs with boundary motion on both, one, or neither side
  for (long i = 0; i < pairs; ++i) {
    int kind = static_cast<int>(i % 5);
    TransgressionOptions opt = base;
    std::optional<FlowDiffeo> h1, h2;
    if (kind <= 2) {
      h1 = collar_flow(S, random_boundary_field(c));
      h2 = collar_flow(S, random_boundary_field(c));
    } else if (kind == 3) {
      h1 = collar_flow(S, random_boundary_field(c));
      h2 = random_rel_map(c, S);
      if (c.integer(0, 1)) std::swap(h1, h2);
      opt.surface_spec = {8, 8, 8, false};  // twists need nodes along x too
    } else {
      h1 = random_rel_map(c, S);
      h2 = random_rel_map(c, S);
      opt.surface_spec = {};  // composites of shears and twists want the full rule
    }
    TransgressionReport r = verify_transgression(S, *h1, *h2, lam.form, eta, opt);
    std::string idx = "[" + std::to_string(i) + "]";
    c.check("delta_F" + idx, r.lhs, r.rhs, 2e-5, "transgression:identity");
    // boundary-fixing on both sides: the circle side vanishes identically
    if (kind == 4) c.check("chi_rel" + idx, r.rhs, 0.0, 1e-12, "transgression:rel-pair");
  }
}

void run_cell_division(Ctx& c) {
  QuotientSurface S = c.cfg.surface.surface();
  if (S.kind != SurfaceKind::mobius) throw ConfigError("cell-division needs the Moebius band");
  std::vector<double> center = c.list("center", "0.5,0", 2);
  TwistSite site{{center[0], center[1]}, c.num("radius", 0.15)};
  double target = c.num("target", 0.2);
  CellGeometry G;
  FormField eta = adapted_primitive(S, {site, G.gA, G.gB});
  FlowDiffeo h = calabi_generator(S, site.center, site.radius, target, G.U, G.e_U, eta);
  CellDivision cd = cell_division_split(S, h, {site});
  c.check("cal_U(h)", cd.cal_U_h, target, 1e-6, "cell-division:input");
  c.check("cal_U(u)", cd.cal_U_u, 0.0, 1e-5, "cell-division:u");
  c.check("cal_V(v)", cd.cal_V_v, 0.0, 1e-5, "cell-division:v");
  c.check("composition_residual", cd.composition_residual, 0.0, 1e-5, "cell-division:composition");
  c.check("cal_U(gA)", cd.cal_U_gA, -cd.c, 1e-6, "cell-division:overlap-A");
  c.check("cal_V(gA)", cd.cal_V_gA, -cd.c, 1e-6, "cell-division:overlap-A");
  c.check("cal_U(gB)", cd.cal_U_gB, -cd.c, 1e-6, "cell-division:overlap-B");
  c.check("cal_V(gB)", cd.cal_V_gB, cd.c, 1e-6, "cell-division:overlap-B");
}

void run_flows(Ctx& c) {
  long pairs = c.count("pairs", 3);
  // boundary extensions: area and trace
  int k = 0;
  for (QuotientSurface S : {QuotientSurface::mobius(), QuotientSurface::disk()}) {
    for (long i = 0; i < std::max(1L, pairs / 2); ++i, ++k) {
      Expr xi = random_boundary_field(c);
      FlowDiffeo g = collar_flow(S, xi);
      std::string idx = "[" + std::to_string(k) + "]";
      c.check("extension_det" + idx, area_defect(g, 32), 0.0, 1e-6, "flows:area-preserving");
      CircleLift tr = boundary_trace(g);
      double m = 0;
      for (int j = 0; j < 32; ++j) {
        double th = (j + 0.5) / 32;
        m = std::max(m, std::fabs(tr(th) - circle_flow(xi, th)));
      }
      c.check("extension_trace" + idx, m, 0.0, 1e-6, "flows:boundary-trace");
    }
  }

  QuotientSurface M = QuotientSurface::mobius();
  FormField eta = standard_primitive(M);
  ArcData arc = cut_arc(c.cfg, M);
  std::vector<ArcData> cut{arc};
  // kernel: a disk-supported flow has no flux, the shear does
  Vec2 ctr{0.45, 0.05};
  Expr rho = ((X - ctr.x) * (X - ctr.x) + (Y - ctr.y) * (Y - ctr.y)) / (4 * 0.09);
  Expr H = 0.003 * bump(rho) * (1.0 + 0.5 * sin(3 * X + Y + 1.0) * cos(2 * Y - X));
  FlowDiffeo disk = memoized(flow_map(hamiltonian_field(M, H, std::nullopt, SupportSet::disk(M, ctr, 0.3)), 1.0, 32));
  KernelTest kd = flux_kernel_test(M, disk, cut, eta, c.tol(1e-6), {8, 32, 32, false});
  c.check("kernel_disk_flow", kd.residuals.at(0), 0.0, 1e-6, "flows:kernel");
  KernelTest ks = flux_kernel_test(M, mobius_shear(M, 1.0), cut, eta);
  c.check("kernel_shear", ks.residuals.at(0), -0.375, 1e-6, "flows:kernel");

  // homomorphism properties
  for (QuotientSurface S : {QuotientSurface::mobius(), QuotientSurface::annulus()}) {
    FormField e = standard_primitive(S), dx = dx_form(S);
    for (long i = 0; i < pairs; ++i) {
      FlowDiffeo g = random_rel_map(c, S), h = random_rel_map(c, S);
      double d = flux_lambda(S, compose_diffeos(g, h), dx, e) - flux_lambda(S, g, dx, e) - flux_lambda(S, h, dx, e);
      c.check(std::string("flux_additive_") + kind_name(S.kind) + "[" + std::to_string(i) + "]", d, 0.0, 1e-6,
              "flows:flux-homomorphism");
    }
  }
  QuotientSurface D = QuotientSurface::disk();
  FormField e0 = standard_primitive(D);
  FormField e1 = FormField::from_exprs(D, 1, Parity::odd, {Expr::constant(0), X});
  for (long i = 0; i < pairs; ++i) {
    TwistSite sg;
    FlowDiffeo g = random_twist(c, D, &sg);
    // the second twist overlaps the first
    double R = c.uniform(0.1, 0.2);
    Vec2 ch = sg.center + Vec2{c.uniform(-0.1, 0.1), c.uniform(-0.1, 0.1)};
    if (norm(ch) > 0.95 - R) ch = ((0.95 - R) / norm(ch)) * ch;
    FlowDiffeo h = FlowDiffeo::radial_twist(D, ch, R, c.uniform(-1.5, 1.5));
    double cg = calabi_disk(g, e0);
    double d = calabi_disk(compose_diffeos(g, h), e0) - cg - calabi_disk(h, e0);
    std::string idx = "[" + std::to_string(i) + "]";
    c.check("calabi_additive" + idx, d, 0.0, 1e-6, "flows:calabi-homomorphism");
    c.check("calabi_primitive" + idx, calabi_disk(g, e1), cg, 1e-6, "flows:calabi-primitive");
  }
  // the shear family
  FormField dx = dx_form(M);
  for (double t : {0.25, 1.0, 2.0}) {
    char label[48];
    std::snprintf(label, sizeof label, "shear_flux(t=%g)", t);
    c.check(label, flux_lambda(M, mobius_shear(M, t), dx, eta), 0.375 * t, 1e-6, "flux:shear-family");
  }
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg, const ExperimentSpec& e, const RunOptions& opt) {
  uint64_t seed = opt.seed.value_or(cfg.seed);
  size_t index = 0;
  for (size_t i = 0; i < cfg.experiments.size(); ++i)
    if (cfg.experiments[i].name == e.name) index = i;
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(index)};
  Ctx c{cfg, e, opt, std::mt19937_64(seq), {}};
  auto t0 = std::chrono::steady_clock::now();
  try {
    if (e.type == "flux") run_flux(c);
    else if (e.type == "calabi") run_calabi(c);
    else if (e.type == "swept-area") run_swept_area(c);
    else if (e.type == "cocycle") run_cocycle(c);
    else if (e.type == "transgression") run_transgression(c);
    else if (e.type == "cell-division") run_cell_division(c);
    else if (e.type == "flows") run_flows(c);
    else throw ConfigError("unknown experiment type '" + e.type + "'");
  } catch (const std::exception& err) {
    ReportRow r;
    r.experiment = e.name;
    r.quantity = "error";
    r.anchor = e.type;
    r.tolerance = c.tol(0.0);
    r.error = err.what();
    c.rows.push_back(r);
  }
  if (opt.timing) {
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (ReportRow& r : c.rows) r.timing_ms = ms;
  }
  return c.rows;
}

std::vector<ReportRow> run_all(const ExperimentConfig& cfg, const RunOptions& opt) {
  std::vector<std::vector<ReportRow>> parts(cfg.experiments.size());
  tbb::task_arena arena(std::max(1, opt.jobs));
  arena.execute([&] {
    tbb::parallel_for(size_t(0), parts.size(), [&](size_t i) { parts[i] = run_experiment(cfg, cfg.experiments[i], opt); });
  });
  std::vector<ReportRow> rows;
  for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

}  // namespace fluxlab::cli
