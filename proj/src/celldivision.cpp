#include "fluxlab/celldivision.hpp"

#include <cmath>
#include <sstream>

namespace fluxlab {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

bool inside_open(const Rect& r, Vec2 p) { return r.contains_open(p); }

// point of the band (fundamental coordinates) in V's cover coordinates, if it lies in V
bool to_patch(const QuotientSurface& S, const Patch& P, Vec2 p, Vec2& q) {
  for (int k = -1; k <= 2; ++k) {
    Vec2 c = S.tau(p, k);
    if (inside_open(P.rect, c)) {
      q = c;
      return true;
    }
  }
  return false;
}

}  // namespace

FlowDiffeo calabi_generator(const QuotientSurface& S, Vec2 center, double radius, double c, const Patch& patch,
                            int e_sign, const FormField& eta, const QuadratureSpec& spec) {
  if (c == 0.0) return FlowDiffeo::identity(S);
  // measure where the patch sees the twist
  Vec2 base = center;
  if (S.strip()) {
    int k = 0;
    base = S.reduce(center, k);
  }
  double unit = local_calabi(S, FlowDiffeo::radial_twist(S, base, radius, 1.0), patch, e_sign, eta, spec);
  if (unit == 0.0 || !std::isfinite(unit)) throw InvariantError("unit twist has no Calabi invariant");
  double t = c / unit;
  if (std::fabs(t) > kMaxGeneratorTime) {
    throw InvariantError("Calabi target " + fmt(c) + " needs twist time " + fmt(t) + " at radius " + fmt(radius) +
                         "; use a larger radius");
  }
  return FlowDiffeo::radial_twist(S, base, radius, t);
}

void validate_cell_geometry(const QuotientSurface& S, const CellGeometry& G) {
  if (S.kind != SurfaceKind::mobius) throw GeometryError("cell division is set up on the Moebius band");
  auto fail = [](const std::string& what) { throw GeometryError("cell geometry: " + what); };
  // 1. U and V are embedded disks: rectangles shorter than the period
  for (const Patch* P : {&G.U, &G.V}) {
    if (P->rect.width() > 1.0 || P->rect.empty() || P->rect.y0 < -S.w || P->rect.y1 > S.w) {
      fail("condition 1 (" + P->name + " is not an embedded disk)");
    }
  }
  // 2. U cap V is exactly A union B, A and B disjoint
  if (G.A.rect.x1 > G.B.rect.x0) fail("condition 2 (A and B overlap)");
  const int n = 96;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 p{(i + 0.5) / n, -S.w + 2 * S.w * (j + 0.5) / n};
      Vec2 q;
      bool inU = inside_open(G.U.rect, p);
      bool inV = to_patch(S, G.V, p, q);
      bool inAB = inV && (inside_open(G.A.rect, q) || inside_open(G.B.rect, q));
      if ((inU && inV) != inAB && std::fabs(q.x - 1.0) > 1e-9) fail("condition 2 (U cap V differs from A u B)");
    }
  // 3. section signs: V's chart is the identity on A and tau on B
  int jac_A = 1, jac_B = S.tau_jacobian(1).det() > 0 ? 1 : -1;
  if (G.e_U * jac_A != G.e_V) fail("condition 3 (e_U != e_V on A)");
  if (G.e_U * jac_B != -G.e_V) fail("condition 3 (e_U != -e_V on B)");
  // 4. U u V covers the band and V crosses the seam (the homeomorphism type is not tested)
  if (!(G.V.rect.x0 < 1.0 && G.V.rect.x1 > 1.0)) fail("condition 4 (V does not cross the seam)");
  for (const TwistSite* s : {&G.gA, &G.gB}) {
    Vec2 q;
    if (!to_patch(S, G.V, s->center, q)) fail("generator disk center outside V");
    Rect disk{q.x - s->radius, q.x + s->radius, q.y - s->radius, q.y + s->radius};
    bool inA = disk.x0 > G.A.rect.x0 && disk.x1 < G.A.rect.x1 && disk.y0 > G.A.rect.y0 && disk.y1 < G.A.rect.y1;
    bool inB = disk.x0 > G.B.rect.x0 && disk.x1 < G.B.rect.x1 && disk.y0 > G.B.rect.y0 && disk.y1 < G.B.rect.y1;
    if (s == &G.gA ? !inA : !inB) fail("generator disk not inside its overlap piece");
  }
}

CellDivision cell_division_split(const QuotientSurface& S, const FlowDiffeo& h, const std::vector<TwistSite>& h_sites,
                                 const CellGeometry& G, const QuadratureSpec& spec) {
  validate_cell_geometry(S, G);
  // h supported in U away from the closure of V
  if (h.support().is_everywhere() || !h.rel_boundary()) {
    throw SupportError("cell division needs a disk-supported map; " + h.provenance() + " is not");
  }
  for (const Rect& r : h.support().rects(S)) {
    Rect in_U = intersect(r, G.U.rect);
    bool clear_of_V = r.x0 > G.B.rect.x1 - 1.0 && r.x1 < G.A.rect.x0;
    if (in_U.x0 != r.x0 || in_U.x1 != r.x1 || in_U.y0 != r.y0 || in_U.y1 != r.y1 || !clear_of_V) {
      throw SupportError("support of " + h.provenance() + " must lie in U away from V");
    }
  }
  std::vector<TwistSite> sites = h_sites;
  sites.push_back(G.gA);
  sites.push_back(G.gB);
  FormField eta = adapted_primitive(S, sites);

  KernelTest k = flux_kernel_test(S, h, cut_system(S), eta);
  if (!k.in_kernel) throw InvariantError("cell division needs zero flux; flux of " + h.provenance() + " is " + fmt(k.residuals.at(0)));

  CellDivision out{h, FlowDiffeo::identity(S), FlowDiffeo::identity(S), FlowDiffeo::identity(S), G};
  out.cal_U_h = local_calabi(S, h, G.U, G.e_U, eta, spec);
  out.c = out.cal_U_h / 2;
  if (std::fabs(out.cal_U_h) < 1e-12) {
    out.trivial = true;
    return out;
  }
  out.gA = calabi_generator(S, G.gA.center, G.gA.radius, -out.c, G.U, G.e_U, eta, spec);
  out.gB = calabi_generator(S, G.gB.center, G.gB.radius, -out.c, G.U, G.e_U, eta, spec);
  out.u = compose_diffeos(h, compose_diffeos(out.gA, out.gB));
  out.v = compose_diffeos(invert_diffeo(out.gB), invert_diffeo(out.gA));

  out.cal_U_gA = local_calabi(S, out.gA, G.U, G.e_U, eta, spec);
  out.cal_U_gB = local_calabi(S, out.gB, G.U, G.e_U, eta, spec);
  out.cal_V_gA = local_calabi(S, out.gA, G.V, G.e_V, eta, spec);
  out.cal_V_gB = local_calabi(S, out.gB, G.V, G.e_V, eta, spec);
  out.cal_U_u = local_calabi(S, out.u, G.U, G.e_U, eta, spec);
  out.cal_V_v = local_calabi(S, out.v, G.V, G.e_V, eta, spec);

  FlowDiffeo uv = compose_diffeos(out.u, out.v);
  const int n = 64;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 p{(i + 0.5) / n, -S.w + 2 * S.w * (j + 0.5) / n};
      out.composition_residual = std::fmax(out.composition_residual, norm(uv.map(p) - h.map(p)));
    }
  return out;
}

}  // namespace fluxlab
