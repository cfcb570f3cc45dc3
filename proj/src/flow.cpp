#include "fluxlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <unordered_map>
#include <sstream>

#include "fluxlab/bump.hpp"

namespace fluxlab {

namespace {

constexpr double kTiny = 1e-12;

// quasi-random points in [0,1)^2
Vec2 sample(int i) {
  double a = std::fmod(0.5 + i * 0.6180339887498949, 1.0);
  double b = std::fmod(0.5 + i * 0.7548776662466927, 1.0);
  return {a, b};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

bool overlaps(const Rect& a, const Rect& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

// merge overlapping rectangles into hulls until the list is disjoint
std::vector<Rect> make_disjoint(std::vector<Rect> rs) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < rs.size() && !changed; ++i) {
      for (size_t j = i + 1; j < rs.size(); ++j) {
        if (overlaps(rs[i], rs[j])) {
          rs[i] = hull(rs[i], rs[j]);
          rs.erase(rs.begin() + j);
          changed = true;
          break;
        }
      }
    }
  }
  return rs;
}

// a minus b as up to four rectangles
void subtract(const Rect& a, const Rect& b, std::vector<Rect>& out) {
  if (!overlaps(a, b)) {
    out.push_back(a);
    return;
  }
  auto keep = [&](Rect r) {
    if (r.x1 - r.x0 > kTiny && r.y1 - r.y0 > kTiny) out.push_back(r);
  };
  double x0 = std::fmax(a.x0, b.x0), x1 = std::fmin(a.x1, b.x1);
  keep({a.x0, x0, a.y0, a.y1});
  keep({x1, a.x1, a.y0, a.y1});
  keep({x0, x1, a.y0, std::fmax(a.y0, b.y0)});
  keep({x0, x1, std::fmin(a.y1, b.y1), a.y1});
}

void add_box(const QuotientSurface& S, Rect box, std::vector<Rect>& out) {
  if (!S.strip()) {
    Rect r = intersect(box, S.domain());
    if (!r.empty()) out.push_back(r);
    return;
  }
  auto clip = [&](Rect r) {
    r.y0 = std::fmax(r.y0, -S.w);
    r.y1 = std::fmin(r.y1, S.w);
    r.x0 = std::fmax(r.x0, 0.0);
    r.x1 = std::fmin(r.x1, 1.0);
    if (!r.empty()) out.push_back(r);
  };
  double f = S.flip();
  Rect flipped{0, 0, std::fmin(f * box.y0, f * box.y1), std::fmax(f * box.y0, f * box.y1)};
  clip(box);
  if (box.x0 < 0.0) clip({box.x0 + 1.0, 1.0, flipped.y0, flipped.y1});
  if (box.x1 > 1.0) clip({0.0, box.x1 - 1.0, flipped.y0, flipped.y1});
}

}  // namespace

// ---------------------------------------------------------------------------

SupportSet SupportSet::everywhere() {
  SupportSet s;
  s.everywhere_ = true;
  s.interior_ = false;
  return s;
}

SupportSet SupportSet::none() { return SupportSet{}; }

SupportSet SupportSet::disk(const QuotientSurface& S, Vec2 c, double r) {
  SupportSet s;
  if (S.strip()) {
    int k;
    c = S.reduce(c, k);
    s.interior_ = std::fabs(c.y) + r < S.w;
  } else {
    s.interior_ = norm(c) + r < 1.0;
  }
  add_box(S, {c.x - r, c.x + r, c.y - r, c.y + r}, s.rects_);
  s.boxes_ = s.rects_;
  s.rects_ = make_disjoint(s.rects_);
  return s;
}

SupportSet SupportSet::collar(const QuotientSurface& S, double depth) {
  SupportSet s;
  s.interior_ = false;
  if (S.strip()) {
    s.rects_.push_back({0.0, 1.0, -S.w, -S.w + depth});
    s.rects_.push_back({0.0, 1.0, S.w - depth, S.w});
    s.rects_ = make_disjoint(s.rects_);
    s.boxes_ = s.rects_;
  } else {
    s.disk_collar_ = depth;
  }
  return s;
}

SupportSet SupportSet::band(const QuotientSurface& S, double y0, double y1) {
  SupportSet s;
  s.interior_ = y0 > -S.w && y1 < S.w;
  s.rects_.push_back({0.0, 1.0, std::fmax(y0, -S.w), std::fmin(y1, S.w)});
  s.boxes_ = s.rects_;
  return s;
}

bool SupportSet::contains(const QuotientSurface& S, Vec2 p) const {
  if (everywhere_) return true;
  if (disk_collar_ > 0.0 && norm(p) >= 1.0 - disk_collar_ - kTiny) return true;
  int k;
  Vec2 q = S.reduce(p, k);
  for (const Rect& r : rects_) {
    if (q.x >= r.x0 - kTiny && q.x <= r.x1 + kTiny && q.y >= r.y0 - kTiny && q.y <= r.y1 + kTiny) {
      return true;
    }
  }
  // x = 1 is x = 0 seen from the other side
  if (S.strip() && q.x < kTiny) {
    Vec2 alt{1.0, S.flip() * q.y};
    for (const Rect& r : rects_) {
      if (r.x1 >= 1.0 - kTiny && alt.y >= r.y0 - kTiny && alt.y <= r.y1 + kTiny) return true;
    }
  }
  return false;
}

std::vector<Rect> SupportSet::rects(const QuotientSurface& S) const {
  if (everywhere_ || disk_collar_ > 0.0) return {S.domain()};
  return rects_;
}

std::vector<Rect> SupportSet::pieces(const QuotientSurface& S) const {
  if (everywhere_ || disk_collar_ > 0.0) return {S.domain()};
  std::vector<Rect> order = boxes_;
  std::stable_sort(order.begin(), order.end(), [](const Rect& a, const Rect& b) {
    return (a.x1 - a.x0) * (a.y1 - a.y0) < (b.x1 - b.x0) * (b.y1 - b.y0);
  });
  std::vector<Rect> out;
  for (const Rect& r : order) {
    std::vector<Rect> rest{r};
    for (const Rect& taken : out) {
      std::vector<Rect> next;
      for (const Rect& q : rest) subtract(q, taken, next);
      rest.swap(next);
    }
    out.insert(out.end(), rest.begin(), rest.end());
  }
  return out;
}

SupportSet SupportSet::unite(const SupportSet& a, const SupportSet& b) {
  if (a.everywhere_ || b.everywhere_) return everywhere();
  SupportSet s;
  s.interior_ = a.interior_ && b.interior_;
  s.disk_collar_ = std::fmax(a.disk_collar_, b.disk_collar_);
  s.rects_ = a.rects_;
  s.rects_.insert(s.rects_.end(), b.rects_.begin(), b.rects_.end());
  s.rects_ = make_disjoint(s.rects_);
  s.boxes_ = a.boxes_;
  s.boxes_.insert(s.boxes_.end(), b.boxes_.begin(), b.boxes_.end());
  return s;
}

// ---------------------------------------------------------------------------

VectorField::VectorField(const QuotientSurface& S, Expr X1, Expr X2, SupportSet support,
                         std::string provenance)
    : surface_(S), x1_(std::move(X1)), x2_(std::move(X2)), support_(std::move(support)),
      provenance_(std::move(provenance)) {
  prog_ = std::make_shared<Program>(std::vector<Expr>{
      x1_, x2_, differentiate(x1_, Var::x), differentiate(x1_, Var::y), differentiate(x2_, Var::x),
      differentiate(x2_, Var::y)});
}

void VectorField::eval(double t, Vec2 p, Vec2& X, Mat2& DX) const {
  int k = 0;
  Vec2 q = surface_.reduce(p, k);
  double o[6];
  prog_->run({q.x, q.y, t, 0.0, 0.0}, o);
  X = {o[0], o[1]};
  DX = {o[2], o[3], o[4], o[5]};
  if (k % 2 != 0 && surface_.flip() < 0) {
    X.y = -X.y;
    DX.b = -DX.b;
    DX.c = -DX.c;
  }
}

Vec2 VectorField::value(double t, Vec2 p) const {
  Vec2 X;
  Mat2 DX;
  eval(t, p, X, DX);
  return X;
}

Expr VectorField::divergence() const { return differentiate(x1_, Var::x) + differentiate(x2_, Var::y); }

namespace {

Vec2 domain_sample(const QuotientSurface& S, int i) {
  Vec2 u = sample(i);
  if (S.strip()) return {u.x, -S.w + 2 * S.w * u.y};
  double r = std::sqrt(u.x), a = 2 * kPi * u.y;
  return {r * std::cos(a), r * std::sin(a)};
}

const double kSampleTimes[] = {0.0, 0.37, 1.0};

}  // namespace

void VectorField::check_divergence_free(int samples, double tol) const {
  for (double t : kSampleTimes) {
    for (int i = 0; i < samples; ++i) {
      Vec2 p = domain_sample(surface_, i);
      double o[6];
      prog_->run({p.x, p.y, t, 0.0, 0.0}, o);
      double scale = std::fmax(1.0, std::fabs(o[2]) + std::fabs(o[5]));
      double div = o[2] + o[5];
      if (!std::isfinite(div) || std::fabs(div) > tol * scale) {
        throw FlowError("field " + provenance_ + " has divergence " + fmt(div) + " at (" + fmt(p.x) +
                        ", " + fmt(p.y) + "), t = " + fmt(t));
      }
    }
  }
}

void VectorField::check_tangency(int samples, double tol) const {
  for (double t : kSampleTimes) {
    for (int i = 0; i < samples; ++i) {
      double u = (i + 0.5) / samples;
      if (surface_.strip()) {
        for (double y : {-surface_.w, surface_.w}) {
          double o[6];
          prog_->run({u, y, t, 0.0, 0.0}, o);
          if (!(std::fabs(o[1]) <= tol)) {
            throw TangencyError("field " + provenance_ + " is not tangent to the boundary at (" + fmt(u) +
                                ", " + fmt(y) + "), t = " + fmt(t) + ": X2 = " + fmt(o[1]));
          }
        }
      } else {
        double a = 2 * kPi * u;
        Vec2 p{std::cos(a), std::sin(a)};
        double o[6];
        prog_->run({p.x, p.y, t, 0.0, 0.0}, o);
        double n = o[0] * p.x + o[1] * p.y;
        if (!(std::fabs(n) <= tol)) {
          throw TangencyError("field " + provenance_ + " is not tangent to the unit circle at angle " +
                              fmt(u) + ", t = " + fmt(t) + ": X.n = " + fmt(n));
        }
      }
    }
  }
}

void VectorField::check_equivariance(int samples, double tol) const {
  if (!surface_.strip()) return;
  const double f = surface_.flip();
  for (double t : kSampleTimes) {
    for (int i = 0; i < samples; ++i) {
      double y = -surface_.w + 2 * surface_.w * (i + 0.5) / samples;
      double a[6], b[6];
      prog_->run({0.0, y, t, 0.0, 0.0}, a);
      prog_->run({1.0, f * y, t, 0.0, 0.0}, b);
      if (!(std::fabs(b[0] - a[0]) <= tol && std::fabs(b[1] - f * a[1]) <= tol)) {
        throw SeamError("field " + provenance_ + " is not equivariant under the seam map at y = " + fmt(y) +
                        ", t = " + fmt(t));
      }
    }
  }
}

void VectorField::validate() const {
  check_divergence_free();
  check_tangency();
  check_equivariance();
}

VectorField hamiltonian_field(const QuotientSurface& S, const Expr& H, const std::optional<Expr>& cutoff,
                              SupportSet support) {
  Expr h = cutoff ? H * *cutoff : H;
  VectorField X(S, differentiate(h, Var::y), -differentiate(h, Var::x), std::move(support),
                "hamiltonian[" + to_string(h) + "]");
  X.validate();
  return X;
}

// 1 on [0, 0.05], 0 on [0.95, 1]; the long ramp keeps the collar shear mild
Expr default_collar_cutoff() { return bump((Expr::variable(Var::s) + 0.85) / 7.2); }

double default_collar_depth(const QuotientSurface& S) { return S.strip() ? S.w / 4.0 : 0.5; }

VectorField boundary_extension(const QuotientSurface& S, const Expr& xi, double depth, const Expr& mu) {
  if (S.kind == SurfaceKind::annulus) {
    throw FlowError("boundary extension needs a single boundary circle (mobius or disk)");
  }
  if (!(depth > 0.0) || depth > (S.strip() ? S.w : 1.0)) throw FlowError("collar depth out of range");
  if (depends_on(mu, Var::x) || depends_on(mu, Var::y) || depends_on(mu, Var::theta)) {
    throw FlowError("collar cutoff must be a function of s only");
  }
  const double smax = S.strip() ? 2.0 * S.w / depth : 1.0 / depth;
  for (int i = 0; i <= 64; ++i) {
    double s = 0.05 * i / 64.0;
    if (std::fabs(mu.eval({0, 0, 0, 0, s}) - 1.0) > 1e-12) {
      throw FlowError("collar cutoff " + to_string(mu) + " is not 1 near s = 0 (s = " + fmt(s) + ")");
    }
    double s1 = 1.0 + (smax - 1.0) * i / 64.0;
    if (std::fabs(mu.eval({0, 0, 0, 0, s1})) > 1e-12) {
      throw FlowError("collar cutoff " + to_string(mu) + " is not 0 for s >= 1 (s = " + fmt(s1) + ")");
    }
  }
  const Expr x = Expr::variable(Var::x), y = Expr::variable(Var::y);
  const Expr w = Expr::constant(S.w);
  Expr H;
  std::string prov;
  if (S.strip()) {
    // top edge runs at speed 2 xi(x/2); the bottom edge is its deck image
    Expr top_gap = w - y, bot_gap = w + y;
    Expr top = -(top_gap * substitute(mu, Var::s, top_gap / depth) * 2.0 *
                 substitute(xi, Var::theta, x / 2.0));
    Expr bot = bot_gap * substitute(mu, Var::s, bot_gap / depth) * 2.0 *
               substitute(xi, Var::theta, (x - 1.0) / 2.0);
    H = top + bot;
  } else {
    Expr r2 = x * x + y * y;
    Expr r = pow(r2, Expr::constant(0.5));
    Expr theta = atan2(y, x) / (2.0 * Expr::pi());
    H = Expr::pi() * substitute(xi, Var::theta, theta) * (1.0 - r2) *
        substitute(mu, Var::s, (1.0 - r) / depth);
  }
  VectorField X(S, differentiate(H, Var::y), -differentiate(H, Var::x), SupportSet::collar(S, depth),
                "extension[" + to_string(xi) + "]");
  if (S.strip()) {
    X.validate();
  } else {
    // the angle is singular at the origin, which lies outside the collar
    X.check_tangency();
  }
  return X;
}

// ---------------------------------------------------------------------------

FlowDiffeo::FlowDiffeo(const QuotientSurface& S, std::shared_ptr<const Impl> impl, SupportSet support,
                       std::string provenance)
    : surface_(S), impl_(std::move(impl)), support_(std::move(support)), provenance_(std::move(provenance)) {}

PointMap FlowDiffeo::as_map() const {
  auto impl = impl_;
  return [impl](Vec2 p) { return impl->jet(p, nullptr); };
}

namespace {

struct IdentityImpl : FlowDiffeo::Impl {
  PointJet jet(Vec2 p, double*) const override { return {p, Mat2::identity()}; }
  std::shared_ptr<const Impl> inverse() const override { return std::make_shared<IdentityImpl>(); }
};

struct ShearImpl : FlowDiffeo::Impl {
  double t;
  std::shared_ptr<Program> prog;  // b, b'; null means bump

  PointJet jet(Vec2 p, double* winding) const override {
    double b, db;
    if (prog) {
      double o[2];
      prog->run({0.0, p.y, 0.0, 0.0, 0.0}, o);
      b = o[0];
      db = o[1];
    } else {
      b = bump(p.y);
      db = bump_derivative(p.y, 1);
    }
    if (winding) *winding = 0.0;
    return {{p.x + t * b, p.y}, {1.0, t * db, 0.0, 1.0}};
  }
  std::shared_ptr<const Impl> inverse() const override {
    auto s = std::make_shared<ShearImpl>(*this);
    s->t = -t;
    return s;
  }
};

struct TwistImpl : FlowDiffeo::Impl {
  QuotientSurface S;
  Vec2 c;
  double R, t;
  std::shared_ptr<Program> prog;  // K', K'' in s

  // twist about c0 at a point of the cover
  PointJet local(Vec2 q, Vec2 c0, double sense) const {
    Vec2 d = q - c0;
    double rho = dot(d, d) / (R * R);
    if (rho >= 1.0) return {q, Mat2::identity()};
    double o[2];
    prog->run({0.0, 0.0, 0.0, 0.0, rho}, o);
    double th = -2.0 * t * sense * o[0];
    double k = -2.0 * t * sense * o[1] * 2.0 / (R * R);
    Vec2 grad = k * d;
    double cs = std::cos(th), sn = std::sin(th);
    Mat2 rot{cs, -sn, sn, cs};
    Vec2 v{-sn * d.x - cs * d.y, cs * d.x - sn * d.y};
    Mat2 J{rot.a + v.x * grad.x, rot.b + v.x * grad.y, rot.c + v.y * grad.x, rot.d + v.y * grad.y};
    return {c0 + rot * d, J};
  }

  PointJet jet(Vec2 p, double* winding) const override {
    if (winding) *winding = 0.0;
    if (!S.strip()) {
      PointJet j = local(p, c, 1.0);
      if (winding) *winding = std::atan2(cross(p, j.p), dot(p, j.p)) / (2 * kPi);
      return j;
    }
    int k;
    Vec2 q = S.reduce(p, k);
    PointJet out{q, Mat2::identity()};
    for (int j = -1; j <= 1; ++j) {
      Vec2 cj = S.tau(c, j);
      Vec2 d = q - cj;
      if (dot(d, d) >= R * R) continue;
      // the deck image of the twist turns the other way when tau reverses orientation
      double sense = (j % 2 != 0) ? S.flip() : 1.0;
      out = local(q, cj, sense);
      break;
    }
    Mat2 D = S.tau_jacobian(k);
    return {S.tau(out.p, k), D * out.J * D};
  }
  std::shared_ptr<const Impl> inverse() const override {
    auto s = std::make_shared<TwistImpl>(*this);
    s->t = -t;
    return s;
  }
};

struct OdeImpl : FlowDiffeo::Impl {
  VectorField X;
  double t0, t1;
  int steps;

  OdeImpl(VectorField f, double a, double b, int n) : X(std::move(f)), t0(a), t1(b), steps(n) {}

  PointJet run(Vec2 p, int n, double* winding) const {
    if (winding) *winding = 0.0;
    if (!X.support().contains(X.surface(), p)) return {p, Mat2::identity()};
    const double h = (t1 - t0) / n;
    Mat2 J = Mat2::identity();
    Vec2 F;
    Mat2 DF;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      double t = t0 + i * h;
      X.eval(t, p, F, DF);
      Vec2 k1 = F;
      Mat2 K1 = DF * J;
      Vec2 p2 = p + (0.5 * h) * k1;
      Mat2 J2 = J + (0.5 * h) * K1;
      X.eval(t + 0.5 * h, p2, F, DF);
      Vec2 k2 = F;
      Mat2 K2 = DF * J2;
      Vec2 p3 = p + (0.5 * h) * k2;
      Mat2 J3 = J + (0.5 * h) * K2;
      X.eval(t + 0.5 * h, p3, F, DF);
      Vec2 k3 = F;
      Mat2 K3 = DF * J3;
      Vec2 p4 = p + h * k3;
      Mat2 J4 = J + h * K3;
      X.eval(t + h, p4, F, DF);
      Vec2 k4 = F;
      Mat2 K4 = DF * J4;
      Vec2 next = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      J = J + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
      if (winding) acc += std::atan2(cross(p, next), dot(p, next));
      p = next;
    }
    if (!X.surface().inside(p, 1e-6) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainExit("trajectory of " + X.provenance() + " left the surface at (" + fmt(p.x) + ", " +
                       fmt(p.y) + ")");
    }
    if (winding) *winding = acc / (2 * kPi);
    return {p, J};
  }

  PointJet jet(Vec2 p, double* winding) const override { return run(p, steps, winding); }
  std::shared_ptr<const Impl> inverse() const override {
    return std::make_shared<OdeImpl>(X, t1, t0, steps);
  }
  double step_error(Vec2 p) const override { return norm(run(p, steps, nullptr).p - run(p, 2 * steps, nullptr).p); }
};

struct CompositeImpl : FlowDiffeo::Impl {
  std::shared_ptr<const Impl> g, h;  // g o h

  PointJet jet(Vec2 p, double* winding) const override {
    double w1 = 0.0, w2 = 0.0;
    PointJet a = h->jet(p, winding ? &w1 : nullptr);
    PointJet b = g->jet(a.p, winding ? &w2 : nullptr);
    if (winding) *winding = w1 + w2;
    return {b.p, b.J * a.J};
  }
  std::shared_ptr<const Impl> inverse() const override {
    auto c = std::make_shared<CompositeImpl>();
    c->g = h->inverse();
    c->h = g->inverse();
    return c;
  }
  double step_error(Vec2 p) const override {
    return h->step_error(p) + g->step_error(h->jet(p, nullptr).p);
  }
};

}  // namespace

FlowDiffeo FlowDiffeo::identity(const QuotientSurface& S) {
  return FlowDiffeo(S, std::make_shared<IdentityImpl>(), SupportSet::none(), "id");
}

Expr default_twist_profile() {
  Expr s = Expr::variable(Var::s);
  return pow(1.0 - s, Expr::constant(8)) / 8.0;
}

FlowDiffeo FlowDiffeo::shear(const QuotientSurface& S, double t, const std::optional<Expr>& profile) {
  auto impl = std::make_shared<ShearImpl>();
  impl->t = t;
  SupportSet support = SupportSet::band(S, -0.25, 0.25);
  std::string prov = "shear(t=" + fmt(t) + ")";
  if (profile) {
    if (depends_on(*profile, Var::x) || depends_on(*profile, Var::t)) {
      throw FlowError("shear profile must depend on y only");
    }
    impl->prog = std::make_shared<Program>(std::vector<Expr>{*profile, differentiate(*profile, Var::y)});
    support = SupportSet::everywhere();
    prov = "shear(t=" + fmt(t) + ", b=" + to_string(*profile) + ")";
    if (S.kind == SurfaceKind::mobius) {
      for (int i = 0; i <= 64; ++i) {
        double y = S.w * i / 64.0;
        if (std::fabs((*profile)(0, y) - (*profile)(0, -y)) > 1e-12) {
          throw SeamError("shear profile must be even on the Moebius band");
        }
      }
    }
  }
  if (t == 0.0) return identity(S);
  return FlowDiffeo(S, impl, support, prov);
}

FlowDiffeo FlowDiffeo::radial_twist(const QuotientSurface& S, Vec2 center, double radius, double t,
                                    const std::optional<Expr>& profile) {
  if (!(radius > 0.0)) throw FlowError("twist radius must be positive");
  if (S.strip() && 2 * radius >= 1.0) throw FlowError("twist disk overlaps its deck image");
  Expr K = profile ? *profile : default_twist_profile();
  Expr dK = differentiate(K, Var::s);
  auto impl = std::make_shared<TwistImpl>();
  impl->S = S;
  int k;
  impl->c = S.reduce(center, k);
  impl->R = radius;
  impl->t = t;
  impl->prog = std::make_shared<Program>(std::vector<Expr>{dK, differentiate(dK, Var::s)});
  std::string prov = "twist(c=(" + fmt(center.x) + ", " + fmt(center.y) + "), R=" + fmt(radius) +
                     ", t=" + fmt(t) + ")";
  return FlowDiffeo(S, impl, SupportSet::disk(S, center, radius), prov);
}

FlowDiffeo mobius_shear(const QuotientSurface& S, double t) {
  if (S.kind != SurfaceKind::mobius) throw FlowError("mobius_shear needs the Moebius band");
  return FlowDiffeo::shear(S, t);
}

int default_steps(double duration) { return std::max(1, static_cast<int>(std::ceil(256.0 * std::fabs(duration) - 1e-9))); }

FlowDiffeo flow_between(const VectorField& X, double t0, double t1, int steps) {
  if (steps <= 0) steps = default_steps(t1 - t0);
  auto impl = std::make_shared<OdeImpl>(X, t0, t1, steps);
  return FlowDiffeo(X.surface(), impl, X.support(),
                    "flow[" + X.provenance() + ", " + fmt(t0) + " -> " + fmt(t1) + "]");
}

FlowDiffeo flow_map(const VectorField& X, double t_end, int steps) { return flow_between(X, 0.0, t_end, steps); }

FlowDiffeo compose_diffeos(const FlowDiffeo& g, const FlowDiffeo& h) {
  if (g.surface().kind != h.surface().kind || g.surface().w != h.surface().w) {
    throw FlowError("cannot compose maps of different surfaces");
  }
  auto impl = std::make_shared<CompositeImpl>();
  impl->g = g.impl();
  impl->h = h.impl();
  return FlowDiffeo(g.surface(), impl, SupportSet::unite(g.support(), h.support()),
                    "(" + g.provenance() + ") o (" + h.provenance() + ")");
}

FlowDiffeo invert_diffeo(const FlowDiffeo& g) {
  return FlowDiffeo(g.surface(), g.impl()->inverse(), g.support(), "(" + g.provenance() + ")^-1");
}

namespace {

struct MemoImpl : FlowDiffeo::Impl {
  struct KeyHash {
    size_t operator()(const std::pair<uint64_t, uint64_t>& k) const {
      return std::hash<uint64_t>()(k.first * 0x9E3779B97F4A7C15ull ^ k.second);
    }
  };
  std::shared_ptr<const FlowDiffeo::Impl> inner;
  mutable std::mutex lock;
  mutable std::unordered_map<std::pair<uint64_t, uint64_t>, PointJet, KeyHash> seen;

  explicit MemoImpl(std::shared_ptr<const FlowDiffeo::Impl> g) : inner(std::move(g)) {}

  PointJet jet(Vec2 p, double* winding) const override {
    if (winding) return inner->jet(p, winding);
    std::pair<uint64_t, uint64_t> key;
    std::memcpy(&key.first, &p.x, sizeof(double));
    std::memcpy(&key.second, &p.y, sizeof(double));
    {
      std::lock_guard<std::mutex> g(lock);
      auto it = seen.find(key);
      if (it != seen.end()) return it->second;
    }
    PointJet j = inner->jet(p, nullptr);
    std::lock_guard<std::mutex> g(lock);
    seen.emplace(key, j);
    return j;
  }
  std::shared_ptr<const Impl> inverse() const override { return inner->inverse(); }
  double step_error(Vec2 p) const override { return inner->step_error(p); }
};

}  // namespace

FlowDiffeo memoized(const FlowDiffeo& g) {
  return FlowDiffeo(g.surface(), std::make_shared<MemoImpl>(g.impl()), g.support(), g.provenance());
}

CircleLift boundary_trace(const FlowDiffeo& g) {
  const QuotientSurface S = g.surface();
  if (S.kind == SurfaceKind::annulus) {
    throw FlowError("the annulus has two boundary circles; boundary_trace needs mobius or disk");
  }
  auto impl = g.impl();
  CircleLift lift = [&]() {
    if (S.strip()) {
      return CircleLift([impl, S](double th) { return impl->jet(boundary_point(S, th), nullptr).p.x / 2.0; },
                        [impl, S](double th) { return impl->jet(boundary_point(S, th), nullptr).J.a; },
                        "trace[" + g.provenance() + "]");
    }
    return CircleLift(
        [impl, S](double th) {
          double w = 0.0;
          impl->jet(boundary_point(S, th), &w);
          return th + w;
        },
        [impl, S](double th) {
          PointJet j = impl->jet(boundary_point(S, th), nullptr);
          Vec2 v = j.J * boundary_velocity(S, th);
          return cross(j.p, v) / dot(j.p, j.p) / (2 * kPi);
        },
        "trace[" + g.provenance() + "]");
  }();
  lift.validate();
  return lift;
}

double area_defect(const FlowDiffeo& g, int n) {
  const QuotientSurface& S = g.surface();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec2 p;
      if (S.strip()) {
        p = {(i + 0.5) / n, -S.w + 2 * S.w * (j + 0.5) / n};
      } else {
        p = {-1.0 + 2.0 * (i + 0.5) / n, -1.0 + 2.0 * (j + 0.5) / n};
        if (norm(p) >= 1.0) continue;
      }
      worst = std::fmax(worst, std::fabs(g(p).J.det() - 1.0));
    }
  }
  return worst;
}

}  // namespace fluxlab
