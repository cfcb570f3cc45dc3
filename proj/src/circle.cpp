#include "fluxlab/circle.hpp"

#include <cmath>
#include <sstream>

#include "fluxlab/geometry.hpp"

namespace fluxlab {

CircleLift::CircleLift(Fn f, Fn df, std::string provenance)
    : f_(std::move(f)), df_(std::move(df)), provenance_(std::move(provenance)) {}

CircleLift CircleLift::identity() {
  return CircleLift([](double x) { return x; }, [](double) { return 1.0; }, "id");
}

CircleLift CircleLift::rotation(double a) {
  std::ostringstream os;
  os.precision(17);
  os << "R(" << a << ")";
  return CircleLift([a](double x) { return x + a; }, [](double) { return 1.0; }, os.str());
}

CircleLift CircleLift::from_expr(const Expr& f) {
  auto prog = std::make_shared<Program>(std::vector<Expr>{f, differentiate(f, Var::theta)});
  auto eval = [prog](double x, int which) {
    double out[2];
    prog->run({0, 0, 0, x, 0}, out);
    return out[which];
  };
  return CircleLift([eval](double x) { return eval(x, 0); }, [eval](double x) { return eval(x, 1); },
                    to_string(f));
}

CircleLift CircleLift::fourier(double shift, std::vector<std::pair<double, double>> bc) {
  std::ostringstream os;
  os.precision(6);
  os << "fourier(" << shift;
  for (auto& [b, c] : bc) os << ", " << b << ":" << c;
  os << ")";
  auto f = [shift, bc](double x) {
    double s = x + shift;
    for (size_t k = 1; k <= bc.size(); ++k) {
      double w = 2 * kPi * k;
      s += (bc[k - 1].first * std::sin(w * x) + bc[k - 1].second * std::cos(w * x)) / w;
    }
    return s;
  };
  auto df = [bc](double x) {
    double s = 1.0;
    for (size_t k = 1; k <= bc.size(); ++k) {
      double w = 2 * kPi * k;
      s += bc[k - 1].first * std::cos(w * x) - bc[k - 1].second * std::sin(w * x);
    }
    return s;
  };
  return CircleLift(f, df, os.str());
}

void CircleLift::validate() const {
  for (int i = 0; i < 256; ++i) {
    double x = i / 256.0;
    double v = f_(x), v1 = f_(x + 1.0), d = df_(x);
    if (!std::isfinite(v) || !std::isfinite(v1) || !std::isfinite(d)) {
      throw InvalidLift("lift " + provenance_ + " is not finite at x = " + std::to_string(x));
    }
    if (std::fabs(v1 - v - 1.0) >= 1e-9) {
      std::ostringstream os;
      os << "lift " << provenance_ << " fails f(x+1) = f(x) + 1 at x = " << x << " (defect "
         << v1 - v - 1.0 << ")";
      throw InvalidLift(os.str());
    }
    if (!(d > 0.0)) {
      std::ostringstream os;
      os << "lift " << provenance_ << " is not increasing at x = " << x << " (f' = " << d << ")";
      throw InvalidLift(os.str());
    }
  }
}

CircleLift CircleLift::shifted(long n) const {
  if (n == 0) return *this;
  auto f = f_;
  double s = static_cast<double>(n);
  return CircleLift([f, s](double x) { return f(x) + s; }, df_,
                    "T^" + std::to_string(n) + " o " + provenance_);
}

CircleLift CircleLift::normalized() const {
  return shifted(-static_cast<long>(std::floor(f_(0.0))));
}

CircleLift compose(const CircleLift& f, const CircleLift& g) {
  return CircleLift([f, g](double x) { return f(g(x)); },
                    [f, g](double x) { return f.derivative(g(x)) * g.derivative(x); },
                    "(" + f.provenance() + ") o (" + g.provenance() + ")");
}

double invert_at(const CircleLift& f, double x) {
  double y = x - (f(x) - x);
  double lo = y - 1.0, hi = y + 1.0;
  for (int k = 0; f(lo) > x && k < 8; ++k) lo -= 1.0;
  for (int k = 0; f(hi) < x && k < 8; ++k) hi += 1.0;
  if (!(f(lo) <= x && x <= f(hi))) throw NonConvergence("could not bracket the inverse of " + f.provenance());
  const double tol = 1e-12 * std::fmax(1.0, std::fabs(x));
  for (int it = 0; it < 100; ++it) {
    double r = f(y) - x;
    if (std::fabs(r) <= tol) return y;
    if (r > 0)
      hi = y;
    else
      lo = y;
    double d = f.derivative(y);
    double next = y - r / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::fmax(1.0, std::fabs(y))) return next;
    y = next;
  }
  std::ostringstream os;
  os.precision(17);
  os << "inverse of " << f.provenance() << " did not converge at x = " << x;
  throw NonConvergence(os.str());
}

CircleLift invert(const CircleLift& f) {
  auto solve = [f](double x) { return invert_at(f, x); };
  return CircleLift(solve, [f, solve](double x) { return 1.0 / f.derivative(solve(x)); },
                    "(" + f.provenance() + ")^-1");
}

double translation_number(const CircleLift& f, long n_iter) {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  // iterate on [0,1) and carry the integer part separately
  double frac = 0.0;
  long whole = 0;
  for (long i = 0; i < n_iter; ++i) {
    double v = f(frac);
    double fl = std::floor(v);
    whole += static_cast<long>(fl);
    frac = v - fl;
  }
  return (static_cast<double>(whole) + frac) / static_cast<double>(n_iter);
}

RotCocycle rot_cocycle(const CircleLift& g1, const CircleLift& g2, long n_iter) {
  CircleLift a = g1.normalized(), b = g2.normalized();
  RotCocycle r;
  r.value = translation_number(a, n_iter) + translation_number(b, n_iter) -
            translation_number(compose(a, b), n_iter);
  r.nearest = std::lround(r.value);
  r.residual = std::fabs(r.value - static_cast<double>(r.nearest));
  if (r.residual > 0.1) {
    std::ostringstream os;
    os << "rotation cocycle of (" << g1.provenance() << ", " << g2.provenance()
       << ") is not near an integer: value " << r.value << ", residual " << r.residual;
    throw NumericalFailure(os.str());
  }
  return r;
}

// ---------------------------------------------------------------------------

CircleOneForm::CircleOneForm(Fn psi, std::string provenance)
    : psi_(std::move(psi)), provenance_(std::move(provenance)) {}

CircleOneForm CircleOneForm::constant(double c) {
  std::ostringstream os;
  os.precision(17);
  os << c;
  return CircleOneForm([c](double) { return c; }, os.str());
}

CircleOneForm CircleOneForm::from_expr(const Expr& psi) {
  auto prog = std::make_shared<Program>(std::vector<Expr>{psi});
  return CircleOneForm(
      [prog](double th) {
        double out;
        prog->run({0, 0, 0, th, 0}, &out);
        return out;
      },
      to_string(psi));
}

double CircleOneForm::total(const QuadratureSpec& spec) const { return integrate_circle(psi_, spec); }

void CircleOneForm::validate() const {
  for (int i = 0; i < 256; ++i) {
    double x = i / 256.0;
    double a = psi_(x), b = psi_(x + 1.0);
    if (!std::isfinite(a) || std::fabs(a - b) >= 1e-9) {
      std::ostringstream os;
      os << "circle form " << provenance_ << " is not 1-periodic at theta = " << x;
      throw InvalidLift(os.str());
    }
  }
}

CirclePrimitive::CirclePrimitive(const CircleOneForm& phi, const QuadratureSpec& spec)
    : phi_(phi), order_(spec.order), panels_(spec.panels_x) {
  spec.validate();
  const Rule1D& g = gauss_legendre(order_);
  cumulative_.assign(panels_ + 1, 0.0);
  double h = 1.0 / panels_;
  for (int p = 0; p < panels_; ++p) {
    double c = (p + 0.5) * h, s = 0.0;
    for (int i = 0; i < order_; ++i) {
      double x = c + 0.5 * h * g.nodes[i];
      double v = phi_(x);
      check_finite(v, x);
      s += 0.5 * h * g.weights[i] * v;
    }
    cumulative_[p + 1] = cumulative_[p] + s;
  }
}

double CirclePrimitive::operator()(double theta) const {
  double n = std::floor(theta);
  double r = theta - n;
  int k = static_cast<int>(r * panels_);
  if (k >= panels_) k = panels_ - 1;
  double a = static_cast<double>(k) / panels_;
  double partial = 0.0;
  if (r > a) {
    const Rule1D& g = gauss_legendre(order_);
    double half = 0.5 * (r - a), mid = 0.5 * (r + a);
    for (int i = 0; i < order_; ++i) partial += half * g.weights[i] * phi_(mid + half * g.nodes[i]);
  }
  return n * total() + cumulative_[k] + partial;
}

double euler_cocycle_chi(const CircleOneForm& phi, const CircleOneForm& psi, const CircleLift& g1,
                         const CircleLift& g2, const QuadratureSpec& spec) {
  CirclePrimitive Phi(phi, spec);
  const double c = Phi(g1(0.0));
  auto beta = [&](double th) { return Phi(th) - Phi(g1(th)) + c; };
  Rule1D r = rule_for(0.0, 1.0, spec.order, spec.panels_x, spec.periodic);
  double s = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    double th = r.nodes[i];
    double v = (beta(th) - beta(g2(th))) * psi(th);
    check_finite(v, th);
    s += r.weights[i] * v;
  }
  return s;
}

double F_circle(const CirclePrimitive& Phi, const CircleOneForm& psi, const CircleLift& g,
                const QuadratureSpec& spec) {
  Rule1D r = rule_for(0.0, 1.0, spec.order, spec.panels_x, spec.periodic);
  double s = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    double th = r.nodes[i];
    double v = (Phi(th) - Phi(g(th))) * psi(th);
    check_finite(v, th);
    s += r.weights[i] * v;
  }
  return s;
}

double cF_cocycle(const CircleOneForm& phi, const CircleOneForm& psi, const CircleLift& g1,
                  const CircleLift& g2, const QuadratureSpec& spec) {
  CirclePrimitive Phi(phi, spec);
  auto F = [&](const CircleLift& g) { return F_circle(Phi, psi, g, spec); };
  return group_coboundary(F, g1, g2, [](const CircleLift& a, const CircleLift& b) { return compose(a, b); });
}

}  // namespace fluxlab
