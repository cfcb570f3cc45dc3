#include "fluxlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace fluxlab {

void QuadratureSpec::validate() const {
  if (order < 2) throw std::invalid_argument("quadrature order must be >= 2");
  if (panels_x < 1 || panels_y < 1) throw std::invalid_argument("panel counts must be >= 1");
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec s = *this;
  s.panels_x *= 2;
  s.panels_y *= 2;
  return s;
}

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

Rule1D build_gauss(int n) {
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double p = 0, dp = 1;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    legendre(n, x, p, dp);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

double legendre_value(int n, double x) {
  if (n < 0) return 0.0;
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

std::vector<double> build_integration_matrix(int n) {
  const Rule1D& g = gauss_legendre(n);
  std::vector<double> m(static_cast<size_t>(n) * n, 0.0);
  // l_k(s) = sum_m w_k (2m+1)/2 P_m(x_k) P_m(s), exact for the degree n-1 basis.
  for (int j = 0; j < n; ++j) {
    double xj = g.nodes[j];
    std::vector<double> ip(n);
    ip[0] = xj + 1.0;
    for (int mm = 1; mm < n; ++mm)
      ip[mm] = (legendre_value(mm + 1, xj) - legendre_value(mm - 1, xj)) / (2.0 * mm + 1.0);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int mm = 0; mm < n; ++mm)
        s += (2.0 * mm + 1.0) / 2.0 * legendre_value(mm, g.nodes[k]) * ip[mm];
      m[static_cast<size_t>(j) * n + k] = g.weights[k] * s;
    }
  }
  return m;
}

std::mutex cache_mutex;

}  // namespace

const Rule1D& gauss_legendre(int order) {
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss(order)).first;
  return it->second;
}

const std::vector<double>& gauss_integration_matrix(int order) {
  static std::map<int, std::vector<double>> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
  }
  auto m = build_integration_matrix(order);
  std::lock_guard<std::mutex> lock(cache_mutex);
  return cache.emplace(order, std::move(m)).first->second;
}

Rule1D composite_gauss(double a, double b, int order, int panels) {
  const Rule1D& g = gauss_legendre(order);
  Rule1D r;
  r.nodes.reserve(static_cast<size_t>(order) * panels);
  r.weights.reserve(static_cast<size_t>(order) * panels);
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double c = a + (p + 0.5) * h;
    for (int i = 0; i < order; ++i) {
      r.nodes.push_back(c + 0.5 * h * g.nodes[i]);
      r.weights.push_back(0.5 * h * g.weights[i]);
    }
  }
  return r;
}

Rule1D periodic_trapezoid(double a, double b, int n) {
  Rule1D r;
  r.nodes.resize(n);
  r.weights.assign(n, (b - a) / n);
  for (int i = 0; i < n; ++i) r.nodes[i] = a + (b - a) * i / n;
  return r;
}

Rule1D rule_for(double a, double b, int order, int panels, bool periodic) {
  if (periodic) return periodic_trapezoid(a, b, order * panels);
  return composite_gauss(a, b, order, panels);
}

void check_finite(double value, double x, double y) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os.precision(17);
    os << "non-finite integrand value " << value << " at node (" << x << ", " << y << ")";
    throw QuadratureError(os.str(), x, y);
  }
}

double apply_rule(const Rule1D& rule, const std::vector<double>& values) {
  double s = 0.0;
  for (size_t i = 0; i < rule.size(); ++i) {
    check_finite(values[i], rule.nodes[i]);
    s += rule.weights[i] * values[i];
  }
  return s;
}

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    const QuadratureSpec& spec) {
  spec.validate();
  Rule1D r = rule_for(a, b, spec.order, spec.panels_x, spec.periodic);
  double s = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    double v = f(r.nodes[i]);
    check_finite(v, r.nodes[i]);
    s += r.weights[i] * v;
  }
  return s;
}

double integrate_circle(const std::function<double(double)>& f, const QuadratureSpec& spec) {
  return integrate_1d(f, 0.0, 1.0, spec);
}

double integrate_2d(const std::function<double(double, double)>& f, const Rect& rect,
                    const QuadratureSpec& spec) {
  spec.validate();
  Rule1D rx = rule_for(rect.x0, rect.x1, spec.order, spec.panels_x, spec.periodic);
  Rule1D ry = composite_gauss(rect.y0, rect.y1, spec.order, spec.panels_y);
  double s = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    double row = 0.0;
    for (size_t j = 0; j < ry.size(); ++j) {
      double v = f(rx.nodes[i], ry.nodes[j]);
      check_finite(v, rx.nodes[i], ry.nodes[j]);
      row += ry.weights[j] * v;
    }
    s += rx.weights[i] * row;
  }
  return s;
}

}  // namespace fluxlab
