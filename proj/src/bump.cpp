#include "fluxlab/bump.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "fluxlab/quadrature.hpp"

namespace fluxlab {

namespace {

constexpr int N = kMaxBumpOrder + 1;
using Jet = std::array<double, N>;

// Truncated Taylor arithmetic on coefficient arrays (c_k = f^(k)/k!).
Jet jet_div(const Jet& a, const Jet& b, int n) {
  Jet c{};
  for (int k = 0; k < n; ++k) {
    double s = a[k];
    for (int j = 1; j <= k; ++j) s -= b[j] * c[k - j];
    c[k] = s / b[0];
  }
  return c;
}

Jet jet_exp(const Jet& a, int n) {
  Jet b{};
  b[0] = std::exp(a[0]);
  for (int k = 1; k < n; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a[j] * b[k - j];
    b[k] = s / k;
  }
  return b;
}

// exp(-1/u) as a jet, exactly zero once the value underflows.
Jet jet_flat(const Jet& u, int n) {
  if (u[0] < 1.0 / 700.0) return Jet{};
  Jet minus_one{};
  minus_one[0] = -1.0;
  return jet_exp(jet_div(minus_one, u, n), n);
}

}  // namespace

double bump(double y) {
  double a = std::fabs(y);
  if (a <= 0.125) return 1.0;
  if (a >= 0.25) return 0.0;
  double u = (0.25 - a) * 8.0;
  double e0 = u < 1.0 / 700.0 ? 0.0 : std::exp(-1.0 / u);
  double e1 = (1.0 - u) < 1.0 / 700.0 ? 0.0 : std::exp(-1.0 / (1.0 - u));
  return e0 / (e0 + e1);
}

double bump_derivative(double y, int k) {
  if (k < 0 || k > kMaxBumpOrder) throw std::domain_error("bump derivative order out of range");
  if (k == 0) return bump(y);
  double a = std::fabs(y);
  if (a <= 0.125 || a >= 0.25) return 0.0;
  const int n = k + 1;
  double sgn = y > 0 ? 1.0 : -1.0;
  Jet u{}, v{};
  u[0] = (0.25 - a) * 8.0;
  u[1] = -8.0 * sgn;
  v[0] = 1.0 - u[0];
  v[1] = -u[1];
  Jet e0 = jet_flat(u, n);
  Jet e1 = jet_flat(v, n);
  Jet den{};
  for (int i = 0; i < n; ++i) den[i] = e0[i] + e1[i];
  Jet b = jet_div(e0, den, n);
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  return b[k] * fact;
}

double bump_integral() {
  static const double value = [] {
    QuadratureSpec s;
    s.order = 16;
    s.panels_x = 256;
    return integrate_1d(bump, -0.25, 0.25, s);
  }();
  return value;
}

}  // namespace fluxlab
