#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fluxlab/fieldexpr.hpp"
#include "fluxlab/quadrature.hpp"

namespace fluxlab {

class InvalidLift : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lift to R of an orientation-preserving circle diffeomorphism: f(x+1) = f(x)+1, f' > 0.
class CircleLift {
 public:
  using Fn = std::function<double(double)>;

  CircleLift(Fn f, Fn df, std::string provenance);

  double operator()(double x) const { return f_(x); }
  double derivative(double x) const { return df_(x); }
  const std::string& provenance() const { return provenance_; }

  static CircleLift identity();
  static CircleLift rotation(double a);
  static CircleLift translation() { return rotation(1.0); }  // T
  // Lift given by an expression in theta.
  static CircleLift from_expr(const Expr& f);
  // x + shift + sum_k (b_k sin 2 pi k x + c_k cos 2 pi k x) / (2 pi k).
  // Strictly increasing when sum |b_k| + |c_k| < 1.
  static CircleLift fourier(double shift, std::vector<std::pair<double, double>> bc);

  // 256-point equivariance (1e-9) and monotonicity check.
  void validate() const;

  // T^n o f
  CircleLift shifted(long n) const;
  // shifted so that f(0) lies in [0,1)
  CircleLift normalized() const;

 private:
  Fn f_, df_;
  std::string provenance_;
};

CircleLift compose(const CircleLift& f, const CircleLift& g);  // f o g
CircleLift invert(const CircleLift& f);

// Solve f(y) = x by bracketed Newton; 1e-12, at most 100 iterations.
double invert_at(const CircleLift& f, double x);

double translation_number(const CircleLift& f, long n_iter);

struct RotCocycle {
  double value = 0.0;
  long nearest = 0;
  double residual = 0.0;
};

// rot(g1) + rot(g2) - rot(g1 g2) for lifts normalized to f(0) in [0,1).
// Throws NumericalFailure when the distance to the nearest integer exceeds 0.1.
RotCocycle rot_cocycle(const CircleLift& g1, const CircleLift& g2, long n_iter = 1000000);

// psi(theta) d theta with psi 1-periodic.
class CircleOneForm {
 public:
  using Fn = std::function<double(double)>;

  explicit CircleOneForm(Fn psi, std::string provenance = "function");
  static CircleOneForm constant(double c);
  static CircleOneForm from_expr(const Expr& psi);  // in theta

  double operator()(double theta) const { return psi_(theta); }
  double total(const QuadratureSpec& spec = {}) const;
  void validate() const;
  const std::string& provenance() const { return provenance_; }

 private:
  Fn psi_;
  std::string provenance_;
};

// Phi(theta) = int_0^theta phi, with cached panel sums; Phi(theta + n) = Phi(theta) + n A.
class CirclePrimitive {
 public:
  CirclePrimitive(const CircleOneForm& phi, const QuadratureSpec& spec = {});
  double operator()(double theta) const;
  double total() const { return cumulative_.back(); }

 private:
  CircleOneForm phi_;
  int order_;
  int panels_;
  std::vector<double> cumulative_;
};

// chi(g1, g2) = int (beta - beta o g2) psi with beta(theta) = Phi(theta) - Phi(g1 theta) + Phi(g1 0).
double euler_cocycle_chi(const CircleOneForm& phi, const CircleOneForm& psi, const CircleLift& g1,
                         const CircleLift& g2, const QuadratureSpec& spec = {});

// F(g) = int_0^1 (Phi(theta) - Phi(g theta)) psi(theta) d theta
double F_circle(const CirclePrimitive& Phi, const CircleOneForm& psi, const CircleLift& g,
                const QuadratureSpec& spec = {});

// F(g1) + F(g2) - F(g1 g2)
double cF_cocycle(const CircleOneForm& phi, const CircleOneForm& psi, const CircleLift& g1,
                  const CircleLift& g2, const QuadratureSpec& spec = {});

// dc(g1, g2) = c(g2) - c(g1 g2) + c(g1), product given by mul.
template <class G, class C, class Mul>
double group_coboundary(const C& c, const G& g1, const G& g2, const Mul& mul) {
  return c(g2) - c(mul(g1, g2)) + c(g1);
}

// dc(g1, g2, g3) = c(g2, g3) - c(g1 g2, g3) + c(g1, g2 g3) - c(g1, g2)
template <class G, class C, class Mul>
double group_coboundary(const C& c, const G& g1, const G& g2, const G& g3, const Mul& mul) {
  return c(g2, g3) - c(mul(g1, g2), g3) + c(g1, mul(g2, g3)) - c(g1, g2);
}

}  // namespace fluxlab
