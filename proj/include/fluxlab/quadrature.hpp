#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxlab/geometry.hpp"

namespace fluxlab {

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double x, double y)
      : std::runtime_error(what), x_(x), y_(y) {}
  double node_x() const { return x_; }
  double node_y() const { return y_; }

 private:
  double x_, y_;
};

struct QuadratureSpec {
  int order = 8;
  int panels_x = 64;
  int panels_y = 64;
  bool periodic = false;  // x direction (or the only direction in 1-D)

  void validate() const;
  QuadratureSpec refined() const;  // panels doubled
};

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  size_t size() const { return nodes.size(); }
};

// Gauss-Legendre on [-1,1]; cached.
const Rule1D& gauss_legendre(int order);

// Spectral cumulative integration on one Gauss panel:
// M[j*n + k] = int_{-1}^{x_j} l_k(s) ds with l_k the Lagrange basis at the nodes.
const std::vector<double>& gauss_integration_matrix(int order);

Rule1D composite_gauss(double a, double b, int order, int panels);
Rule1D periodic_trapezoid(double a, double b, int n);

// Rule used along one direction given a spec.
Rule1D rule_for(double a, double b, int order, int panels, bool periodic);

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    const QuadratureSpec& spec = {});

// Unit circle R/Z, period 1.
double integrate_circle(const std::function<double(double)>& f, const QuadratureSpec& spec = {});

double integrate_2d(const std::function<double(double, double)>& f, const Rect& r,
                    const QuadratureSpec& spec = {});

// Weighted sum over a precomputed rule with the non-finite check.
double apply_rule(const Rule1D& rule, const std::vector<double>& values);

void check_finite(double value, double x, double y = 0.0);

}  // namespace fluxlab
