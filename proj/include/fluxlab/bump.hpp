#pragma once

namespace fluxlab {

// Smooth plateau: 1 on |y| <= 1/8, 0 on |y| >= 1/4, and
// e(u) / (e(u) + e(1-u)) with e(s) = exp(-1/s), u = (1/4 - |y|) * 8, in between.
double bump(double y);

// k-th derivative of bump, k >= 0. Orders above kMaxBumpOrder throw.
double bump_derivative(double y, int k);

inline constexpr int kMaxBumpOrder = 15;

// Integral of bump over the real line.
double bump_integral();

}  // namespace fluxlab
