#pragma once

#include <cmath>

namespace fluxlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// row-major 2x2
struct Mat2 {
  double a = 1.0, b = 0.0;
  double c = 0.0, d = 1.0;

  static Mat2 identity() { return {}; }
  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
};

inline Mat2 operator*(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
          m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}
inline Vec2 operator*(const Mat2& m, Vec2 v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}
inline Mat2 operator+(const Mat2& m, const Mat2& n) {
  return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
}
inline Mat2 operator*(double s, const Mat2& m) {
  return {s * m.a, s * m.b, s * m.c, s * m.d};
}
inline Mat2 inverse(const Mat2& m) {
  double k = 1.0 / m.det();
  return {k * m.d, -k * m.b, -k * m.c, k * m.a};
}

// A point together with the Jacobian of the map that produced it.
struct PointJet {
  Vec2 p;
  Mat2 J;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct Rect {
  double x0 = 0.0, x1 = 0.0;
  double y0 = 0.0, y1 = 0.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool contains_open(Vec2 p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
  bool empty() const { return !(x1 > x0) || !(y1 > y0); }
};

inline Rect intersect(const Rect& a, const Rect& b) {
  return {std::fmax(a.x0, b.x0), std::fmin(a.x1, b.x1), std::fmax(a.y0, b.y0),
          std::fmin(a.y1, b.y1)};
}

inline Rect hull(const Rect& a, const Rect& b) {
  return {std::fmin(a.x0, b.x0), std::fmax(a.x1, b.x1), std::fmin(a.y0, b.y0),
          std::fmax(a.y1, b.y1)};
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace fluxlab
