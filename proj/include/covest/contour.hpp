#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "covest/error.hpp"

namespace covest {

using cplx = std::complex<double>;

/// Quadrature node: the integral of f along the curve is approximated by sum f(z) * weight.
struct QuadNode {
  cplx z;
  cplx weight;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * static_cast<double>(k) - 1.0) * t * p1 - (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

/// Closed counterclockwise curve symmetric about the real axis, crossing it at
/// `left` and `right`.
///
/// Ellipses use the periodic trapezoidal rule with nodes offset by half a step,
/// so no node lies on the real axis and the rule converges geometrically for
/// integrands analytic near the curve. Rectangles use Gauss-Legendre on each side.
struct Contour {
  enum class Shape { ellipse, rectangle };

  Shape shape = Shape::ellipse;
  double left = 0.0;
  double right = 1.0;
  double half_height = 0.5;
  std::size_t nodes = 512;

  static Contour ellipse(double left, double right, double half_height, std::size_t nodes) {
    return Contour{Shape::ellipse, left, right, half_height, nodes};
  }
  static Contour rectangle(double left, double right, double half_height, std::size_t nodes) {
    return Contour{Shape::rectangle, left, right, half_height, nodes};
  }

  double center() const { return 0.5 * (left + right); }
  double half_width() const { return 0.5 * (right - left); }

  void check() const {
    if (!(right > left) || !(half_height > 0.0)) throw Error(ErrorCode::geometry, "degenerate contour");
    if (nodes < 8) throw Error(ErrorCode::geometry, "contour needs at least 8 nodes");
  }

  std::vector<QuadNode> discretize() const {
    check();
    std::vector<QuadNode> out;
    out.reserve(nodes);
    if (shape == Shape::ellipse) {
      const double a = half_width(), b = half_height, c = center();
      const double h = 2.0 * std::numbers::pi / static_cast<double>(nodes);
      for (std::size_t j = 0; j < nodes; ++j) {
        const double t = h * (static_cast<double>(j) + 0.5);
        const cplx z(c + a * std::cos(t), b * std::sin(t));
        const cplx dz(-a * std::sin(t), b * std::cos(t));
        out.push_back({z, dz * h});
      }
      return out;
    }
    const std::size_t per_side = std::max<std::size_t>(2, nodes / 4);
    std::vector<double> x, w;
    gauss_legendre(per_side, x, w);
    const cplx corners[4] = {{left, -half_height}, {right, -half_height}, {right, half_height}, {left, half_height}};
    for (int s = 0; s < 4; ++s) {
      const cplx a = corners[s], b = corners[(s + 1) % 4];
      const cplx mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t k = 0; k < per_side; ++k) out.push_back({mid + half * x[k], half * w[k]});
    }
    return out;
  }

  /// Point-in-curve test (strict interior).
  bool encloses(cplx z) const {
    const double dx = z.real() - center();
    if (shape == Shape::ellipse) {
      const double u = dx / half_width(), v = z.imag() / half_height;
      return u * u + v * v < 1.0;
    }
    return std::abs(dx) < half_width() && std::abs(z.imag()) < half_height;
  }

  /// Distance from a real point to the curve.
  double distance_to_real(double x) const {
    if (shape == Shape::rectangle) {
      const double inside = std::min({x - left, right - x, half_height});
      if (x >= left && x <= right) return inside;
      return x < left ? left - x : x - right;
    }
    // dense sampling is ample for a diagnostic
    double best = std::abs(x - left);
    const double a = half_width(), b = half_height, c = center();
    for (int k = 0; k <= 4096; ++k) {
      const double t = std::numbers::pi * k / 4096.0;
      best = std::min(best, std::abs(cplx(c + a * std::cos(t) - x, b * std::sin(t))));
    }
    return best;
  }

  /// True iff this curve lies strictly inside `outer` (both symmetric about the real axis).
  bool nested_in(const Contour& outer) const {
    for (const auto& node : Contour{shape, left, right, half_height, 256}.discretize())
      if (!outer.encloses(node.z)) return false;
    return outer.encloses(cplx(left, 0.0)) && outer.encloses(cplx(right, 0.0));
  }

  /// True iff the two curves' real extents are disjoint, hence the regions are.
  bool disjoint_from(const Contour& other) const { return right < other.left || other.right < left; }
};

}  // namespace covest
