#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <vector>

namespace rvm::eval {

using Quad = std::array<Eigen::Vector2d, 4>;

inline double polygon_signed_area(const std::vector<Eigen::Vector2d>& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

// Sutherland-Hodgman clip of a convex polygon against the half-plane to the
// left of edge (a -> b).
inline std::vector<Eigen::Vector2d> clip_half_plane(const std::vector<Eigen::Vector2d>& poly,
                                                    const Eigen::Vector2d& a,
                                                    const Eigen::Vector2d& b) {
  std::vector<Eigen::Vector2d> out;
  const std::size_t n = poly.size();
  auto side = [&](const Eigen::Vector2d& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& cur = poly[i];
    const Eigen::Vector2d& nxt = poly[(i + 1) % n];
    const double sc = side(cur), sn = side(nxt);
    if (sc >= 0) out.push_back(cur);
    if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

inline std::vector<Eigen::Vector2d> to_ccw(const Quad& q) {
  std::vector<Eigen::Vector2d> poly(q.begin(), q.end());
  if (polygon_signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

inline double convex_intersection_area(const Quad& a, const Quad& b) {
  std::vector<Eigen::Vector2d> poly = to_ccw(a);
  const std::vector<Eigen::Vector2d> clip = to_ccw(b);
  for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i)
    poly = clip_half_plane(poly, clip[i], clip[(i + 1) % clip.size()]);
  if (poly.size() < 3) return 0.0;
  return std::abs(polygon_signed_area(poly));
}

// Intersection-over-union of two convex quadrilaterals (any winding).
// Degenerate zero-area boxes give 0.
inline double rotated_iou(const Quad& a, const Quad& b) {
  const double area_a = std::abs(polygon_signed_area(std::vector<Eigen::Vector2d>(a.begin(), a.end())));
  const double area_b = std::abs(polygon_signed_area(std::vector<Eigen::Vector2d>(b.begin(), b.end())));
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double inter = convex_intersection_area(a, b);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace rvm::eval
