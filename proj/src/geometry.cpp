#include "precsr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "precsr/errors.hpp"

namespace precsr {

namespace {

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Signed area of the closed ring, shoelace form. Positive for CCW ordering.
double signed_area(const std::vector<Point>& v) {
  double s = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    s += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return 0.5 * s;
}

int orient_sign(Point o, Point a, Point b) {
  const double c = cross(o, a, b);
  if (c > 0.0) return 1;
  if (c < 0.0) return -1;
  return 0;
}

bool on_segment_collinear(Point p, Point a, Point b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Proper or improper intersection of closed segments [a,b] and [c,d].
bool segments_intersect(Point a, Point b, Point c, Point d) {
  const int d1 = orient_sign(a, b, c);
  const int d2 = orient_sign(a, b, d);
  const int d3 = orient_sign(c, d, a);
  const int d4 = orient_sign(c, d, b);
  if (d1 != d2 && d3 != d4) return true;
  if (d1 == 0 && on_segment_collinear(c, a, b)) return true;
  if (d2 == 0 && on_segment_collinear(d, a, b)) return true;
  if (d3 == 0 && on_segment_collinear(a, c, d)) return true;
  if (d4 == 0 && on_segment_collinear(b, c, d)) return true;
  return false;
}

// Boundary test with a relative tolerance so that points produced by exact
// vertex arithmetic land on edges even after one rounding.
bool point_on_segment(Point p, Point a, Point b) {
  const double c = cross(a, b, p);
  const double ext = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y),
                               std::abs(p.x - a.x), std::abs(p.y - a.y)});
  if (std::abs(c) > 1e-12 * std::max(1.0, ext * ext)) return false;
  return on_segment_collinear(p, a, b);
}

bool polygon_contains(const Polygon& poly, Point p) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (point_on_segment(p, v[j], v[i])) return true;
  }
  // Even-odd ray cast; the half-open vertex rule avoids double counting.
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double xcross =
          (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x;
      if (p.x < xcross) inside = !inside;
    }
  }
  return inside;
}

void validate_polygon(const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) throw invalid_geometry_error("polygon needs at least 3 vertices");
  for (const Point& p : v) {
    if (!finite(p)) throw invalid_geometry_error("polygon vertex is not finite");
  }
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (v[i] == v[j]) {
      throw invalid_geometry_error("polygon has a zero-length edge at vertex " +
                                   std::to_string(i));
    }
  }
  if (signed_area(v) == 0.0) {
    throw invalid_geometry_error("polygon has zero area");
  }
  // O(V^2) simplicity: non-adjacent edges must be disjoint; adjacent edges may
  // meet only at their shared vertex.
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = v[i];
    const Point b = v[(i + 1) % n];
    for (std::size_t k = i + 1; k < n; ++k) {
      const Point c = v[k];
      const Point d = v[(k + 1) % n];
      const bool adjacent = (k == i + 1) || (i == 0 && k == n - 1);
      if (adjacent) {
        // The shared endpoint is legitimate; any other contact means a
        // collinear overlap or a spike.
        const Point shared = (k == i + 1) ? b : a;
        const Point far_ab = (k == i + 1) ? a : b;
        const Point far_cd = (k == i + 1) ? d : c;
        if (orient_sign(shared, far_ab, far_cd) == 0 &&
            (on_segment_collinear(far_ab, c, d) ||
             on_segment_collinear(far_cd, a, b))) {
          throw invalid_geometry_error("polygon edges overlap near vertex " +
                                       std::to_string(k));
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) {
        throw invalid_geometry_error("polygon is self-intersecting (edges " +
                                     std::to_string(i) + " and " +
                                     std::to_string(k) + ")");
      }
    }
  }
}

}  // namespace

Window rectangle_window(double xmin, double xmax, double ymin, double ymax) {
  if (!(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) &&
        std::isfinite(ymax))) {
    throw invalid_geometry_error("rectangle bounds must be finite");
  }
  if (!(xmin < xmax) || !(ymin < ymax)) {
    throw invalid_geometry_error("rectangle needs xmin < xmax and ymin < ymax");
  }
  return Window{Rectangle{xmin, xmax, ymin, ymax}};
}

Window polygon_window(std::vector<Point> vertices) {
  Polygon poly{std::move(vertices)};
  validate_polygon(poly);
  return Window{std::move(poly)};
}

Window unit_square() { return rectangle_window(0.0, 1.0, 0.0, 1.0); }

double area(const Window& w) {
  if (w.is_rectangle()) {
    const auto& r = w.rect();
    return (r.xmax - r.xmin) * (r.ymax - r.ymin);
  }
  return std::abs(signed_area(w.poly().vertices));
}

bool contains(const Window& w, Point p) {
  if (w.is_rectangle()) {
    const auto& r = w.rect();
    return r.xmin <= p.x && p.x <= r.xmax && r.ymin <= p.y && p.y <= r.ymax;
  }
  return polygon_contains(w.poly(), p);
}

Rectangle bounding_box(const Window& w) {
  if (w.is_rectangle()) return w.rect();
  const auto& v = w.poly().vertices;
  Rectangle r{v[0].x, v[0].x, v[0].y, v[0].y};
  for (const Point& p : v) {
    r.xmin = std::min(r.xmin, p.x);
    r.xmax = std::max(r.xmax, p.x);
    r.ymin = std::min(r.ymin, p.y);
    r.ymax = std::max(r.ymax, p.y);
  }
  return r;
}

Point apply_transform(const UnitTransform& t, Point p) {
  return {(p.x - t.x_offset) / t.x_width, (p.y - t.y_offset) / t.y_width};
}

NormalizedWindow normalize_window(const Window& w) {
  const Rectangle bb = bounding_box(w);
  const double wx = bb.xmax - bb.xmin;
  const double wy = bb.ymax - bb.ymin;
  if (!(wx > 0.0) || !(wy > 0.0)) {
    throw invalid_geometry_error("window bounding box is degenerate");
  }
  UnitTransform t{bb.xmin, bb.ymin, wx, wy};
  if (w.is_rectangle()) {
    return {rectangle_window(0.0, 1.0, 0.0, 1.0), t};
  }
  std::vector<Point> mapped;
  mapped.reserve(w.poly().vertices.size());
  for (const Point& p : w.poly().vertices) mapped.push_back(apply_transform(t, p));
  return {polygon_window(std::move(mapped)), t};
}

}  // namespace precsr
