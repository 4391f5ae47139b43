#pragma once

#include <utility>
#include <variant>
#include <vector>

namespace precsr {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(Point a, Point b) { return a.x == b.x && a.y == b.y; }

// Axis-aligned, xmin < xmax and ymin < ymax after validation.
struct Rectangle {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
};

// Simple polygon; the closing edge back to vertices.front() is implicit.
struct Polygon {
  std::vector<Point> vertices;
};

// Observation window: rectangle or validated simple polygon. Construct through
// rectangle_window / polygon_window, which reject degenerate shapes.
struct Window {
  std::variant<Rectangle, Polygon> shape;

  bool is_rectangle() const { return std::holds_alternative<Rectangle>(shape); }
  const Rectangle& rect() const { return std::get<Rectangle>(shape); }
  const Polygon& poly() const { return std::get<Polygon>(shape); }
};

Window rectangle_window(double xmin, double xmax, double ymin, double ymax);
Window polygon_window(std::vector<Point> vertices);
Window unit_square();

double area(const Window& w);
// Closed containment: boundary points count as inside.
bool contains(const Window& w, Point p);
Rectangle bounding_box(const Window& w);

// Maps raw coordinates onto the closed unit square. Stored as offset + width and
// applied as (p - offset) / width: division by the exact width is what makes the
// bounding box land exactly on [0,1]^2, which a stored reciprocal cannot
// guarantee. Not aspect-preserving: each axis rescales independently.
struct UnitTransform {
  double x_offset = 0.0, y_offset = 0.0;
  double x_width = 1.0, y_width = 1.0;

  double x_scale() const { return 1.0 / x_width; }
  double y_scale() const { return 1.0 / y_width; }
};

Point apply_transform(const UnitTransform& t, Point p);

struct NormalizedWindow {
  Window unit;  // the window image in unit coordinates
  UnitTransform transform;
};

// Rescales the window's bounding box onto [0,1]^2. Idempotent: a window whose
// bounding box is already the unit square gets the identity transform.
NormalizedWindow normalize_window(const Window& w);

}  // namespace precsr
