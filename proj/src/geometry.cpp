#include "probfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "probfem/delaunay.hpp"
#include "probfem/errors.hpp"

namespace probfem {
namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr int kInterfaceTag = 2;

/// Rotation by k quarter turns.
Point quarter_turn(Point q, int k) {
  switch (k & 3) {
    case 0: return q;
    case 1: return {-q.y, q.x};
    case 2: return {-q.x, -q.y};
    default: return {q.y, -q.x};
  }
}

bool inside_polygon(Point p, const std::vector<Point>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

bool in_box(Point p, double x0, double x1, double y0, double y1) {
  return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1;
}

/// Appends the points strictly between a and b, spaced at most `spacing` apart.
void subdivide(Point a, Point b, double spacing, std::vector<Point>& out) {
  const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / spacing - 1e-9)));
  for (int j = 1; j < n; ++j) out.push_back(a + (static_cast<double>(j) / n) * (b - a));
}

}  // namespace

void check_hole(const HoleParams& hole) {
  if (!(hole.d > 0.0) || !std::isfinite(hole.d)) throw InvalidArgument("hole side length must be positive");
  if (!(hole.r >= 0.0 && hole.r <= 0.5)) throw InvalidArgument("relative corner radius must lie in [0, 0.5]");
  if (!std::isfinite(hole.x) || !std::isfinite(hole.y) || !std::isfinite(hole.alpha)) {
    throw InvalidArgument("hole parameters must be finite");
  }
}

RoundedSquare::RoundedSquare(const HoleParams& params) : params_(params) {
  check_hole(params);
  radius_ = params.r * params.d;
  half_edge_ = 0.5 * params.d - radius_;
  edge_ = 2.0 * half_edge_;
  arc_ = kHalfPi * radius_;
  perimeter_ = 4.0 * (edge_ + arc_);
}

Point RoundedSquare::local_to_global(Point q) const {
  const double c = std::cos(params_.alpha), s = std::sin(params_.alpha);
  return {params_.x + c * q.x - s * q.y, params_.y + s * q.x + c * q.y};
}

Point RoundedSquare::point(double s) const {
  s = std::fmod(s, perimeter_);
  if (s < 0.0) s += perimeter_;
  const double side = edge_ + arc_;
  const int k = std::min(3, static_cast<int>(s / side));
  const double t = s - k * side;
  const double half = 0.5 * params_.d;
  Point q;
  if (t <= edge_) {
    q = {half, -half_edge_ + t};
  } else {
    const double phi = radius_ > 0.0 ? (t - edge_) / radius_ : 0.0;
    q = {half_edge_ + radius_ * std::cos(phi), half_edge_ + radius_ * std::sin(phi)};
  }
  return local_to_global(quarter_turn(q, k));
}

Point RoundedSquare::tangent(double s, bool from_left) const {
  s = std::fmod(s, perimeter_);
  if (s < 0.0) s += perimeter_;
  const double side = edge_ + arc_;
  const double eps = 1e-12 * perimeter_;
  if (from_left) s = s - eps < 0.0 ? s - eps + perimeter_ : s - eps;
  const int k = std::min(3, static_cast<int>(s / side));
  const double t = s - k * side;
  Point q;
  if (t <= edge_ || radius_ == 0.0) {
    q = {0.0, 1.0};
  } else {
    const double phi = (t - edge_) / radius_;
    q = {-std::sin(phi), std::cos(phi)};
  }
  q = quarter_turn(q, k);
  const double c = std::cos(params_.alpha), sn = std::sin(params_.alpha);
  return {c * q.x - sn * q.y, sn * q.x + c * q.y};
}

std::vector<double> RoundedSquare::junctions() const {
  std::vector<double> out;
  for (int k = 0; k < 4; ++k) {
    out.push_back(k * (edge_ + arc_));
    out.push_back(k * (edge_ + arc_) + edge_);
  }
  return out;
}

std::vector<Point> hole_boundary(const HoleParams& params, int n_points) {
  if (n_points < 8) throw InvalidArgument("hole polyline needs at least 8 points");
  const RoundedSquare shape(params);
  // Pieces of nonzero length: [start, length].
  std::vector<std::pair<double, double>> pieces;
  const auto junctions = shape.junctions();
  for (std::size_t j = 0; j < junctions.size(); ++j) {
    const double len = (j % 2 == 0) ? shape.edge_length() : shape.arc_length();
    if (len > 1e-14 * shape.perimeter()) pieces.emplace_back(junctions[j], len);
  }
  const int free_points = n_points - static_cast<int>(pieces.size());
  if (free_points < 0) throw InvalidArgument("too few hole polyline points for the shape's pieces");
  // Largest-remainder allocation of the interior points, proportional to length.
  std::vector<int> counts(pieces.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const double share = free_points * pieces[i].second / shape.perimeter();
    counts[i] = static_cast<int>(std::floor(share));
    assigned += counts[i];
    remainders.emplace_back(share - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int j = 0; j < free_points - assigned; ++j) ++counts[remainders[j].second];

  std::vector<Point> out;
  out.reserve(n_points);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto [start, len] = pieces[i];
    for (int j = 0; j <= counts[i]; ++j) out.push_back(shape.point(start + len * j / (counts[i] + 1)));
  }
  return out;
}

double signed_distance_hole(Point p, const HoleParams& params) {
  check_hole(params);
  const double c = std::cos(params.alpha), s = std::sin(params.alpha);
  const Point d = p - Point{params.x, params.y};
  const double qx = std::abs(c * d.x + s * d.y), qy = std::abs(-s * d.x + c * d.y);
  const double radius = params.r * params.d;
  const double half_edge = 0.5 * params.d - radius;
  const double ax = qx - half_edge, ay = qy - half_edge;
  const double outside = std::hypot(std::max(ax, 0.0), std::max(ay, 0.0));
  return outside + std::min(std::max(ax, ay), 0.0) - radius;
}

bool hole_admissible(const HoleParams& params, const BeamGeometry& beam, const AdmissibilityOptions& options) {
  if (!(params.d > 0.0) || !(params.r >= 0.0 && params.r <= 0.5)) return false;
  if (!std::isfinite(params.x) || !std::isfinite(params.y) || !std::isfinite(params.alpha)) return false;
  const double radius = params.r * params.d;
  const double half_edge = 0.5 * params.d - radius;
  // Support function of the rounded square in the coordinate directions.
  const double extent = radius + half_edge * (std::abs(std::cos(params.alpha)) + std::abs(std::sin(params.alpha)));
  const double gap = options.clearance;
  return params.x - extent >= gap && params.x + extent <= beam.length() - gap && params.y - extent >= gap &&
         params.y + extent <= beam.height - gap;
}

std::vector<Point> beam_sensor_locations(const BeamGeometry& beam, double spacing) {
  if (!(spacing > 0.0)) throw InvalidArgument("sensor spacing must be positive");
  const double len = beam.length(), height = beam.height;
  const double perimeter = 2.0 * (len + height);
  std::vector<Point> out;
  for (double s = 0.5 * spacing; s < perimeter; s += spacing) {
    if (s < len) {
      out.push_back({s, 0.0});
    } else if (s < len + height) {
      out.push_back({len, s - len});
    } else if (s < 2.0 * len + height) {
      out.push_back({2.0 * len + height - s, height});
    } else {
      out.push_back({0.0, perimeter - s});
    }
  }
  return out;
}

int hole_polyline_points(const HoleParams& params, double h) {
  if (!(h > 0.0)) throw InvalidArgument("mesh size must be positive");
  const RoundedSquare shape(params);
  return std::max(16, static_cast<int>(std::ceil(shape.perimeter() / (0.5 * h))));
}

Mesh triangulate_beam(const BeamGeometry& beam, const HoleParams& hole, double h,
                      const TriangulationOptions& options) {
  if (!(h > 0.0)) throw InvalidArgument("mesh size must be positive");
  if (!hole_admissible(hole, beam)) throw TriangulationError("hole is not admissible for meshing");
  const double len = beam.length(), height = beam.height;
  const double sw = 0.5 * beam.support_width, sh = beam.support_height;
  const Point ls = beam.left_support(), rs = beam.right_support(), lp = beam.load_point();

  // Corners of the union of beam and blocks, counter-clockwise.
  const std::vector<Point> corners = {
      {0.0, 0.0},           {ls.x - sw, 0.0},     {ls.x - sw, -sh},       {ls.x + sw, -sh},
      {ls.x + sw, 0.0},     {rs.x - sw, 0.0},     {rs.x - sw, -sh},       {rs.x + sw, -sh},
      {rs.x + sw, 0.0},     {len, 0.0},           {len, height},          lp,
      {0.0, height}};
  const auto sensors = beam_sensor_locations(beam);
  const double spacing = options.boundary_spacing_factor * h;

  Pslg pslg;
  auto add_chain = [&](const std::vector<Point>& vertices, bool closed, int tag) {
    const int first = static_cast<int>(pslg.points.size());
    std::vector<Point> dense;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < (closed ? n : n - 1); ++i) {
      const Point a = vertices[i], b = vertices[(i + 1) % n];
      dense.push_back(a);
      subdivide(a, b, spacing, dense);
    }
    if (!closed) dense.push_back(vertices.back());
    pslg.points.insert(pslg.points.end(), dense.begin(), dense.end());
    const int count = static_cast<int>(dense.size());
    for (int i = 0; i < (closed ? count : count - 1); ++i) {
      pslg.segments.push_back({first + i, first + (i + 1) % count});
      pslg.segment_tags.push_back(tag);
    }
  };

  // Outer chain with the sensors inserted between corners.
  std::vector<Point> outer;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const Point a = corners[i], b = corners[(i + 1) % corners.size()];
    outer.push_back(a);
    const Point ab = b - a;
    const double l2 = dot(ab, ab);
    std::vector<std::pair<double, Point>> on_edge;
    for (const Point& s : sensors) {
      const double t = dot(s - a, ab) / l2;
      if (t > 1e-12 && t < 1.0 - 1e-12 && std::abs(cross(ab, s - a)) <= 1e-12 * l2) on_edge.emplace_back(t, s);
    }
    std::sort(on_edge.begin(), on_edge.end(), [](const auto& u, const auto& v) { return u.first < v.first; });
    for (const auto& [t, s] : on_edge) outer.push_back(s);
  }
  add_chain(outer, true, kOuterChain);
  add_chain({{ls.x - sw, 0.0}, {ls.x + sw, 0.0}}, false, kInterfaceTag);
  add_chain({{rs.x - sw, 0.0}, {rs.x + sw, 0.0}}, false, kInterfaceTag);
  // Interface end points duplicate outer corners; merge them.
  {
    std::vector<int> remap(pslg.points.size());
    std::vector<Point> unique;
    for (std::size_t i = 0; i < pslg.points.size(); ++i) {
      int found = -1;
      for (std::size_t j = 0; j < unique.size() && found < 0; ++j) {
        if (distance(unique[j], pslg.points[i]) <= 1e-12) found = static_cast<int>(j);
      }
      if (found < 0) {
        found = static_cast<int>(unique.size());
        unique.push_back(pslg.points[i]);
      }
      remap[i] = found;
    }
    pslg.points = std::move(unique);
    for (auto& s : pslg.segments) s = {remap[s[0]], remap[s[1]]};
  }

  const auto hole_poly = hole_boundary(hole, hole_polyline_points(hole, h));
  {
    const int first = static_cast<int>(pslg.points.size());
    const int count = static_cast<int>(hole_poly.size());
    pslg.points.insert(pslg.points.end(), hole_poly.begin(), hole_poly.end());
    for (int i = 0; i < count; ++i) {
      pslg.segments.push_back({first + i, first + (i + 1) % count});
      pslg.segment_tags.push_back(kHoleChain);
    }
  }

  if (options.lattice_spacing_factor > 0.0) {
    const double s = options.lattice_spacing_factor * h;
    const double margin = options.seed_margin_factor * s;
    const double dy = 0.5 * std::sqrt(3.0) * s;
    const int rows = static_cast<int>(std::floor((height - 2.0 * margin) / dy));
    const double y0 = 0.5 * (height - rows * dy);
    for (int j = 0; j <= rows; ++j) {
      const double y = y0 + j * dy;
      const double shift = (j % 2 == 0) ? 0.0 : 0.5 * s;
      const int cols = static_cast<int>(std::floor((len - 2.0 * margin - shift) / s));
      const double x0 = 0.5 * (len - cols * s - shift) + shift;
      for (int i = 0; i <= cols; ++i) {
        const Point p{x0 + i * s, y};
        if (p.x < margin || p.x > len - margin || y < margin || y > height - margin) continue;
        if (signed_distance_hole(p, hole) < margin) continue;
        pslg.points.push_back(p);
      }
    }
  }

  const RegionFunction region = [&](Point p) {
    if (in_box(p, 0.0, len, 0.0, height)) return inside_polygon(p, hole_poly) ? -1 : kBulkTag;
    if (in_box(p, ls.x - sw, ls.x + sw, -sh, 0.0) || in_box(p, rs.x - sw, rs.x + sw, -sh, 0.0)) return kStiffTag;
    return -1;
  };
  DelaunayRefinementCriteria criteria;
  criteria.min_angle_deg = options.min_angle_deg;
  const double max_edge = options.max_edge_factor * h;
  criteria.max_edge = [max_edge](Point) { return max_edge; };
  criteria.max_vertices = options.max_vertices;
  auto dm = refine_delaunay(pslg, region, criteria);

  std::vector<Element> elements;
  elements.reserve(dm.triangles.size());
  for (const auto& t : dm.triangles) elements.push_back({t[0], t[1], t[2]});
  std::vector<BoundaryEdge> edges;
  for (const auto& s : dm.segments) {
    if (s.tag != kInterfaceTag) edges.push_back(s);
  }
  return Mesh(2, std::move(dm.points), std::move(elements), std::move(edges), std::move(dm.triangle_tags));
}

}  // namespace probfem
