#include <cmath>

#include "doctest.h"
#include "probfem/delaunay.hpp"
#include "probfem/errors.hpp"
#include "test_support.hpp"

using namespace probfem;

namespace {

Pslg polygon(const std::vector<Point>& pts) {
  Pslg g;
  g.points = pts;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    g.segments.push_back({i, (i + 1) % static_cast<int>(pts.size())});
    g.segment_tags.push_back(0);
  }
  return g;
}

double area(const DelaunayMesh& m, std::size_t t) {
  const auto& tri = m.triangles[t];
  const Point a = m.points[tri[0]], b = m.points[tri[1]], c = m.points[tri[2]];
  return 0.5 * cross(b - a, c - a);
}

// 3x3 in-circle determinant, positive when d is strictly inside the
// circumcircle of the counter-clockwise triangle abc.
double incircle(Point a, Point b, Point c, Point d) {
  const double adx = a.x - d.x, ady = a.y - d.y, bdx = b.x - d.x, bdy = b.y - d.y, cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

DelaunayRefinementCriteria criteria(double max_edge) {
  DelaunayRefinementCriteria c;
  c.max_edge = [max_edge](Point) { return max_edge; };
  return c;
}

}  // namespace

TEST_CASE("unit square") {
  const auto m = refine_delaunay(polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), [](Point) { return 0; }, criteria(0.2));
  double total = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    CHECK(area(m, t) > 0.0);
    total += area(m, t);
    const auto& tri = m.triangles[t];
    const Point a = m.points[tri[0]], b = m.points[tri[1]], c = m.points[tri[2]];
    CHECK(test::min_angle_deg(a, b, c) >= 20.0 - 1e-9);
    CHECK(std::max({distance(a, b), distance(b, c), distance(c, a)}) <= 0.2 + 1e-12);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("empty circumcircles") {
    // The domain is convex, so the conforming mesh is Delaunay over all its vertices.
    for (const auto& tri : m.triangles) {
      const Point a = m.points[tri[0]], b = m.points[tri[1]], c = m.points[tri[2]];
      const double scale = std::pow(distance(a, b), 4);
      for (std::size_t v = 0; v < m.points.size(); ++v) {
        if (static_cast<int>(v) == tri[0] || static_cast<int>(v) == tri[1] || static_cast<int>(v) == tri[2]) continue;
        CHECK(incircle(a, b, c, m.points[v]) <= 1e-10 * scale);
      }
    }
  }
  SUBCASE("boundary subsegments cover the outline") {
    double length = 0.0;
    for (const auto& s : m.segments) {
      length += distance(m.points[s.a], m.points[s.b]);
      const Point mid = 0.5 * (m.points[s.a] + m.points[s.b]);
      const Point inward{-(m.points[s.b].y - m.points[s.a].y), m.points[s.b].x - m.points[s.a].x};
      const Point probe = mid + 1e-3 * inward;
      CHECK((probe.x > 0 && probe.x < 1 && probe.y > 0 && probe.y < 1));
    }
    CHECK(length == doctest::Approx(4.0));
  }
}

TEST_CASE("non-convex domain with a hole and tagged regions") {
  // L-shaped outline with a square hole; the part right of an interior
  // segment at x = 1 is tagged 1.
  Pslg g = polygon({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  g.segments.push_back({1, 4});
  g.segment_tags.push_back(2);
  const int base = static_cast<int>(g.points.size());
  for (const Point& p : std::vector<Point>{{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.75}, {0.75, 0.25}}) g.points.push_back(p);
  for (int i = 0; i < 4; ++i) {
    g.segments.push_back({base + i, base + (i + 1) % 4});
    g.segment_tags.push_back(1);
  }
  const auto region = [](Point p) {
    if (p.x > 0.25 && p.x < 0.75 && p.y > 0.25 && p.y < 0.75) return -1;
    if (p.x > 1 && p.y > 1) return -1;
    return p.x > 1 ? 1 : 0;
  };
  const auto m = refine_delaunay(g, region, criteria(0.15));
  double total = 0.0, right = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    total += area(m, t);
    if (m.triangle_tags[t] == 1) right += area(m, t);
    const auto& tri = m.triangles[t];
    CHECK(test::min_angle_deg(m.points[tri[0]], m.points[tri[1]], m.points[tri[2]]) >= 20.0 - 1e-9);
  }
  CHECK(total == doctest::Approx(3.0 - 0.25).epsilon(1e-12));
  CHECK(right == doctest::Approx(1.0).epsilon(1e-12));
  int hole_segments = 0;
  for (const auto& s : m.segments) hole_segments += s.tag == 1;
  CHECK(hole_segments >= 4);
}

TEST_CASE("errors") {
  auto c = criteria(1e-3);
  c.max_vertices = 100;
  CHECK_THROWS_AS(refine_delaunay(polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), [](Point) { return 0; }, c),
                  TriangulationError);
  Pslg two;
  two.points = {{0, 0}, {1, 0}};
  CHECK_THROWS_AS(refine_delaunay(two, [](Point) { return 0; }, criteria(1.0)), TriangulationError);
}
