#include <cmath>
#include <numbers>

#include "doctest.h"
#include "probfem/errors.hpp"
#include "probfem/geometry.hpp"
#include "probfem/random.hpp"
#include "test_support.hpp"

using namespace probfem;
using std::numbers::pi;

namespace {

const HoleParams kTruth{1.0, 0.4, 0.4, pi / 6.0, 0.25};

// Even-odd point-in-polygon test.
bool inside_polygon(Point p, const std::vector<Point>& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

double polyline_length(const std::vector<Point>& poly) {
  double len = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) len += distance(poly[i], poly[(i + 1) % poly.size()]);
  return len;
}

}  // namespace

TEST_CASE("hole boundary limits") {
  SUBCASE("circle") {
    const auto pts = hole_boundary({0, 0, 1, 0, 0.5}, 360);
    REQUIRE(pts.size() == 360);
    for (const Point& p : pts) CHECK(std::abs(norm(p) - 0.5) < 1e-6);
  }
  SUBCASE("square") {
    const auto pts = hole_boundary({0, 0, 1, 0, 0}, 8);
    int corners = 0;
    for (const Point& p : pts) {
      CHECK(std::max(std::abs(p.x), std::abs(p.y)) == doctest::Approx(0.5));
      corners += std::abs(std::abs(p.x) - 0.5) < 1e-12 && std::abs(std::abs(p.y) - 0.5) < 1e-12;
    }
    CHECK(corners == 4);
  }
  SUBCASE("counter-clockwise orientation") {
    const auto pts = hole_boundary(kTruth, 64);
    double area = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) area += cross(pts[i], pts[(i + 1) % pts.size()]);
    CHECK(area > 0.0);
  }
  CHECK_THROWS_AS(hole_boundary({0, 0, 1, 0, 0.6}, 32), InvalidArgument);
  CHECK_THROWS_AS(hole_boundary({0, 0, 1, 0, -0.1}, 32), InvalidArgument);
  CHECK_THROWS_AS(hole_boundary({0, 0, 0, 0, 0.2}, 32), InvalidArgument);
  CHECK_THROWS_AS(hole_boundary({0, 0, 1, 0, 0.2}, 4), InvalidArgument);
}

TEST_CASE("rounded square perimeter") {
  const double exact = 4.0 * 0.4 * (1.0 - 2.0 * 0.25) + 2.0 * pi * 0.25 * 0.4;
  CHECK(RoundedSquare(kTruth).perimeter() == doctest::Approx(exact).epsilon(1e-12));
  CHECK(polyline_length(hole_boundary(kTruth, 400)) == doctest::Approx(exact).epsilon(1e-3));
  CHECK(RoundedSquare({0, 0, 2, 0, 0}).perimeter() == doctest::Approx(8.0));
  CHECK(RoundedSquare({0, 0, 2, 0, 0.5}).perimeter() == doctest::Approx(2.0 * pi));
}

TEST_CASE("rounded square tangent is continuous at junctions") {
  for (double r : {0.1, 0.25, 0.4}) {
    const RoundedSquare sq({0.3, -0.2, 0.7, 0.4, r});
    for (double s : sq.junctions()) {
      const Point left = sq.tangent(s, true), right = sq.tangent(s, false);
      CHECK(std::abs(std::atan2(cross(left, right), dot(left, right))) < 1e-6);
    }
  }
  // Sharp corners of the square turn by a right angle.
  const RoundedSquare square({0, 0, 1, 0, 0});
  const double s = square.junctions().front();
  const Point left = square.tangent(s, true), right = square.tangent(s, false);
  CHECK(std::abs(std::atan2(cross(left, right), dot(left, right))) == doctest::Approx(pi / 2));
}

TEST_CASE("hole admissibility") {
  const BeamGeometry beam;
  CHECK(hole_admissible(kTruth, beam));
  CHECK_FALSE(hole_admissible({0.0, 0.5, 0.4, 0.0, 0.25}, beam));
  // Square corner reaches y + d*sqrt(2)/2 > 1 when rotated by 45 degrees; even
  // unrotated, the top edge at 1.15 leaves the beam.
  CHECK_FALSE(hole_admissible({2.5, 0.95, 0.4, 0.0, 0.0}, beam));
  CHECK_FALSE(hole_admissible({2.5, 0.5, 0.9, pi / 4, 0.0}, beam));
  CHECK(hole_admissible({2.5, 0.5, 0.9, pi / 4, 0.5}, beam));
  // Clearance band.
  CHECK_FALSE(hole_admissible({2.5, 0.2 + 0.01, 0.4, 0.0, 0.5}, beam));
  CHECK(hole_admissible({2.5, 0.2 + 0.03, 0.4, 0.0, 0.5}, beam));
  CHECK_FALSE(hole_admissible({2.5, 0.5, 0.4, 0.0, 0.7}, beam));
}

TEST_CASE("signed distance") {
  CHECK(signed_distance_hole({1.0, 0.4}, kTruth) < 0.0);
  CHECK(signed_distance_hole({1.0, 0.4}, kTruth) >= -0.2 - 1e-12);
  const HoleParams circle{0, 0, 1, 0, 0.5};
  CHECK(std::abs(signed_distance_hole({0.5 * std::cos(0.3), 0.5 * std::sin(0.3)}, circle)) < 1e-12);
  CHECK(signed_distance_hole({0, 0}, circle) == doctest::Approx(-0.5));
  CHECK(signed_distance_hole({2, 0}, circle) == doctest::Approx(1.5));

  const RoundedSquare sq(kTruth);
  for (int i = 0; i < 200; ++i) {
    const double s = sq.perimeter() * i / 200.0;
    CHECK(std::abs(signed_distance_hole(sq.point(s), kTruth)) < 1e-9);
  }

  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> ux(0.4, 1.6), uy(-0.2, 1.0), ua(0.0, 2 * pi), ur(0.0, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const HoleParams hole{1.0, 0.4, 0.5, ua(rng), ur(rng)};
    const auto dense = hole_boundary(hole, 20000);
    for (int i = 0; i < 50; ++i) {
      const Point p{ux(rng), uy(rng)};
      const double oracle = (inside_polygon(p, dense) ? -1.0 : 1.0) * test::polyline_distance(p, dense);
      CHECK(std::abs(signed_distance_hole(p, hole) - oracle) < 1e-4);
    }
    for (int i = 0; i < 200; ++i) {
      const Point p{ux(rng), uy(rng)}, q{ux(rng), uy(rng)};
      CHECK(std::abs(signed_distance_hole(p, hole) - signed_distance_hole(q, hole)) <= distance(p, q) + 1e-12);
    }
  }
}

TEST_CASE("sensor layout") {
  const BeamGeometry beam;
  const auto sensors = beam_sensor_locations(beam);
  REQUIRE(sensors.size() == 24);
  for (const Point& s : sensors) {
    const bool on_edge = std::abs(s.x) < 1e-12 || std::abs(s.x - 5.0) < 1e-12 || std::abs(s.y) < 1e-12 ||
                         std::abs(s.y - 1.0) < 1e-12;
    CHECK(on_edge);
    CHECK(distance(s, beam.load_point()) > 0.1);
    CHECK(distance(s, beam.left_support()) > 0.1);
    CHECK(distance(s, beam.right_support()) > 0.1);
  }
  // Consecutive sensors along the perimeter are 0.5 m apart (straight or around a corner).
  double along = 0.0;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const Point a = sensors[i], b = sensors[(i + 1) % sensors.size()];
    along += std::abs(a.x - b.x) + std::abs(a.y - b.y);
  }
  CHECK(along == doctest::Approx(12.0));
}

TEST_CASE("beam triangulation") {
  const BeamGeometry beam;
  const auto sensors = beam_sensor_locations(beam);
  SUBCASE("element counts") {
    const Mesh coarse = triangulate_beam(beam, kTruth, 0.2);
    const Mesh fine = triangulate_beam(beam, kTruth, 0.1);
    MESSAGE("elements: " << coarse.num_elements() << " at h = 0.2, " << fine.num_elements() << " at h = 0.1");
    CHECK(std::abs(static_cast<double>(coarse.num_elements()) - 332) <= 0.3 * 332);
    CHECK(std::abs(static_cast<double>(fine.num_elements()) - 699) <= 0.3 * 699);
  }
  SUBCASE("quality and conformity") {
    for (double h : {0.2, 0.1}) {
      const Mesh m = triangulate_beam(beam, kTruth, h);
      CHECK(validate_mesh(m));
      for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto& el = m.element(e);
        const Point a = m.node(el[0]), b = m.node(el[1]), c = m.node(el[2]);
        CHECK(test::min_angle_deg(a, b, c) >= 20.0 - 1e-9);
        if (m.element_tag(e) == kBulkTag) {
          const double diam = std::max({distance(a, b), distance(b, c), distance(c, a)});
          CHECK(diam <= 1.6 * h + 1e-12);
          CHECK(diam >= 0.4 * h);
        }
      }
      const auto idx = match_nodes(m, sensors, 1e-9);
      CHECK(idx.size() == 24);
      CHECK_NOTHROW(match_nodes(m, std::vector<Point>{beam.load_point()}, 1e-9));
      // Boundary nodes lie on the outer outline or on the hole polyline.
      const auto hole = hole_boundary(kTruth, hole_polyline_points(kTruth, h));
      for (const auto& be : m.boundary_edges()) {
        const Point p = m.node(be.a);
        if (be.tag == kHoleChain) {
          CHECK(test::polyline_distance(p, hole) < 1e-9);
        } else {
          CHECK(signed_distance_hole(p, kTruth) > 0.0);
        }
      }
    }
  }
  SUBCASE("random admissible holes") {
    Rng rng = make_rng(17);
    std::uniform_real_distribution<double> ux(0, 5), uy(0, 1), ud(0, 0.5), ua(0, 2 * pi), ur(0, 0.5);
    int meshed = 0;
    while (meshed < 20) {
      const HoleParams hole{ux(rng), uy(rng), ud(rng), ua(rng), ur(rng)};
      if (!hole_admissible(hole, beam)) continue;
      const Mesh m = triangulate_beam(beam, hole, 0.2);
      CHECK(validate_mesh(m));
      CHECK(match_nodes(m, sensors, 1e-9).size() == 24);
      ++meshed;
    }
  }
  CHECK_THROWS_AS(triangulate_beam(beam, kTruth, -0.1), InvalidArgument);
  CHECK(hole_polyline_points(kTruth, 0.2) >= 16);
}
