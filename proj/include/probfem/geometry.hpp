#pragma once

#include <vector>

#include "probfem/mesh.hpp"

namespace probfem {

/// Rounded-square hole: center (x, y), side length d, rotation alpha and
/// relative corner radius r (absolute radius r*d). r = 0 is a square, r = 0.5
/// a circle of diameter d.
struct HoleParams {
  double x = 1.0;
  double y = 0.4;
  double d = 0.4;
  double alpha = 0.0;
  double r = 0.25;
};

void check_hole(const HoleParams& hole);

/// Beam of height H over a span L with overhang c on each side, resting on
/// two stiff support blocks centered below the span ends and loaded at the
/// midspan top node. The beam occupies [0, L + 2c] x [0, H].
struct BeamGeometry {
  double height = 1.0;
  double span = 4.0;
  double overhang = 0.5;
  double support_width = 0.2;
  double support_height = 0.1;

  double length() const { return span + 2.0 * overhang; }
  Point load_point() const { return {overhang + 0.5 * span, height}; }
  Point left_support() const { return {overhang, 0.0}; }
  Point right_support() const { return {overhang + span, 0.0}; }
};

/// Element tags of triangulate_beam().
inline constexpr int kBulkTag = 0;
inline constexpr int kStiffTag = 1;

/// Boundary chain tags of triangulate_beam().
inline constexpr int kOuterChain = 0;
inline constexpr int kHoleChain = 1;

/// Arc-length parametrization of the rounded square: four straight edges of
/// length d(1-2r) joined by four quarter arcs of radius r*d, traversed
/// counter-clockwise and rotated by alpha about the center.
class RoundedSquare {
 public:
  explicit RoundedSquare(const HoleParams& params);

  double perimeter() const { return perimeter_; }
  double edge_length() const { return edge_; }
  double arc_length() const { return arc_; }
  /// Point at arc length s (taken modulo the perimeter).
  Point point(double s) const;
  /// Unit tangent at arc length s. At a junction, `from_left` selects the
  /// one-sided limit.
  Point tangent(double s, bool from_left = false) const;
  /// Arc-length positions where edges and arcs meet (8 values, possibly repeated).
  std::vector<double> junctions() const;

 private:
  Point local_to_global(Point q) const;

  HoleParams params_;
  double half_edge_;
  double radius_;
  double edge_;
  double arc_;
  double perimeter_;
};

/// Counter-clockwise closed polyline with `n_points` vertices (the last
/// vertex is not repeated). Piece junctions are always vertices.
std::vector<Point> hole_boundary(const HoleParams& params, int n_points);

/// Exact signed distance to the rounded square: negative inside.
double signed_distance_hole(Point p, const HoleParams& params);

struct AdmissibilityOptions {
  double clearance = 0.02;  ///< minimum gap between hole and beam boundary (m)
};

/// True iff the hole parameters are valid and the hole lies inside the beam
/// rectangle with the given clearance (and hence away from the support and
/// load blocks, which sit outside it). Uses the exact extent of the rounded
/// square rather than a polyline.
bool hole_admissible(const HoleParams& params, const BeamGeometry& beam, const AdmissibilityOptions& options = {});

/// The 24 sensor positions: 0.5 m spacing along the beam perimeter, offset by
/// a quarter spacing from the corners so that they avoid the supports and the
/// load point.
std::vector<Point> beam_sensor_locations(const BeamGeometry& beam, double spacing = 0.5);

struct TriangulationOptions {
  double min_angle_deg = 20.0;
  /// Longest admissible element edge as a multiple of h.
  double max_edge_factor = 1.6;
  /// Spacing of the hexagonal lattice of interior seed points as a multiple
  /// of h (0 disables seeding). Seeds keep a distance of `seed_margin_factor`
  /// times the spacing from the boundary.
  double lattice_spacing_factor = 1.3;
  double seed_margin_factor = 0.6;
  /// Spacing of the initial boundary subdivision as a multiple of h.
  double boundary_spacing_factor = 0.8;
  int max_vertices = 2'000'000;
};

/// Number of vertices of the hole polyline used for meshing: max(16, ceil(perimeter / (0.5 h))).
int hole_polyline_points(const HoleParams& params, double h);

/// Quality triangulation of the beam with supports, minus the hole. Sensor
/// positions, support block corners and the load point are mesh nodes.
/// Stiff blocks carry kStiffTag, the beam kBulkTag. Boundary edges are
/// tagged kOuterChain or kHoleChain.
Mesh triangulate_beam(const BeamGeometry& beam, const HoleParams& hole, double h,
                      const TriangulationOptions& options = {});

}  // namespace probfem
