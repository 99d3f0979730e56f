#pragma once

#include <array>
#include <functional>
#include <vector>

#include "probfem/mesh.hpp"

namespace probfem {

/// Planar straight-line graph: input vertices and constraint segments.
struct Pslg {
  std::vector<Point> points;
  std::vector<std::array<int, 2>> segments;
  std::vector<int> segment_tags;
};

struct DelaunayRefinementCriteria {
  double min_angle_deg = 20.0;
  /// Longest admissible edge of a triangle whose centroid lies at the given point.
  std::function<double(Point)> max_edge;
  int max_vertices = 2'000'000;
};

/// Region of a point: negative outside the domain, otherwise the tag given to
/// triangles whose centroid falls there.
using RegionFunction = std::function<int(Point)>;

struct DelaunayMesh {
  std::vector<Point> points;
  std::vector<std::array<int, 3>> triangles;  ///< counter-clockwise
  std::vector<int> triangle_tags;
  /// Final subsegments, oriented so that the domain lies on their left when
  /// they bound it; the tag is that of the input segment they subdivide.
  std::vector<BoundaryEdge> segments;
};

/// Ruppert-style Delaunay refinement. Segments are recovered by splitting
/// encroached subsegments at their midpoints (conforming Delaunay), then
/// triangles that are too large or have an angle below the bound are split
/// at their circumcenters, unless the circumcenter encroaches a subsegment,
/// in which case the subsegment is split instead.
///
/// Throws TriangulationError when the vertex budget is exhausted.
DelaunayMesh refine_delaunay(const Pslg& pslg, const RegionFunction& region,
                             const DelaunayRefinementCriteria& criteria);

}  // namespace probfem
