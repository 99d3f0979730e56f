#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "probfem/random.hpp"

namespace probfem {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

double dot(Point a, Point b);
double cross(Point a, Point b);
double norm(Point a);
double distance(Point a, Point b);

/// Node indices of one element. Segments (1D) use the first two entries and
/// store -1 in the third.
using Element = std::array<int, 3>;

/// Boundary edge of a 2D mesh. `tag` names the boundary chain the edge lies on
/// (outer boundary, hole, ...).
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int tag = 0;
};

/// Simplicial mesh of segments (dim 1) or triangles (dim 2).
///
/// Node sizes are the minimum diameter of the elements incident to each node.
/// The constructor does not validate; use validate_mesh() for that. Boundary
/// nodes of a 1D mesh are the nodes with a single incident element; in 2D they
/// are the endpoints of the boundary edges, which are detected from the
/// topology when not supplied.
class Mesh {
 public:
  Mesh() = default;
  Mesh(int dim, std::vector<Point> nodes, std::vector<Element> elements,
       std::vector<BoundaryEdge> boundary_edges = {}, std::vector<int> element_tags = {});

  int dim() const { return dim_; }
  int nodes_per_element() const { return dim_ + 1; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size(); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Element>& elements() const { return elements_; }
  const Element& element(std::size_t e) const { return elements_[e]; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  const std::vector<int>& element_tags() const { return element_tags_; }
  int element_tag(std::size_t e) const { return element_tags_[e]; }
  const std::vector<double>& node_sizes() const { return node_sizes_; }

  bool is_boundary_node(int i) const;

  /// Signed length (1D) or signed area (2D, positive for counter-clockwise).
  double element_measure(std::size_t e) const;
  double element_diameter(std::size_t e) const;
  /// Diagonal of the bounding box.
  double diameter() const;

  /// Same connectivity and tags, new coordinates.
  Mesh with_nodes(std::vector<Point> nodes) const;

 private:
  void compute_derived();

  int dim_ = 1;
  std::vector<Point> nodes_;
  std::vector<Element> elements_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<int> element_tags_;
  std::vector<int> boundary_nodes_;
  std::vector<char> boundary_flag_;
  std::vector<double> node_sizes_;
};

/// Result of one level of hierarchical refinement.
struct RefinementMap {
  Mesh fine;
  /// children[e] lists the fine elements of coarse element e (2 in 1D, 4 in 2D; unused slots are -1).
  std::vector<std::array<int, 4>> children;
  /// Fine index of every coarse node.
  std::vector<int> coarse_to_fine_node;
};

Mesh generate_interval_mesh(double length, int n_elements);

/// Splits segments in two and triangles into four congruent triangles.
RefinementMap refine_hierarchical(const Mesh& mesh);

/// True iff all element indices are valid, no element repeats a node and every
/// element has strictly positive measure.
bool validate_mesh(const Mesh& mesh);

/// Uniform sample from the ball of the given radius (an interval in 1D, a disk in 2D).
Point sample_uniform_ball(int dim, double radius, Rng& rng);

struct PerturbationOptions {
  double exponent = 1.0;     ///< p in h_i^p
  double radius = 0.25;      ///< ball radius a
  int max_attempts = 100;    ///< whole-mesh resampling attempts before giving up
};

/// Random-mesh perturbation: every free node moves by h_i^p * alpha_i with
/// alpha_i uniform in a ball of radius `radius`. Boundary nodes slide along
/// their boundary chain: they are perturbed and projected back onto the union
/// of their incident boundary edges. Nodes at chain corners (turning angle
/// above 30 degrees, or shared by more than two chain edges), nodes of a 1D
/// boundary and `fixed_nodes` do not move. Edges between elements of
/// different tags are treated as internal chains in the same way.
///
/// Throws PerturbationError when no valid mesh is found after
/// `options.max_attempts` draws.
Mesh perturb_mesh(const Mesh& mesh, std::span<const int> fixed_nodes, Rng& rng,
                  const PerturbationOptions& options = {});

/// Index of the node nearest to each point. Throws OutsideDomainError if the
/// nearest node is farther than `tolerance`.
std::vector<int> match_nodes(const Mesh& mesh, std::span<const Point> points, double tolerance);

/// Plain-text mesh format: `dim n_nodes n_elements`, node lines `id x [y]`,
/// element lines `id n1 n2 [n3]`, then a `boundary` section of node ids.
void write_mesh_text(const Mesh& mesh, std::ostream& out);
Mesh read_mesh_text(std::istream& in);

/// GMSH ASCII v2.2 import. Only line (type 1) and triangle (type 2) elements
/// are used; with triangles present, lines become boundary edges tagged by
/// their physical group.
Mesh read_gmsh_v22(std::istream& in);

}  // namespace probfem
