#include "probfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "probfem/errors.hpp"

namespace probfem {

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a) { return std::hypot(a.x, a.y); }
double distance(Point a, Point b) { return norm(a - b); }

namespace {

std::uint64_t edge_key(int a, int b) {
  auto lo = static_cast<std::uint64_t>(std::min(a, b));
  auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

bool element_indices_valid(const Element& el, int npe, std::size_t n_nodes) {
  for (int k = 0; k < npe; ++k) {
    if (el[k] < 0 || static_cast<std::size_t>(el[k]) >= n_nodes) return false;
  }
  return true;
}

}  // namespace

Mesh::Mesh(int dim, std::vector<Point> nodes, std::vector<Element> elements,
           std::vector<BoundaryEdge> boundary_edges, std::vector<int> element_tags)
    : dim_(dim),
      nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      boundary_edges_(std::move(boundary_edges)),
      element_tags_(std::move(element_tags)) {
  if (dim_ != 1 && dim_ != 2) throw InvalidArgument("mesh dimension must be 1 or 2");
  if (element_tags_.empty()) element_tags_.assign(elements_.size(), 0);
  if (element_tags_.size() != elements_.size()) throw InvalidArgument("one tag per element required");
  if (dim_ == 1) {
    for (auto& el : elements_) el[2] = -1;
  }
  compute_derived();
}

void Mesh::compute_derived() {
  const int npe = nodes_per_element();
  const std::size_t n = nodes_.size();

  if (dim_ == 2 && boundary_edges_.empty()) {
    std::unordered_map<std::uint64_t, std::pair<int, int>> count;  // key -> (uses, oriented a)
    std::unordered_map<std::uint64_t, std::pair<int, int>> oriented;
    std::vector<std::uint64_t> order;
    for (const auto& el : elements_) {
      if (!element_indices_valid(el, npe, n)) continue;
      for (int k = 0; k < 3; ++k) {
        int a = el[k], b = el[(k + 1) % 3];
        auto key = edge_key(a, b);
        auto [it, inserted] = count.try_emplace(key, 0, 0);
        if (inserted) {
          order.push_back(key);
          oriented[key] = {a, b};
        }
        ++it->second.first;
      }
    }
    for (auto key : order) {
      if (count[key].first == 1) {
        auto [a, b] = oriented[key];
        boundary_edges_.push_back({a, b, 0});
      }
    }
  }

  boundary_flag_.assign(n, 0);
  if (dim_ == 1) {
    std::vector<int> incidence(n, 0);
    for (const auto& el : elements_) {
      if (!element_indices_valid(el, npe, n)) continue;
      ++incidence[el[0]];
      ++incidence[el[1]];
    }
    for (std::size_t i = 0; i < n; ++i) boundary_flag_[i] = incidence[i] == 1;
  } else {
    for (const auto& e : boundary_edges_) {
      if (e.a >= 0 && static_cast<std::size_t>(e.a) < n) boundary_flag_[e.a] = 1;
      if (e.b >= 0 && static_cast<std::size_t>(e.b) < n) boundary_flag_[e.b] = 1;
    }
  }
  boundary_nodes_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (boundary_flag_[i]) boundary_nodes_.push_back(static_cast<int>(i));
  }

  node_sizes_.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    if (!element_indices_valid(elements_[e], npe, n)) continue;
    const double d = element_diameter(e);
    for (int k = 0; k < npe; ++k) {
      auto& s = node_sizes_[elements_[e][k]];
      s = std::min(s, d);
    }
  }
  for (auto& s : node_sizes_) {
    if (!std::isfinite(s)) s = 0.0;
  }
}

bool Mesh::is_boundary_node(int i) const { return boundary_flag_.at(i) != 0; }

double Mesh::element_measure(std::size_t e) const {
  const auto& el = elements_[e];
  if (dim_ == 1) return nodes_[el[1]].x - nodes_[el[0]].x;
  return 0.5 * cross(nodes_[el[1]] - nodes_[el[0]], nodes_[el[2]] - nodes_[el[0]]);
}

double Mesh::element_diameter(std::size_t e) const {
  const auto& el = elements_[e];
  if (dim_ == 1) return std::abs(nodes_[el[1]].x - nodes_[el[0]].x);
  return std::max({distance(nodes_[el[0]], nodes_[el[1]]), distance(nodes_[el[1]], nodes_[el[2]]),
                   distance(nodes_[el[2]], nodes_[el[0]])});
}

double Mesh::diameter() const {
  if (nodes_.empty()) return 0.0;
  double xmin = nodes_[0].x, xmax = xmin, ymin = nodes_[0].y, ymax = ymin;
  for (const auto& p : nodes_) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  return std::hypot(xmax - xmin, ymax - ymin);
}

Mesh Mesh::with_nodes(std::vector<Point> nodes) const {
  if (nodes.size() != nodes_.size()) throw InvalidArgument("node count mismatch");
  return Mesh(dim_, std::move(nodes), elements_, boundary_edges_, element_tags_);
}

Mesh generate_interval_mesh(double length, int n_elements) {
  if (!(length > 0.0)) throw InvalidArgument("interval length must be positive");
  if (n_elements < 1) throw InvalidArgument("element count must be at least 1");
  std::vector<Point> nodes(n_elements + 1);
  for (int i = 0; i <= n_elements; ++i) nodes[i] = {length * i / n_elements, 0.0};
  nodes.back().x = length;
  std::vector<Element> elements(n_elements);
  for (int e = 0; e < n_elements; ++e) elements[e] = {e, e + 1, -1};
  return Mesh(1, std::move(nodes), std::move(elements));
}

RefinementMap refine_hierarchical(const Mesh& mesh) {
  RefinementMap map;
  const auto& nodes = mesh.nodes();
  const auto& elements = mesh.elements();

  if (mesh.dim() == 1) {
    std::vector<Point> fine_nodes = nodes;
    std::vector<std::array<int, 2>> halves;
    for (const auto& el : elements) {
      int mid = static_cast<int>(fine_nodes.size());
      fine_nodes.push_back(0.5 * (nodes[el[0]] + nodes[el[1]]));
      halves.push_back({el[0], mid});
      halves.push_back({mid, el[1]});
    }
    // Renumber left to right so the fine system keeps a narrow band.
    std::vector<int> order(fine_nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fine_nodes[a].x < fine_nodes[b].x; });
    std::vector<int> new_index(order.size());
    std::vector<Point> sorted(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      new_index[order[k]] = static_cast<int>(k);
      sorted[k] = fine_nodes[order[k]];
    }
    std::vector<Element> fine_elements;
    std::vector<int> tags;
    map.children.resize(elements.size());
    for (std::size_t e = 0; e < elements.size(); ++e) {
      for (int c = 0; c < 2; ++c) {
        const auto& hlf = halves[2 * e + c];
        map.children[e][c] = static_cast<int>(fine_elements.size());
        fine_elements.push_back({new_index[hlf[0]], new_index[hlf[1]], -1});
        tags.push_back(mesh.element_tag(e));
      }
      map.children[e][2] = map.children[e][3] = -1;
    }
    map.coarse_to_fine_node.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) map.coarse_to_fine_node[i] = new_index[i];
    map.fine = Mesh(1, std::move(sorted), std::move(fine_elements), {}, std::move(tags));
    return map;
  }

  std::vector<Point> fine_nodes = nodes;
  std::unordered_map<std::uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), static_cast<int>(fine_nodes.size()));
    if (inserted) fine_nodes.push_back(0.5 * (nodes[a] + nodes[b]));
    return it->second;
  };
  std::vector<Element> fine_elements;
  std::vector<int> tags;
  map.children.resize(elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& el = elements[e];
    const int a = el[0], b = el[1], c = el[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    const std::array<Element, 4> kids{{{a, ab, ca}, {ab, b, bc}, {ca, bc, c}, {ab, bc, ca}}};
    for (int k = 0; k < 4; ++k) {
      map.children[e][k] = static_cast<int>(fine_elements.size());
      fine_elements.push_back(kids[k]);
      tags.push_back(mesh.element_tag(e));
    }
  }
  std::vector<BoundaryEdge> fine_edges;
  for (const auto& be : mesh.boundary_edges()) {
    const int m = mid(be.a, be.b);
    fine_edges.push_back({be.a, m, be.tag});
    fine_edges.push_back({m, be.b, be.tag});
  }
  map.coarse_to_fine_node.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) map.coarse_to_fine_node[i] = static_cast<int>(i);
  map.fine = Mesh(2, std::move(fine_nodes), std::move(fine_elements), std::move(fine_edges), std::move(tags));
  return map;
}

bool validate_mesh(const Mesh& mesh) {
  const int npe = mesh.nodes_per_element();
  const std::size_t n = mesh.num_nodes();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    if (!element_indices_valid(el, npe, n)) return false;
    for (int i = 0; i < npe; ++i) {
      for (int j = i + 1; j < npe; ++j) {
        if (el[i] == el[j]) return false;
      }
    }
    if (!(mesh.element_measure(e) > 0.0)) return false;
  }
  for (const auto& be : mesh.boundary_edges()) {
    if (be.a < 0 || be.b < 0 || static_cast<std::size_t>(be.a) >= n || static_cast<std::size_t>(be.b) >= n) return false;
  }
  return true;
}

Point sample_uniform_ball(int dim, double radius, Rng& rng) {
  if (radius < 0.0) throw InvalidArgument("ball radius must be non-negative");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (dim == 1) return {radius * (2.0 * unit(rng) - 1.0), 0.0};
  if (dim != 2) throw InvalidArgument("ball dimension must be 1 or 2");
  const double r = radius * std::sqrt(unit(rng));
  const double phi = 2.0 * std::numbers::pi * unit(rng);
  return {r * std::cos(phi), r * std::sin(phi)};
}

namespace {

enum class NodeMotion { Fixed, Free, Slide };

struct SlideGeometry {
  Point prev;
  Point next;
};

Point project_onto_segment(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

}  // namespace

Mesh perturb_mesh(const Mesh& mesh, std::span<const int> fixed_nodes, Rng& rng,
                  const PerturbationOptions& options) {
  if (!(options.exponent > 0.0)) throw InvalidArgument("perturbation exponent must be positive");
  const std::size_t n = mesh.num_nodes();
  std::vector<NodeMotion> motion(n, NodeMotion::Free);
  std::vector<SlideGeometry> slide(n);

  for (int i : fixed_nodes) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) throw InvalidArgument("fixed node index out of range");
  }

  if (mesh.dim() == 1) {
    for (int i : mesh.boundary_nodes()) motion[i] = NodeMotion::Fixed;
  } else {
    // Chains: boundary edges plus interfaces between differently tagged elements.
    std::vector<std::vector<int>> chain_nbrs(n);
    for (const auto& be : mesh.boundary_edges()) {
      chain_nbrs[be.a].push_back(be.b);
      chain_nbrs[be.b].push_back(be.a);
    }
    std::unordered_map<std::uint64_t, std::pair<int, int>> edge_tag;  // key -> (tag, uses)
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      const auto& el = mesh.element(e);
      for (int k = 0; k < 3; ++k) {
        const auto key = edge_key(el[k], el[(k + 1) % 3]);
        auto [it, inserted] = edge_tag.try_emplace(key, mesh.element_tag(e), 1);
        if (!inserted && it->second.first != mesh.element_tag(e)) {
          chain_nbrs[el[k]].push_back(el[(k + 1) % 3]);
          chain_nbrs[el[(k + 1) % 3]].push_back(el[k]);
        }
      }
    }
    const double max_turn = 30.0 * std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& nb = chain_nbrs[i];
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      if (nb.empty()) continue;
      if (nb.size() != 2) {
        motion[i] = NodeMotion::Fixed;
        continue;
      }
      const Point p = mesh.node(i), a = mesh.node(nb[0]), b = mesh.node(nb[1]);
      const Point d1 = p - a, d2 = b - p;
      const double turn = std::atan2(std::abs(cross(d1, d2)), dot(d1, d2));
      if (turn > max_turn) {
        motion[i] = NodeMotion::Fixed;
      } else {
        motion[i] = NodeMotion::Slide;
        slide[i] = {a, b};
      }
    }
  }
  for (int i : fixed_nodes) motion[i] = NodeMotion::Fixed;

  const auto& h = mesh.node_sizes();
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    std::vector<Point> moved = mesh.nodes();
    for (std::size_t i = 0; i < n; ++i) {
      if (motion[i] == NodeMotion::Fixed) continue;
      const double scale = std::pow(h[i], options.exponent);
      const Point alpha = sample_uniform_ball(mesh.dim(), options.radius, rng);
      Point q = mesh.node(i) + scale * alpha;
      if (motion[i] == NodeMotion::Slide) {
        const Point p = mesh.node(i);
        const Point qa = project_onto_segment(q, slide[i].prev, p);
        const Point qb = project_onto_segment(q, p, slide[i].next);
        q = distance(q, qa) <= distance(q, qb) ? qa : qb;
      }
      moved[i] = q;
    }
    Mesh candidate = mesh.with_nodes(std::move(moved));
    if (validate_mesh(candidate)) return candidate;
  }
  throw PerturbationError("no valid perturbed mesh after " + std::to_string(options.max_attempts) + " attempts");
}

std::vector<int> match_nodes(const Mesh& mesh, std::span<const Point> points, double tolerance) {
  std::vector<int> result;
  result.reserve(points.size());
  for (const auto& p : points) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      const double d = distance(mesh.node(i), p);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best < 0 || best_d > tolerance) {
      std::ostringstream msg;
      msg << "no mesh node within " << tolerance << " of (" << p.x << ", " << p.y << ")";
      throw OutsideDomainError(msg.str());
    }
    result.push_back(best);
  }
  return result;
}

void write_mesh_text(const Mesh& mesh, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << mesh.dim() << ' ' << mesh.num_nodes() << ' ' << mesh.num_elements() << '\n';
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    out << i << ' ' << mesh.node(i).x;
    if (mesh.dim() == 2) out << ' ' << mesh.node(i).y;
    out << '\n';
  }
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    out << e << ' ' << el[0] << ' ' << el[1];
    if (mesh.dim() == 2) out << ' ' << el[2];
    out << '\n';
  }
  out << "boundary\n";
  for (int i : mesh.boundary_nodes()) out << i << '\n';
  out.precision(old_precision);
}

Mesh read_mesh_text(std::istream& in) {
  int dim = 0;
  std::size_t n_nodes = 0, n_elements = 0;
  if (!(in >> dim >> n_nodes >> n_elements)) throw InvalidArgument("mesh text: bad header");
  if (dim != 1 && dim != 2) throw InvalidArgument("mesh text: dimension must be 1 or 2");
  std::vector<Point> nodes(n_nodes);
  std::vector<char> seen(n_nodes, 0);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    std::size_t id = 0;
    Point p;
    if (!(in >> id >> p.x)) throw InvalidArgument("mesh text: bad node line");
    if (dim == 2 && !(in >> p.y)) throw InvalidArgument("mesh text: bad node line");
    if (id >= n_nodes || seen[id]) throw InvalidArgument("mesh text: bad node id");
    seen[id] = 1;
    nodes[id] = p;
  }
  std::vector<Element> elements(n_elements, Element{-1, -1, -1});
  for (std::size_t k = 0; k < n_elements; ++k) {
    std::size_t id = 0;
    Element el{-1, -1, -1};
    if (!(in >> id >> el[0] >> el[1])) throw InvalidArgument("mesh text: bad element line");
    if (dim == 2 && !(in >> el[2])) throw InvalidArgument("mesh text: bad element line");
    if (id >= n_elements) throw InvalidArgument("mesh text: bad element id");
    elements[id] = el;
  }
  std::string word;
  if (!(in >> word) || word != "boundary") throw InvalidArgument("mesh text: missing boundary section");
  // The boundary section is informational; boundary nodes are recovered from the topology.
  int id = 0;
  while (in >> id) {
    if (id < 0 || static_cast<std::size_t>(id) >= n_nodes) throw InvalidArgument("mesh text: bad boundary node id");
  }
  return Mesh(dim, std::move(nodes), std::move(elements));
}

Mesh read_gmsh_v22(std::istream& in) {
  std::string line;
  std::map<long, int> node_index;
  std::vector<Point> nodes;
  struct RawElement {
    int type;
    int tag;
    std::vector<long> nodes;
  };
  std::vector<RawElement> raw;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (line.rfind("$MeshFormat", 0) == 0) {
      std::getline(in, line);
      std::istringstream fmt(line);
      double version = 0;
      fmt >> version;
      if (version < 2.0 || version >= 3.0) throw InvalidArgument("gmsh: only ASCII format 2.2 is supported");
      have_format = true;
    } else if (line.rfind("$Nodes", 0) == 0) {
      std::size_t count = 0;
      in >> count;
      for (std::size_t k = 0; k < count; ++k) {
        long id;
        double x, y, z;
        if (!(in >> id >> x >> y >> z)) throw InvalidArgument("gmsh: bad node line");
        node_index[id] = static_cast<int>(nodes.size());
        nodes.push_back({x, y});
      }
    } else if (line.rfind("$Elements", 0) == 0) {
      std::size_t count = 0;
      in >> count;
      std::getline(in, line);
      for (std::size_t k = 0; k < count; ++k) {
        if (!std::getline(in, line)) throw InvalidArgument("gmsh: truncated element block");
        std::istringstream es(line);
        long id;
        int type, ntags;
        es >> id >> type >> ntags;
        std::vector<int> tags(ntags);
        for (auto& t : tags) es >> t;
        RawElement re{type, ntags > 0 ? tags[0] : 0, {}};
        long v;
        while (es >> v) re.nodes.push_back(v);
        if (type == 1 || type == 2) raw.push_back(std::move(re));
      }
    }
  }
  if (!have_format) throw InvalidArgument("gmsh: missing $MeshFormat");
  const bool has_triangles = std::any_of(raw.begin(), raw.end(), [](const RawElement& r) { return r.type == 2; });
  auto lookup = [&](long id) {
    auto it = node_index.find(id);
    if (it == node_index.end()) throw InvalidArgument("gmsh: element references unknown node");
    return it->second;
  };
  std::vector<Element> elements;
  std::vector<BoundaryEdge> edges;
  if (has_triangles) {
    for (const auto& r : raw) {
      if (r.type == 2) {
        Element el{lookup(r.nodes.at(0)), lookup(r.nodes.at(1)), lookup(r.nodes.at(2))};
        if (cross(nodes[el[1]] - nodes[el[0]], nodes[el[2]] - nodes[el[0]]) < 0) std::swap(el[1], el[2]);
        elements.push_back(el);
      } else {
        edges.push_back({lookup(r.nodes.at(0)), lookup(r.nodes.at(1)), r.tag});
      }
    }
    return Mesh(2, std::move(nodes), std::move(elements), std::move(edges));
  }
  for (const auto& r : raw) {
    Element el{lookup(r.nodes.at(0)), lookup(r.nodes.at(1)), -1};
    if (nodes[el[1]].x < nodes[el[0]].x) std::swap(el[0], el[1]);
    elements.push_back(el);
  }
  return Mesh(1, std::move(nodes), std::move(elements));
}

}  // namespace probfem
