#include "probfem/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <queue>
#include <unordered_map>

#include "probfem/errors.hpp"

namespace probfem {
namespace {

using Real = long double;

Real orient(Point a, Point b, Point c) {
  return (static_cast<Real>(b.x) - a.x) * (static_cast<Real>(c.y) - a.y) -
         (static_cast<Real>(b.y) - a.y) * (static_cast<Real>(c.x) - a.x);
}

/// Positive when d lies inside the circumcircle of the counter-clockwise triangle abc.
Real incircle(Point a, Point b, Point c, Point d) {
  const Real adx = static_cast<Real>(a.x) - d.x, ady = static_cast<Real>(a.y) - d.y;
  const Real bdx = static_cast<Real>(b.x) - d.x, bdy = static_cast<Real>(b.y) - d.y;
  const Real cdx = static_cast<Real>(c.x) - d.x, cdy = static_cast<Real>(c.y) - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - bdy * cdx) + (bdx * bdx + bdy * bdy) * (cdx * ady - cdy * adx) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - ady * bdx);
}

Point circumcenter(Point a, Point b, Point c) {
  const Real bx = static_cast<Real>(b.x) - a.x, by = static_cast<Real>(b.y) - a.y;
  const Real cx = static_cast<Real>(c.x) - a.x, cy = static_cast<Real>(c.y) - a.y;
  const Real d = 2 * (bx * cy - by * cx);
  const Real b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  return {static_cast<double>(a.x + (cy * b2 - by * c2) / d), static_cast<double>(a.y + (bx * c2 - cx * b2) / d)};
}

std::uint64_t key_of(int a, int b) {
  auto lo = static_cast<std::uint64_t>(std::min(a, b));
  auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

constexpr int kUnknownRegion = -1000;
constexpr int kSuper = 3;  // vertices 0..2 form the enclosing triangle

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};  // nb[i] is across the edge opposite v[i]
  bool alive = false;
  bool skip = false;
  int region = kUnknownRegion;
};

struct CavityEdge {
  int a, b, outside;
};

class Mesher {
 public:
  Mesher(const RegionFunction& region, const DelaunayRefinementCriteria& criteria, Point lo, Point hi)
      : region_(region), criteria_(criteria) {
    const double w = std::max(hi.x - lo.x, hi.y - lo.y);
    const Point c = 0.5 * (lo + hi);
    scale_ = w;
    pts_ = {{c.x - 40 * w, c.y - 40 * w}, {c.x + 40 * w, c.y - 40 * w}, {c.x, c.y + 40 * w}};
    vtri_ = {0, 0, 0};
    Tri t;
    t.v = {0, 1, 2};
    t.alive = true;
    tris_.push_back(t);
    sin_min_ = std::sin(criteria_.min_angle_deg * std::numbers::pi / 180.0);
  }

  int insert_vertex(Point p, int hint) {
    const int t = locate(p, hint);
    for (int k = 0; k < 3; ++k) {
      if (distance(pts_[tris_[t].v[k]], p) <= 1e-13 * scale_) return tris_[t].v[k];
    }
    auto [cav, boundary] = cavity(p, t);
    const int id = static_cast<int>(pts_.size());
    if (id - kSuper >= criteria_.max_vertices) throw TriangulationError("vertex budget exhausted during refinement");
    pts_.push_back(p);
    vtri_.push_back(-1);
    commit(id, cav, boundary);
    return id;
  }

  void add_subsegment(int a, int b, int tag) {
    if (a == b) return;
    subseg_[key_of(a, b)] = tag;
    seg_queue_.push_back(key_of(a, b));
  }

  /// Splits every encroached subsegment, including those encroached by the splits themselves.
  void recover_segments() {
    while (!seg_queue_.empty()) {
      const auto key = seg_queue_.front();
      seg_queue_.pop_front();
      if (!subseg_.contains(key)) continue;
      if (encroached(key)) split_subsegment(key);
    }
  }

  void refine() {
    for (std::size_t t = 0; t < tris_.size(); ++t) enqueue(static_cast<int>(t));
    while (!tri_queue_.empty()) {
      const int t = tri_queue_.top().second;
      tri_queue_.pop();
      if (!tris_[t].alive || tris_[t].skip || !in_domain(t) || !bad(t)) continue;
      const auto& v = tris_[t].v;
      const Point c = circumcenter(pts_[v[0]], pts_[v[1]], pts_[v[2]]);
      const int loc = locate(c, t);
      bool on_vertex = false;
      for (int k = 0; k < 3; ++k) on_vertex |= distance(pts_[tris_[loc].v[k]], c) <= 1e-13 * scale_;
      if (on_vertex) {
        tris_[t].skip = true;
        continue;
      }
      auto [cav, boundary] = cavity(c, loc);
      std::vector<std::uint64_t> hit;
      for (int ct : cav) {
        for (int k = 0; k < 3; ++k) {
          const int a = tris_[ct].v[(k + 1) % 3], b = tris_[ct].v[(k + 2) % 3];
          const auto key = key_of(a, b);
          if (!subseg_.contains(key)) continue;
          if (dot(pts_[a] - c, pts_[b] - c) < 0.0 && std::find(hit.begin(), hit.end(), key) == hit.end()) {
            hit.push_back(key);
          }
        }
      }
      if (!hit.empty()) {
        for (auto key : hit) {
          if (subseg_.contains(key)) split_subsegment(key);
        }
        recover_segments();
        if (tris_[t].alive) enqueue(t);
        continue;
      }
      if (region_(c) < 0) {
        tris_[t].skip = true;
        continue;
      }
      const int id = static_cast<int>(pts_.size());
      if (id - kSuper >= criteria_.max_vertices) throw TriangulationError("vertex budget exhausted during refinement");
      pts_.push_back(c);
      vtri_.push_back(-1);
      commit(id, cav, boundary);
      recover_segments();
    }
  }

  DelaunayMesh extract() {
    DelaunayMesh out;
    std::vector<int> new_index(pts_.size(), -1);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive || !in_domain(static_cast<int>(t))) continue;
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        int& ni = new_index[tris_[t].v[k]];
        if (ni < 0) {
          ni = static_cast<int>(out.points.size());
          out.points.push_back(pts_[tris_[t].v[k]]);
        }
        tri[k] = ni;
      }
      out.triangles.push_back(tri);
      out.triangle_tags.push_back(tris_[t].region);
    }
    // Deterministic order for segments.
    std::vector<std::pair<std::uint64_t, int>> segs(subseg_.begin(), subseg_.end());
    std::sort(segs.begin(), segs.end());
    for (const auto& [key, tag] : segs) {
      const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffULL);
      int left = -1, right = -1;
      if (!find_edge(a, b, left, right)) throw TriangulationError("subsegment missing from final triangulation");
      const bool left_in = left >= 0 && in_domain(left);
      const bool right_in = right >= 0 && in_domain(right);
      if (!left_in && !right_in) continue;
      if (new_index[a] < 0 || new_index[b] < 0) continue;
      if (left_in) {
        out.segments.push_back({new_index[a], new_index[b], tag});
      } else {
        out.segments.push_back({new_index[b], new_index[a], tag});
      }
    }
    return out;
  }

 private:
  int locate(Point p, int hint) {
    int t = (hint >= 0 && hint < static_cast<int>(tris_.size()) && tris_[hint].alive) ? hint : last_;
    if (!tris_[t].alive) t = first_alive();
    const std::size_t max_steps = 4 * tris_.size() + 64;
    for (std::size_t step = 0; step < max_steps; ++step) {
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + step) % 3);
        const auto& tr = tris_[t];
        if (orient(pts_[tr.v[(i + 1) % 3]], pts_[tr.v[(i + 2) % 3]], p) < 0) {
          if (tr.nb[i] < 0) throw TriangulationError("point outside the enclosing triangle");
          t = tr.nb[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (std::size_t s = 0; s < tris_.size(); ++s) {
      const auto& tr = tris_[s];
      if (!tr.alive) continue;
      if (orient(pts_[tr.v[0]], pts_[tr.v[1]], p) >= 0 && orient(pts_[tr.v[1]], pts_[tr.v[2]], p) >= 0 &&
          orient(pts_[tr.v[2]], pts_[tr.v[0]], p) >= 0) {
        return static_cast<int>(s);
      }
    }
    throw TriangulationError("point location failed");
  }

  int first_alive() const {
    for (std::size_t s = 0; s < tris_.size(); ++s) {
      if (tris_[s].alive) return static_cast<int>(s);
    }
    throw TriangulationError("empty triangulation");
  }

  bool in_circle(int t, Point p) const {
    const auto& v = tris_[t].v;
    return incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], p) > 0;
  }

  std::pair<std::vector<int>, std::vector<CavityEdge>> cavity(Point p, int t0) {
    ++stamp_;
    if (mark_.size() < tris_.size()) mark_.resize(tris_.size(), 0);
    std::vector<int> cav;
    std::vector<int> stack{t0};
    mark_[t0] = stamp_;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      cav.push_back(t);
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nb[i];
        if (n < 0 || mark_[n] == stamp_) continue;
        if (in_circle(n, p)) {
          mark_[n] = stamp_;
          stack.push_back(n);
        }
      }
    }
    // Keep the cavity star-shaped with respect to p.
    for (int pass = 0; pass < 64; ++pass) {
      bool changed = false;
      for (std::size_t ci = 0; ci < cav.size() && !changed; ++ci) {
        const int t = cav[ci];
        for (int i = 0; i < 3; ++i) {
          const int n = tris_[t].nb[i];
          if (n >= 0 && mark_[n] == stamp_) continue;
          const Point a = pts_[tris_[t].v[(i + 1) % 3]], b = pts_[tris_[t].v[(i + 2) % 3]];
          if (orient(a, b, p) > 0) continue;
          if (t != t0) {
            mark_[t] = 0;
            cav.erase(cav.begin() + static_cast<std::ptrdiff_t>(ci));
          } else if (n >= 0) {
            mark_[n] = stamp_;
            cav.push_back(n);
          } else {
            throw TriangulationError("degenerate insertion on the enclosing hull");
          }
          changed = true;
          break;
        }
      }
      if (!changed) break;
    }
    std::vector<CavityEdge> boundary;
    for (int t : cav) {
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nb[i];
        if (n >= 0 && mark_[n] == stamp_) continue;
        boundary.push_back({tris_[t].v[(i + 1) % 3], tris_[t].v[(i + 2) % 3], n});
      }
    }
    return {std::move(cav), std::move(boundary)};
  }

  int allocate() {
    if (!free_.empty()) {
      const int t = free_.back();
      free_.pop_back();
      return t;
    }
    tris_.emplace_back();
    mark_.push_back(0);
    return static_cast<int>(tris_.size()) - 1;
  }

  void commit(int p, const std::vector<int>& cav, const std::vector<CavityEdge>& boundary) {
    for (int t : cav) {
      tris_[t].alive = false;
      free_.push_back(t);
    }
    std::unordered_map<int, int> starts, ends;
    std::vector<int> created;
    created.reserve(boundary.size());
    for (const auto& e : boundary) {
      const int t = allocate();
      Tri& tr = tris_[t];
      tr = Tri{};
      tr.v = {e.a, e.b, p};
      tr.alive = true;
      tr.nb[2] = e.outside;
      if (e.outside >= 0) {
        auto& o = tris_[e.outside];
        for (int j = 0; j < 3; ++j) {
          if (o.v[(j + 1) % 3] == e.b && o.v[(j + 2) % 3] == e.a) o.nb[j] = t;
        }
      }
      starts[e.a] = t;
      ends[e.b] = t;
      created.push_back(t);
    }
    for (int t : created) {
      Tri& tr = tris_[t];
      tr.nb[0] = starts.at(tr.v[1]);
      tr.nb[1] = ends.at(tr.v[0]);
      vtri_[tr.v[0]] = t;
      vtri_[tr.v[1]] = t;
      vtri_[p] = t;
      enqueue(t);
    }
    last_ = created.front();
    for (const auto& e : boundary) {
      const auto key = key_of(e.a, e.b);
      if (subseg_.contains(key)) seg_queue_.push_back(key);
    }
  }

  /// Finds the triangles on the left (a->b counter-clockwise) and right of edge ab.
  bool find_edge(int a, int b, int& left, int& right) const {
    left = right = -1;
    const int start = vtri_[a];
    if (start < 0) return false;
    int t = start;
    for (int guard = 0; guard < 4096; ++guard) {
      const auto& tr = tris_[t];
      int k = 0;
      while (tr.v[k] != a) ++k;
      if (tr.v[(k + 1) % 3] == b) {
        left = t;
        right = tr.nb[(k + 2) % 3];
        return true;
      }
      if (tr.v[(k + 2) % 3] == b) {
        right = t;
        left = tr.nb[(k + 1) % 3];
        return true;
      }
      t = tr.nb[(k + 1) % 3];
      if (t < 0 || t == start) return false;
    }
    return false;
  }

  bool encroached(std::uint64_t key) const {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffULL);
    int left = -1, right = -1;
    if (!find_edge(a, b, left, right)) return true;
    for (int t : {left, right}) {
      if (t < 0) continue;
      for (int k = 0; k < 3; ++k) {
        const int c = tris_[t].v[k];
        if (c == a || c == b || c < kSuper) continue;
        if (dot(pts_[a] - pts_[c], pts_[b] - pts_[c]) < 0.0) return true;
      }
    }
    return false;
  }

  void split_subsegment(std::uint64_t key) {
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffULL);
    const int tag = subseg_.at(key);
    subseg_.erase(key);
    const int m = insert_vertex(0.5 * (pts_[a] + pts_[b]), vtri_[a]);
    add_subsegment(a, m, tag);
    add_subsegment(m, b, tag);
  }

  bool in_domain(int t) {
    auto& tr = tris_[t];
    if (tr.region == kUnknownRegion) {
      if (tr.v[0] < kSuper || tr.v[1] < kSuper || tr.v[2] < kSuper) {
        tr.region = -1;
      } else {
        const Point c = (1.0 / 3.0) * (pts_[tr.v[0]] + pts_[tr.v[1]] + pts_[tr.v[2]]);
        tr.region = region_(c);
      }
    }
    return tr.region >= 0;
  }

  void enqueue(int t) {
    if (!tris_[t].alive) return;
    const auto& v = tris_[t].v;
    const double l = std::max({distance(pts_[v[0]], pts_[v[1]]), distance(pts_[v[1]], pts_[v[2]]),
                               distance(pts_[v[2]], pts_[v[0]])});
    tri_queue_.emplace(l, t);
  }

  bool bad(int t) const {
    const auto& v = tris_[t].v;
    const Point a = pts_[v[0]], b = pts_[v[1]], c = pts_[v[2]];
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    const double lmin = std::min({la, lb, lc}), lmax = std::max({la, lb, lc});
    const double area2 = static_cast<double>(orient(a, b, c));
    if (area2 <= 0.0) return false;
    const double circumradius = la * lb * lc / (2.0 * area2);
    if (lmin / (2.0 * circumradius) < sin_min_) return true;
    const Point centroid = (1.0 / 3.0) * (a + b + c);
    return criteria_.max_edge && lmax > criteria_.max_edge(centroid);
  }

  const RegionFunction& region_;
  const DelaunayRefinementCriteria& criteria_;
  double scale_ = 1.0;
  double sin_min_ = 0.0;
  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> vtri_;
  std::vector<int> mark_{0};
  int stamp_ = 0;
  int last_ = 0;
  std::unordered_map<std::uint64_t, int> subseg_;
  std::deque<std::uint64_t> seg_queue_;
  // Largest triangles first, which gives more uniform element sizes.
  std::priority_queue<std::pair<double, int>> tri_queue_;
};

}  // namespace

DelaunayMesh refine_delaunay(const Pslg& pslg, const RegionFunction& region,
                             const DelaunayRefinementCriteria& criteria) {
  if (pslg.points.size() < 3) throw TriangulationError("at least three input points are required");
  if (pslg.segment_tags.size() != pslg.segments.size()) throw InvalidArgument("one tag per segment required");
  Point lo = pslg.points.front(), hi = lo;
  for (const auto& p : pslg.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  Mesher mesher(region, criteria, lo, hi);
  std::vector<int> id(pslg.points.size());
  int hint = 0;
  for (std::size_t i = 0; i < pslg.points.size(); ++i) {
    id[i] = mesher.insert_vertex(pslg.points[i], hint);
    hint = -1;
  }
  for (std::size_t s = 0; s < pslg.segments.size(); ++s) {
    mesher.add_subsegment(id[pslg.segments[s][0]], id[pslg.segments[s][1]], pslg.segment_tags[s]);
  }
  mesher.recover_segments();
  mesher.refine();
  return mesher.extract();
}

}  // namespace probfem
