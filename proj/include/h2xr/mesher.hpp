#pragma once

// Truncation of labeled geodesic polygons and graded triangulation in disk
// coordinates.  All sizes in this file are Euclidean lengths in the unit
// disk; hyperbolic quantities enter only through the geodesic shapes of the
// boundary edges.  Meshing is deterministic: no random source, fixed
// insertion orders, fixed lattice offsets.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "domains.hpp"

namespace h2xr {

// Polygon with every ideal vertex pulled back to radius r on its ray.  The
// label sequence is inherited unchanged; edge i joins vertices[i] and
// vertices[i+1] along the geodesic between them.
struct TruncatedPolygon {
  LabeledPolygon source;
  double r = 0.0;
  std::vector<complexd> vertices;

  int size() const { return static_cast<int>(vertices.size()); }
  const EdgeLabel& label(int i) const {
    return source.labels[(i % size() + size()) % size()];
  }
  Geodesic edge_geodesic(int i) const {
    const int n = size();
    return geodesic_between(DiskPoint(vertices[(i % n + n) % n]),
                            DiskPoint(vertices[((i + 1) % n + n) % n]));
  }
};

inline TruncatedPolygon truncate(const LabeledPolygon& P, double r) {
  if (!(r > 0.0) || !(r < 1.0))
    throw std::invalid_argument("truncate: r outside (0,1)");
  const int n = P.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (P.vertices[i].ideal && P.vertices[j].ideal &&
          P.vertices[i].angle == P.vertices[j].angle)
        throw std::invalid_argument("truncate: repeated ideal angle");
  TruncatedPolygon T;
  T.source = P;
  T.r = r;
  for (const auto& v : P.vertices)
    T.vertices.push_back(v.ideal ? r * std::polar(1.0, v.angle) : v.z);
  for (int i = 0; i < n; ++i)
    if (T.vertices[i] == T.vertices[(i + 1) % n])
      throw std::invalid_argument("truncate: resulting polygon non-simple");
  // Truncated edges bow differently from the ideal ones, so simplicity has
  // to be rechecked.  segments_cross is strict, which makes testing adjacent
  // edges safe: sharing the corner node is not a crossing.
  std::vector<std::vector<complexd>> poly(n);
  for (int i = 0; i < n; ++i)
    poly[i] = detail::sample_edge(T.edge_geodesic(i), 64);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (size_t s = 0; s + 1 < poly[i].size(); ++s)
        for (size_t t = 0; t + 1 < poly[j].size(); ++t)
          if (detail::segments_cross(poly[i][s], poly[i][s + 1], poly[j][t],
                                     poly[j][t + 1]))
            throw std::invalid_argument(
                "truncate: resulting polygon non-simple");
  return T;
}

// Conforming triangle mesh of a truncated polygon.  Triangles are
// counterclockwise; boundary_edges walk the boundary once in polygon order,
// each tagged with the source edge index; corners[i] is the node sitting at
// domain.vertices[i].  exempt_disks mark sharp-corner neighborhoods where
// the angle bound is waived (the corner angle itself is below the bound, so
// no mesh can meet it there).
struct TriMesh2D {
  std::vector<complexd> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 3>> boundary_edges;  // node, node, edge tag
  std::vector<int> corners;
  std::vector<std::array<double, 3>> exempt_disks;  // cx, cy, radius
  TruncatedPolygon domain;
  double h_target = 0.0;
  double grading = 1.0;
};

namespace detail {

inline double orient(complexd a, complexd b, complexd c) {
  long double v = (static_cast<long double>(b.real()) - a.real()) *
                      (static_cast<long double>(c.imag()) - a.imag()) -
                  (static_cast<long double>(b.imag()) - a.imag()) *
                      (static_cast<long double>(c.real()) - a.real());
  return static_cast<double>(v);
}

// Positive iff p lies strictly inside the circumcircle of ccw (a,b,c).
inline long double in_circumdisk(complexd a, complexd b, complexd c,
                                 complexd p) {
  long double ax = a.real() - p.real(), ay = a.imag() - p.imag();
  long double bx = b.real() - p.real(), by = b.imag() - p.imag();
  long double cx = c.real() - p.real(), cy = c.imag() - p.imag();
  long double a2 = ax * ax + ay * ay;
  long double b2 = bx * bx + by * by;
  long double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
         a2 * (bx * cy - by * cx);
}

inline complexd circumcenter(complexd a, complexd b, complexd c) {
  long double bx = b.real() - a.real(), by = b.imag() - a.imag();
  long double cx = c.real() - a.real(), cy = c.imag() - a.imag();
  long double d = 2.0L * (bx * cy - by * cx);
  if (d == 0.0L)
    return complexd(std::numeric_limits<double>::infinity(), 0.0);
  long double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  long double ux = (cy * b2 - by * c2) / d;
  long double uy = (bx * c2 - cx * b2) / d;
  return complexd(a.real() + static_cast<double>(ux),
                  a.imag() + static_cast<double>(uy));
}

inline double tri_min_angle(complexd a, complexd b, complexd c) {
  auto corner = [](complexd p, complexd q, complexd r) {
    complexd u = q - p, v = r - p;
    double cross = u.real() * v.imag() - u.imag() * v.real();
    double dot = u.real() * v.real() + u.imag() * v.imag();
    return std::atan2(std::abs(cross), dot);
  };
  return std::min({corner(a, b, c), corner(b, c, a), corner(c, a, b)});
}

// Uniform hash grid over the disk for proximity queries.  Supports
// "any point within r" and "nearest distance, capped".
class PointGrid {
 public:
  explicit PointGrid(double cell) : cell_(cell) {}

  void insert(complexd p) {
    buckets_[key(cell_index(p.real()), cell_index(p.imag()))].push_back(p);
    x0_ = std::min(x0_, p.real());
    x1_ = std::max(x1_, p.real());
    y0_ = std::min(y0_, p.imag());
    y1_ = std::max(y1_, p.imag());
  }

  bool any_within(complexd p, double r) const {
    int ix0 = cell_index(p.real() - r), ix1 = cell_index(p.real() + r);
    int iy0 = cell_index(p.imag() - r), iy1 = cell_index(p.imag() + r);
    double r2 = r * r;
    for (int ix = ix0; ix <= ix1; ++ix)
      for (int iy = iy0; iy <= iy1; ++iy) {
        auto it = buckets_.find(key(ix, iy));
        if (it == buckets_.end()) continue;
        for (complexd q : it->second)
          if (std::norm(p - q) < r2) return true;
      }
    return false;
  }

  // Nearest distance to a stored point, or rmax if none lies closer.
  double nearest_within(complexd p, double rmax) const {
    if (buckets_.empty()) return rmax;
    double dx = std::max({0.0, x0_ - p.real(), p.real() - x1_});
    double dy = std::max({0.0, y0_ - p.imag(), p.imag() - y1_});
    if (dx * dx + dy * dy >= rmax * rmax) return rmax;
    double best = rmax;
    int ic = cell_index(p.real()), jc = cell_index(p.imag());
    int rings = static_cast<int>(rmax / cell_) + 2;
    for (int ring = 0; ring <= rings; ++ring) {
      if (best <= (ring - 1) * cell_) break;  // no closer point can remain
      for (int ix = ic - ring; ix <= ic + ring; ++ix)
        for (int iy = jc - ring; iy <= jc + ring; ++iy) {
          if (std::max(std::abs(ix - ic), std::abs(iy - jc)) != ring) continue;
          auto it = buckets_.find(key(ix, iy));
          if (it == buckets_.end()) continue;
          for (complexd q : it->second)
            best = std::min(best, std::abs(p - q));
        }
    }
    return best;
  }

 private:
  int cell_index(double x) const {
    return static_cast<int>(std::floor(x / cell_));
  }
  static long long key(int ix, int iy) {
    return (static_cast<long long>(ix + 1048576) << 21) +
           static_cast<long long>(iy + 1048576);
  }
  double cell_;
  double x0_ = 1e30, x1_ = -1e30, y0_ = 1e30, y1_ = -1e30;
  std::unordered_map<long long, std::vector<complexd>> buckets_;
};

// Boundary polyline bucketed by y for O(1) even-odd inside tests.
class SegmentBuckets {
 public:
  SegmentBuckets(const std::vector<std::pair<complexd, complexd>>& segs,
                 double cell)
      : y0_(-1.01), cell_(std::max(cell, 1e-4)) {
    rows_.resize(static_cast<size_t>(2.02 / cell_) + 2);
    for (const auto& s : segs) {
      int r0 = row(std::min(s.first.imag(), s.second.imag()));
      int r1 = row(std::max(s.first.imag(), s.second.imag()));
      for (int r = r0; r <= r1; ++r) rows_[r].push_back(s);
    }
  }

  bool inside(complexd p) const {
    bool in = false;
    for (const auto& [a, b] : rows_[row(p.imag())]) {
      if ((a.imag() > p.imag()) == (b.imag() > p.imag())) continue;
      double x = a.real() + (p.imag() - a.imag()) / (b.imag() - a.imag()) *
                                (b.real() - a.real());
      if (x > p.real()) in = !in;
    }
    return in;
  }

 private:
  int row(double y) const {
    int r = static_cast<int>((y - y0_) / cell_);
    return std::clamp(r, 0, static_cast<int>(rows_.size()) - 1);
  }
  double y0_, cell_;
  std::vector<std::vector<std::pair<complexd, complexd>>> rows_;
};

// Target edge length: h away from the boundary edges labeled +-infinity,
// h/grading on them, linear ramp in between.  The cloud holds dense samples
// of those edges.
struct SizeField {
  double h = 0.1;
  double hmin = 0.1;
  double slope = 0.3;
  double rmax = 0.0;
  PointGrid cloud;

  SizeField(double h_target, double grading_factor)
      : h(h_target),
        hmin(h_target / grading_factor),
        rmax((h_target - h_target / grading_factor) / slope + 1e-12),
        cloud(std::max(h_target / 2.0, 1e-4)) {}

  double operator()(complexd z) const {
    double d = cloud.nearest_within(z, rmax);
    return std::min(h, hmin + slope * d);
  }
};

// Incremental Delaunay triangulation (Bowyer-Watson) with triangle
// adjacency and walk location.  Indices 0..2 are the enclosing
// super-triangle; callers append real points after it.
class Delaunay {
 public:
  struct Tri {
    int v[3];
    int nb[3];  // nb[k] faces edge (v[k+1], v[k+2]); -1 = outside
    bool alive = true;
  };

  std::vector<complexd> pts;
  std::vector<Tri> tris;

  Delaunay() {
    pts.push_back(complexd(-16.0, -10.0));
    pts.push_back(complexd(16.0, -10.0));
    pts.push_back(complexd(0.0, 20.0));
    tris.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, true});
    mark_.push_back(0);
  }

  int append_point(complexd z) {
    pts.push_back(z);
    return static_cast<int>(pts.size()) - 1;
  }

  bool is_super(int v) const { return v < 3; }

  void insert(int ip) {
    complexd p = pts[ip];
    int t0 = locate(p);

    // Grow the cavity of triangles whose circumdisk contains p.
    ++epoch_;
    std::vector<int> cavity;
    std::deque<int> queue;
    auto push = [&](int t) {
      if (t < 0 || !tris[t].alive || mark_[t] == epoch_) return;
      mark_[t] = epoch_;
      cavity.push_back(t);
      queue.push_back(t);
    };
    push(t0);
    while (!queue.empty()) {
      int t = queue.front();
      queue.pop_front();
      for (int k = 0; k < 3; ++k) {
        int u = tris[t].nb[k];
        if (u < 0 || !tris[u].alive || mark_[u] == epoch_) continue;
        const Tri& n = tris[u];
        if (in_circumdisk(pts[n.v[0]], pts[n.v[1]], pts[n.v[2]], p) > 0.0L)
          push(u);
      }
    }

    // Collect boundary edges, absorbing neighbors until every fan triangle
    // (p, a, b) would be strictly ccw; collinear boundary chains otherwise
    // produce zero-area triangles.
    struct BEdge {
      int a, b, outer;
    };
    std::vector<BEdge> boundary;
    for (int guard = 0; guard < 64; ++guard) {
      boundary.clear();
      bool degenerate = false;
      for (int t : cavity) {
        for (int k = 0; k < 3; ++k) {
          int u = tris[t].nb[k];
          if (u >= 0 && tris[u].alive && mark_[u] == epoch_) continue;
          int a = tris[t].v[(k + 1) % 3];
          int b = tris[t].v[(k + 2) % 3];
          if (orient(p, pts[a], pts[b]) <= 0.0) {
            if (u < 0)
              throw std::runtime_error("triangulate: degenerate insertion");
            mark_[u] = epoch_;
            cavity.push_back(u);
            degenerate = true;
            break;
          }
          boundary.push_back(BEdge{a, b, u});
        }
        if (degenerate) break;
      }
      if (!degenerate) break;
      if (guard == 63)
        throw std::runtime_error("triangulate: cavity did not stabilize");
    }

    for (int t : cavity) tris[t].alive = false;

    // Retriangulate the cavity as a fan around p, walking the boundary
    // cycle so adjacent fan triangles can be linked directly.
    std::unordered_map<int, std::pair<int, int>> next;
    next.reserve(boundary.size() * 2);
    for (const auto& e : boundary) next[e.a] = {e.b, e.outer};
    std::vector<int> created;
    int start = boundary.front().a;
    int a = start;
    for (size_t step = 0; step < boundary.size(); ++step) {
      auto [b, outer] = next.at(a);
      int tn = new_tri(ip, a, b);
      tris[tn].nb[0] = outer;  // edge (a, b)
      if (outer >= 0) {
        for (int k = 0; k < 3; ++k) {
          int oa = tris[outer].v[(k + 1) % 3], ob = tris[outer].v[(k + 2) % 3];
          if ((oa == a && ob == b) || (oa == b && ob == a))
            tris[outer].nb[k] = tn;
        }
      }
      created.push_back(tn);
      a = b;
    }
    if (a != start)
      throw std::runtime_error("triangulate: cavity boundary not a cycle");
    const int m = static_cast<int>(created.size());
    for (int i = 0; i < m; ++i) {
      // created[i] = (p, a_i, b_i) with b_i = a_{i+1}.
      tris[created[i]].nb[1] = created[(i + 1) % m];  // edge (b_i, p)
      tris[created[i]].nb[2] = created[(i + m - 1) % m];  // edge (p, a_i)
    }
    hint_ = created.front();
  }

  int locate(complexd p) const {
    int t = hint_;
    if (t < 0 || t >= static_cast<int>(tris.size()) || !tris[t].alive) {
      t = -1;
      for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i)
        if (tris[i].alive) {
          t = i;
          break;
        }
    }
    long long steps = 8 * static_cast<long long>(tris.size()) + 64;
    while (t >= 0 && steps-- > 0) {
      int move = -1;
      double worst = 0.0;
      for (int k = 0; k < 3; ++k) {
        double s = orient(pts[tris[t].v[(k + 1) % 3]],
                          pts[tris[t].v[(k + 2) % 3]], p);
        if (s < worst) {
          worst = s;
          move = k;
        }
      }
      if (move < 0) return t;
      t = tris[t].nb[move];
    }
    // Walk failed (should not happen inside the super-triangle); scan.
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
      if (!tris[i].alive) continue;
      const Tri& tr = tris[i];
      if (orient(pts[tr.v[0]], pts[tr.v[1]], p) >= 0.0 &&
          orient(pts[tr.v[1]], pts[tr.v[2]], p) >= 0.0 &&
          orient(pts[tr.v[2]], pts[tr.v[0]], p) >= 0.0)
        return i;
    }
    throw std::runtime_error("triangulate: point location failed");
  }

 private:
  int new_tri(int a, int b, int c) {
    tris.push_back(Tri{{a, b, c}, {-1, -1, -1}, true});
    mark_.push_back(0);
    return static_cast<int>(tris.size()) - 1;
  }

  int hint_ = 0;
  int epoch_ = 0;
  std::vector<int> mark_;
};

inline long long edge_key(int u, int v) {
  int a = std::min(u, v), b = std::max(u, v);
  return (static_cast<long long>(a) << 21) | static_cast<long long>(b);
}
inline long long dir_key(int u, int v) {
  return (static_cast<long long>(u) << 21) | static_cast<long long>(v);
}

// Even-odd ray cast against a closed polyline given as segments.
inline bool inside_loop(const std::vector<std::pair<complexd, complexd>>& segs,
                        complexd p) {
  bool in = false;
  for (const auto& [a, b] : segs) {
    if ((a.imag() > p.imag()) == (b.imag() > p.imag())) continue;
    double x = a.real() + (p.imag() - a.imag()) / (b.imag() - a.imag()) *
                              (b.real() - a.real());
    if (x > p.real()) in = !in;
  }
  return in;
}

}  // namespace detail

// Structural report of an independent mesh validation pass.  ok == false
// carries the first failure in message.  The angle bound is enforced only
// outside the declared sharp-corner exemption disks.
struct MeshAudit {
  bool ok = true;
  std::string message;
  int node_count = 0;
  int triangle_count = 0;
  double min_angle_deg = 0.0;           // over all triangles
  double min_angle_nonexempt_deg = 0.0;  // over triangles outside exemptions
  int exempt_triangle_count = 0;
};

inline MeshAudit mesh_audit(const TriMesh2D& M) {
  MeshAudit rep;
  auto fail = [&](const std::string& why) {
    rep.ok = false;
    if (rep.message.empty()) rep.message = why;
  };
  const int nn = static_cast<int>(M.nodes.size());
  const int nt = static_cast<int>(M.triangles.size());
  rep.node_count = nn;
  rep.triangle_count = nt;
  if (nn < 3 || nt < 1) {
    fail("audit: empty mesh");
    return rep;
  }

  std::map<std::pair<double, double>, int> seen;
  for (int i = 0; i < nn; ++i) {
    if (!(std::abs(M.nodes[i]) < 1.0)) fail("audit: node outside the disk");
    auto key = std::make_pair(M.nodes[i].real(), M.nodes[i].imag());
    if (!seen.emplace(key, i).second) fail("audit: duplicate node position");
  }

  std::unordered_map<long long, int> undirected;
  std::unordered_set<long long> directed;
  std::vector<char> used(nn, 0);
  double min_all = 1e30, min_keep = 1e30;
  for (const auto& t : M.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nn) {
        fail("audit: triangle index out of range");
        return rep;
      }
      used[t[k]] = 1;
    }
    complexd a = M.nodes[t[0]], b = M.nodes[t[1]], c = M.nodes[t[2]];
    if (!(detail::orient(a, b, c) > 0.0))
      fail("audit: triangle not counterclockwise");
    for (int k = 0; k < 3; ++k) {
      int u = t[k], v = t[(k + 1) % 3];
      undirected[detail::edge_key(u, v)] += 1;
      if (!directed.insert(detail::dir_key(u, v)).second)
        fail("audit: directed edge repeated");
    }
    double ang = detail::tri_min_angle(a, b, c);
    min_all = std::min(min_all, ang);
    bool exempt = false;
    for (const auto& d : M.exempt_disks)
      for (int k = 0; k < 3 && !exempt; ++k)
        exempt = std::abs(M.nodes[t[k]] - complexd(d[0], d[1])) <= d[2];
    if (exempt)
      ++rep.exempt_triangle_count;
    else
      min_keep = std::min(min_keep, ang);
  }
  for (int i = 0; i < nn; ++i)
    if (!used[i]) fail("audit: unreferenced node");

  for (const auto& [key, count] : undirected)
    if (count > 2) fail("audit: edge shared by more than two triangles");

  // Boundary edges must be exactly the once-counted edges, traversed with
  // the interior on the left, forming one closed cycle.
  std::unordered_set<long long> declared;
  std::unordered_map<int, int> succ;
  const int ne = static_cast<int>(M.domain.size());
  for (const auto& e : M.boundary_edges) {
    if (e[0] < 0 || e[0] >= nn || e[1] < 0 || e[1] >= nn)
      fail("audit: boundary edge index out of range");
    auto it = undirected.find(detail::edge_key(e[0], e[1]));
    if (it == undirected.end() || it->second != 1)
      fail("audit: boundary edge not a once-counted mesh edge");
    if (!directed.count(detail::dir_key(e[0], e[1])))
      fail("audit: interior not on the left of a boundary edge");
    if (!declared.insert(detail::edge_key(e[0], e[1])).second)
      fail("audit: boundary edge declared twice");
    if (e[2] < 0 || e[2] >= ne) fail("audit: boundary tag out of range");
    if (!succ.emplace(e[0], e[1]).second)
      fail("audit: boundary successor not unique");
  }
  for (const auto& [key, count] : undirected)
    if (count == 1 && !declared.count(key))
      fail("audit: once-counted edge missing from boundary list");
  if (!M.boundary_edges.empty()) {
    int start = M.boundary_edges.front()[0];
    int at = start;
    size_t steps = 0;
    do {
      auto it = succ.find(at);
      if (it == succ.end()) {
        fail("audit: boundary walk broke");
        break;
      }
      at = it->second;
      ++steps;
    } while (at != start && steps <= M.boundary_edges.size());
    if (steps != M.boundary_edges.size())
      fail("audit: boundary is not a single closed loop");
  } else {
    fail("audit: no boundary edges");
  }

  // Every boundary node must sit on the geodesic circle of its tagged edge.
  for (const auto& e : M.boundary_edges) {
    if (e[2] < 0 || e[2] >= ne) continue;
    Geodesic g = M.domain.edge_geodesic(e[2]);
    for (int s = 0; s < 2; ++s) {
      complexd z = M.nodes[e[s]];
      double off = (g.kind == GeodesicKind::Diameter)
                       ? std::abs((z * std::polar(1.0, -g.phi)).imag())
                       : std::abs(std::abs(z - g.center) - g.radius);
      if (off > 1e-9) fail("audit: boundary node off its tagged geodesic");
    }
  }

  if (static_cast<int>(M.corners.size()) != M.domain.size())
    fail("audit: corner count mismatch");
  for (int i = 0; i < static_cast<int>(M.corners.size()); ++i) {
    int c = M.corners[i];
    if (c < 0 || c >= nn || M.nodes[c] != M.domain.vertices[i])
      fail("audit: corner node misplaced");
  }

  rep.min_angle_deg = min_all * 180.0 / kPi;
  rep.min_angle_nonexempt_deg = min_keep * 180.0 / kPi;
  if (min_keep < 20.0 * kPi / 180.0 - 1e-9)
    fail("audit: angle bound violated outside exemption disks");
  return rep;
}

namespace detail {

struct Seg {
  int u, v, tag;
};

// State shared by the triangulation phases.
struct MeshBuild {
  Delaunay dt;
  std::vector<Seg> segs;       // cyclic boundary order
  std::vector<int> corners;    // delaunay point ids
  std::unordered_set<long long> seg_keys;

  void rebuild_seg_keys() {
    seg_keys.clear();
    for (const auto& s : segs) seg_keys.insert(edge_key(s.u, s.v));
  }

  // Split segment i at the geodesic midpoint of its endpoints.  Both ends
  // lie on the tagged edge circle, so the midpoint stays on the true curve.
  int split_segment(int i) {
    Seg s = segs[i];
    Geodesic g = geodesic_between(DiskPoint(dt.pts[s.u]), DiskPoint(dt.pts[s.v]));
    int m = dt.append_point(g.point_at(0.5));
    segs[i] = Seg{s.u, m, s.tag};
    segs.insert(segs.begin() + i + 1, Seg{m, s.v, s.tag});
    dt.insert(m);
    rebuild_seg_keys();
    return m;
  }

  // Insert boundary midpoints until every segment is a mesh edge.
  void enforce_boundary() {
    for (int pass = 0; pass < 64; ++pass) {
      std::unordered_set<long long> edges;
      for (const auto& t : dt.tris) {
        if (!t.alive) continue;
        for (int k = 0; k < 3; ++k)
          edges.insert(edge_key(t.v[k], t.v[(k + 1) % 3]));
      }
      bool all_present = true;
      for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        if (edges.count(edge_key(segs[i].u, segs[i].v))) continue;
        all_present = false;
        split_segment(i);
        ++i;  // skip the second half just created
      }
      if (all_present) return;
    }
    throw std::runtime_error("triangulate: boundary enforcement stalled");
  }

  // Flood fill from the left side of each boundary segment; boundary
  // segments block the flood, so the kept set is exactly the interior.
  std::vector<char> classify() const {
    std::unordered_map<long long, int> dir;
    for (int t = 0; t < static_cast<int>(dt.tris.size()); ++t) {
      if (!dt.tris[t].alive) continue;
      for (int k = 0; k < 3; ++k)
        dir[dir_key(dt.tris[t].v[k], dt.tris[t].v[(k + 1) % 3])] = t;
    }
    std::vector<char> keep(dt.tris.size(), 0);
    std::deque<int> queue;
    for (const auto& s : segs) {
      auto it = dir.find(dir_key(s.u, s.v));
      if (it == dir.end())
        throw std::runtime_error("triangulate: boundary segment lost");
      if (!keep[it->second]) {
        keep[it->second] = 1;
        queue.push_back(it->second);
      }
    }
    while (!queue.empty()) {
      int t = queue.front();
      queue.pop_front();
      for (int k = 0; k < 3; ++k) {
        int u = dt.tris[t].nb[k];
        if (u < 0 || !dt.tris[u].alive || keep[u]) continue;
        int a = dt.tris[t].v[(k + 1) % 3], b = dt.tris[t].v[(k + 2) % 3];
        if (seg_keys.count(edge_key(a, b))) continue;
        keep[u] = 1;
        queue.push_back(u);
      }
    }
    for (int t = 0; t < static_cast<int>(dt.tris.size()); ++t)
      if (keep[t])
        for (int k = 0; k < 3; ++k)
          if (dt.is_super(dt.tris[t].v[k]))
            throw std::runtime_error("triangulate: interior flood leaked");
    return keep;
  }
};

}  // namespace detail

inline TriMesh2D triangulate(const TruncatedPolygon& T, double h_target,
                             double grading = 8.0) {
  if (!(h_target > 0.0)) throw std::invalid_argument("triangulate: h_target <= 0");
  if (!(grading >= 1.0)) throw std::invalid_argument("triangulate: grading < 1");
  const int n = T.size();

  // Size field: dense samples of the +-infinity edges feed the distance
  // query that ramps the target length down near them.
  detail::SizeField size(h_target, grading);
  for (int i = 0; i < n; ++i) {
    if (!T.label(i).infinite()) continue;
    Geodesic g = T.edge_geodesic(i);
    double len = 0.0;
    complexd prev = g.point_at(0.0);
    for (int s = 1; s <= 64; ++s) {
      complexd q = g.point_at(s / 64.0);
      len += std::abs(q - prev);
      prev = q;
    }
    int m = std::max(8, static_cast<int>(std::ceil(len / (size.hmin * 0.5))));
    for (int s = 0; s <= m; ++s)
      size.cloud.insert(g.point_at(static_cast<double>(s) / m));
  }

  // Adaptive boundary sampling: chord below the local size, sagitta below
  // h^2/2 so the polyline tracks the true geodesic to second order.
  std::vector<std::vector<complexd>> edge_pts(n);
  const double sagitta_cap = 0.5 * h_target * h_target;
  for (int i = 0; i < n; ++i) {
    Geodesic g = T.edge_geodesic(i);
    std::vector<complexd>& out = edge_pts[i];
    out.push_back(g.point_at(0.0));
    auto rec = [&](auto&& self, double t0, complexd p0, double t1, complexd p1,
                   int depth) -> void {
      double tm = 0.5 * (t0 + t1);
      complexd pm = g.point_at(tm);
      double target =
          std::min({size(p0), size(pm), size(p1)});
      bool split = std::abs(p1 - p0) > target ||
                   std::abs(pm - 0.5 * (p0 + p1)) > sagitta_cap;
      if (split && depth < 30) {
        self(self, t0, p0, tm, pm, depth + 1);
        self(self, tm, pm, t1, p1, depth + 1);
      } else {
        out.push_back(p1);
      }
    };
    rec(rec, 0.0, g.point_at(0.0), 1.0, g.point_at(1.0), 0);
  }

  // The boundary loop must run counterclockwise for the left-side flood.
  double area2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (size_t s = 0; s + 1 < edge_pts[i].size(); ++s) {
      complexd a = edge_pts[i][s], b = edge_pts[i][s + 1];
      area2 += a.real() * b.imag() - b.real() * a.imag();
    }
  if (!(area2 > 0.0))
    throw std::invalid_argument("triangulate: polygon must be counterclockwise");

  detail::MeshBuild mb;
  std::vector<int> corner_id(n);
  for (int i = 0; i < n; ++i)
    corner_id[i] = mb.dt.append_point(T.vertices[i]);
  detail::PointGrid occupied(std::max(0.75 * size.hmin, 1e-4));
  for (int i = 0; i < n; ++i) occupied.insert(T.vertices[i]);
  for (int i = 0; i < n; ++i) {
    int prev = corner_id[i];
    for (size_t s = 1; s + 1 < edge_pts[i].size(); ++s) {
      int id = mb.dt.append_point(edge_pts[i][s]);
      occupied.insert(edge_pts[i][s]);
      mb.segs.push_back(detail::Seg{prev, id, i});
      prev = id;
    }
    mb.segs.push_back(detail::Seg{prev, corner_id[(i + 1) % n], i});
  }
  mb.corners = corner_id;

  // Interior candidates: one rotated hex lattice per dyadic size level,
  // accepted where the local size matches the level and a Poisson spacing
  // of 0.75 * size holds against everything accepted so far.
  std::vector<std::pair<complexd, complexd>> loop_segs;
  for (int i = 0; i < n; ++i)
    for (size_t s = 0; s + 1 < edge_pts[i].size(); ++s)
      loop_segs.emplace_back(edge_pts[i][s], edge_pts[i][s + 1]);
  detail::SegmentBuckets loop_test(loop_segs, h_target);
  const int levels = std::max(0, static_cast<int>(std::ceil(std::log2(grading))));
  const double tilt = 0.4636476090008061;
  const complexd rot = std::polar(1.0, tilt);
  std::vector<int> interior_ids;
  double rbound = 0.0;
  for (complexd v : T.vertices) rbound = std::max(rbound, std::abs(v));
  rbound += h_target;
  for (int lv = 0; lv <= levels; ++lv) {
    double delta = h_target / static_cast<double>(1 << lv);
    double row = delta * 0.8660254037844386;
    int jmax = static_cast<int>(rbound / row) + 2;
    int imax = static_cast<int>(rbound / delta) + 2;
    for (int j = -jmax; j <= jmax; ++j)
      for (int i = -imax; i <= imax; ++i) {
        complexd p = rot * complexd((i + 0.5 * (j & 1)) * delta - 0.0131,
                                    j * row - 0.0071);
        if (std::abs(p) >= rbound) continue;
        double s = size(p);
        if (lv > 0 && s >= 2.0 * delta) continue;  // handled by coarser level
        if (lv == 0 && s < delta) continue;        // handled by finer level
        if (lv < levels && s < delta) continue;
        if (occupied.any_within(p, 0.75 * s)) continue;
        if (!loop_test.inside(p)) continue;
        occupied.insert(p);
        interior_ids.push_back(mb.dt.append_point(p));
      }
  }

  const int first_real = 3;
  for (int id = first_real; id < static_cast<int>(mb.dt.pts.size()); ++id)
    mb.dt.insert(id);
  mb.rebuild_seg_keys();
  mb.enforce_boundary();
  std::vector<char> keep = mb.classify();

  // Laplacian smoothing: move interior nodes to the average of their kept
  // neighbors, then rebuild the triangulation from scratch.  Nodes outside
  // the domain are dropped on the first rebuild.
  for (int round = 0; round < 3; ++round) {
    std::unordered_set<int> on_boundary;
    for (const auto& s : mb.segs) {
      on_boundary.insert(s.u);
      on_boundary.insert(s.v);
    }
    std::unordered_map<int, std::pair<complexd, int>> acc;
    std::vector<char> referenced(mb.dt.pts.size(), 0);
    for (int t = 0; t < static_cast<int>(mb.dt.tris.size()); ++t) {
      if (!keep[t]) continue;
      for (int k = 0; k < 3; ++k) {
        int a = mb.dt.tris[t].v[k];
        referenced[a] = 1;
        int b = mb.dt.tris[t].v[(k + 1) % 3];
        // Each undirected interior edge appears twice across the kept set,
        // once per direction, so both endpoints accumulate symmetrically.
        auto& slot = acc[a];
        slot.first += mb.dt.pts[b];
        slot.second += 1;
      }
    }
    detail::Delaunay fresh;
    std::vector<int> remap(mb.dt.pts.size(), -1);
    for (int id = first_real; id < static_cast<int>(mb.dt.pts.size()); ++id) {
      bool bnd = on_boundary.count(id) > 0;
      if (!bnd && !referenced[id]) continue;  // outside straggler
      complexd pos = mb.dt.pts[id];
      if (!bnd) {
        const auto& slot = acc[id];
        if (slot.second > 0)
          pos = slot.first / static_cast<double>(slot.second);
      }
      remap[id] = fresh.append_point(pos);
    }
    for (auto& s : mb.segs) {
      s.u = remap[s.u];
      s.v = remap[s.v];
    }
    for (auto& c : mb.corners) c = remap[c];
    mb.dt = std::move(fresh);
    for (int id = first_real; id < static_cast<int>(mb.dt.pts.size()); ++id)
      mb.dt.insert(id);
    mb.rebuild_seg_keys();
    mb.enforce_boundary();
    keep = mb.classify();
  }

  // Sharp corners cannot meet the angle bound: the corner angle itself is
  // below it and shrinks as r -> 1.  Exempt a disk sized to the wedge
  // region whose width stays under the local spacing.
  std::vector<std::array<double, 3>> exempt;
  for (int i = 0; i < n; ++i) {
    Geodesic ga = T.edge_geodesic(i - 1);
    Geodesic gb = T.edge_geodesic(i);
    complexd ta = ga.tangent_into(1);
    complexd tb = gb.tangent_into(0);
    double dot = ta.real() * tb.real() + ta.imag() * tb.imag();
    double cross = ta.real() * tb.imag() - ta.imag() * tb.real();
    double gamma = std::atan2(std::abs(cross), dot);
    if (gamma >= 0.7) continue;
    double local = size(T.vertices[i]);
    double radius =
        std::min(0.15, local * (2.0 + 0.45 / std::tan(std::max(gamma, 0.02))));
    exempt.push_back({T.vertices[i].real(), T.vertices[i].imag(), radius});
  }
  auto is_exempt = [&](const detail::Delaunay::Tri& t) {
    for (const auto& d : exempt)
      for (int k = 0; k < 3; ++k)
        if (std::abs(mb.dt.pts[t.v[k]] - complexd(d[0], d[1])) <= d[2])
          return true;
    return false;
  };

  // Quality pass: split encroached boundary segments, otherwise insert the
  // circumcenter of a bad triangle (unless it falls outside or would itself
  // encroach a boundary segment, in which case that segment splits).
  const double angle_bound = 20.0 * kPi / 180.0;
  long inserted = 0;
  for (int round = 0; round < 60; ++round) {
    loop_segs.clear();
    for (const auto& s : mb.segs)
      loop_segs.emplace_back(mb.dt.pts[s.u], mb.dt.pts[s.v]);
    std::vector<int> bad;
    for (int t = 0; t < static_cast<int>(mb.dt.tris.size()); ++t) {
      if (!keep[t] || is_exempt(mb.dt.tris[t])) continue;
      const auto& tr = mb.dt.tris[t];
      if (detail::tri_min_angle(mb.dt.pts[tr.v[0]], mb.dt.pts[tr.v[1]],
                                mb.dt.pts[tr.v[2]]) < angle_bound - 1e-12)
        bad.push_back(t);
    }
    if (bad.empty()) break;
    if (round == 59 || inserted > 100000)
      throw std::runtime_error(
          "triangulate: unachievable angle bound near (" +
          std::to_string(mb.dt.pts[mb.dt.tris[bad.front()].v[0]].real()) +
          ", " +
          std::to_string(mb.dt.pts[mb.dt.tris[bad.front()].v[0]].imag()) +
          ")");
    for (int t : bad) {
      if (!mb.dt.tris[t].alive || !keep[t]) continue;
      const auto& tr = mb.dt.tris[t];
      complexd a = mb.dt.pts[tr.v[0]], b = mb.dt.pts[tr.v[1]],
               c = mb.dt.pts[tr.v[2]];
      if (detail::tri_min_angle(a, b, c) >= angle_bound - 1e-12) continue;

      int split_at = -1;
      for (int k = 0; k < 3 && split_at < 0; ++k) {
        int u = tr.v[(k + 1) % 3], v = tr.v[(k + 2) % 3], w = tr.v[k];
        if (!mb.seg_keys.count(detail::edge_key(u, v))) continue;
        complexd mid = 0.5 * (mb.dt.pts[u] + mb.dt.pts[v]);
        if (std::abs(mb.dt.pts[w] - mid) <
            0.5 * std::abs(mb.dt.pts[u] - mb.dt.pts[v]))
          for (int i = 0; i < static_cast<int>(mb.segs.size()); ++i)
            if (detail::edge_key(mb.segs[i].u, mb.segs[i].v) ==
                detail::edge_key(u, v)) {
              split_at = i;
              break;
            }
      }
      if (split_at >= 0) {
        mb.split_segment(split_at);
        ++inserted;
        continue;
      }

      complexd cc = detail::circumcenter(a, b, c);
      if (!std::isfinite(cc.real()) || std::abs(cc) >= 0.9995) continue;
      int encroached = -1;
      for (int i = 0; i < static_cast<int>(mb.segs.size()); ++i) {
        complexd pu = mb.dt.pts[mb.segs[i].u], pv = mb.dt.pts[mb.segs[i].v];
        if (std::abs(cc - 0.5 * (pu + pv)) < 0.5 * std::abs(pu - pv)) {
          encroached = i;
          break;
        }
      }
      if (encroached >= 0) {
        mb.split_segment(encroached);
        ++inserted;
        continue;
      }
      if (!detail::inside_loop(loop_segs, cc)) continue;
      int id = mb.dt.append_point(cc);
      mb.dt.insert(id);
      ++inserted;
    }
    keep = mb.classify();
  }

  // Extraction: compact node ids in ascending order, keep segment order as
  // the boundary walk.
  TriMesh2D M;
  M.domain = T;
  M.h_target = h_target;
  M.grading = grading;
  M.exempt_disks = std::move(exempt);
  std::vector<int> final_id(mb.dt.pts.size(), -1);
  for (int t = 0; t < static_cast<int>(mb.dt.tris.size()); ++t) {
    if (!keep[t]) continue;
    for (int k = 0; k < 3; ++k) final_id[mb.dt.tris[t].v[k]] = 0;
  }
  int next_id = 0;
  for (int i = 0; i < static_cast<int>(final_id.size()); ++i)
    if (final_id[i] == 0) {
      final_id[i] = next_id++;
      M.nodes.push_back(mb.dt.pts[i]);
    }
  for (int t = 0; t < static_cast<int>(mb.dt.tris.size()); ++t) {
    if (!keep[t]) continue;
    const auto& tr = mb.dt.tris[t];
    M.triangles.push_back(
        {final_id[tr.v[0]], final_id[tr.v[1]], final_id[tr.v[2]]});
  }
  for (const auto& s : mb.segs)
    M.boundary_edges.push_back({final_id[s.u], final_id[s.v], s.tag});
  for (int c : mb.corners) M.corners.push_back(final_id[c]);

  MeshAudit audit = mesh_audit(M);
  if (!audit.ok) throw std::runtime_error("triangulate: " + audit.message);
  return M;
}

}  // namespace h2xr
