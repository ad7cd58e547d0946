#pragma once

// Triangulated surfaces in the product of the hyperbolic disk with the real
// line.  Graph solutions are lifted to surface meshes, extended by half-turns
// about horizontal geodesics (t -> -t) and vertical axes (t fixed), and
// assembled into the twisted multi-sheet surfaces.  Ends are counted by
// slicing at a probe height and chaining the level curves; total curvature
// of a complete finite-total-curvature surface follows from the end data
// alone through the Euler formula.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "domains.hpp"
#include "hyperbolic.hpp"
#include "mesher.hpp"
#include "solver.hpp"

namespace h2xr {

// Vertices carry a disk position and a height; copy_of tags which symmetry
// image a vertex came from, seam vertices keeping the id of their first
// owner.  boundary_edges are the free (unwelded) edges with their source
// domain edge tag; seam_edges are former boundary edges welded interior.
// Vertices shared between copies appear exactly once.
struct SurfaceMesh {
  std::vector<complexd> xy;
  std::vector<double> t;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> copy_of;
  std::vector<std::array<int, 3>> boundary_edges;  // node, node, edge tag
  std::vector<std::array<int, 2>> seam_edges;
  std::optional<complexd> axis;  // vertical half-turn axis, once one is applied
  double cap_n = 0.0;
  double h_target = 0.0;
  int copies = 1;

  int vertex_count() const { return static_cast<int>(xy.size()); }
};

// Length of a surface edge in the product metric: the hyperbolic horizontal
// distance and the height difference add in quadrature.
inline double edge_length(const SurfaceMesh& S, int a, int b) {
  double dh = dist(S.xy[a], S.xy[b]);
  double dt = S.t[a] - S.t[b];
  return std::hypot(dh, dt);
}

// Asymptotic data of a complete annular-ended surface: genus, number of
// ends, and per-end winding counts of the ideal limit curve.
struct EndData {
  int genus = 0;
  int ends = 0;
  std::vector<int> m;  // one count per end
};

// Total curvature of a complete finite-total-curvature surface from its end
// data: 2 pi (2 - 2 g - 2 n - sum m_i).  Exact in the inputs.
inline double euler_total_curvature(const EndData& e) {
  if (e.genus < 0) throw std::invalid_argument("euler_total_curvature: g < 0");
  if (e.ends < 1) throw std::invalid_argument("euler_total_curvature: n < 1");
  if (static_cast<int>(e.m.size()) != e.ends)
    throw std::invalid_argument(
        "euler_total_curvature: need one m per end");
  long long s = 0;
  for (int mi : e.m) {
    if (mi < 0) throw std::invalid_argument("euler_total_curvature: m_i < 0");
    s += mi;
  }
  return 2.0 * kPi * static_cast<double>(2 - 2 * e.genus - 2 * e.ends - s);
}

// The graph of a solved height function: one surface vertex (z, u(z)) per
// mesh node, connectivity and boundary tags preserved.
inline SurfaceMesh lift(const GraphSolution& sol) {
  if (sol.u.size() != sol.mesh.nodes.size())
    throw std::invalid_argument("lift: height count differs from node count");
  SurfaceMesh S;
  S.xy = sol.mesh.nodes;
  S.t = sol.u;
  S.triangles = sol.mesh.triangles;
  S.copy_of.assign(S.xy.size(), 0);
  S.boundary_edges = sol.mesh.boundary_edges;
  S.cap_n = sol.cap_n;
  S.h_target = sol.mesh.h_target;
  return S;
}

namespace detail {

// Euclidean distance from a point to the full geodesic line; adequate for
// the 1e-10 on-seam tests since all scales here are order one.
inline double euclid_dist_to_geodesic(const Geodesic& g, complexd z) {
  if (g.kind == GeodesicKind::Diameter)
    return std::abs((z * std::polar(1.0, -g.phi)).imag());
  return std::abs(std::abs(z - g.center) - g.radius);
}

// Spatial hash over (x, y, t) for welding: coincidence within tol per
// coordinate identifies vertices.  Mesh spacings are many orders above tol,
// so a hit is never ambiguous.
struct VertexWeld {
  static constexpr double kTol = 1e-9;
  const std::vector<complexd>& xy;
  const std::vector<double>& t;
  std::unordered_map<std::uint64_t, std::vector<int>> bins;

  VertexWeld(const std::vector<complexd>& xy_, const std::vector<double>& t_)
      : xy(xy_), t(t_) {
    for (size_t i = 0; i < xy.size(); ++i) insert(static_cast<int>(i));
  }

  static std::uint64_t key(long long ix, long long iy, long long it) {
    std::uint64_t h = static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ull;
    h ^= static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4full;
    h ^= static_cast<std::uint64_t>(it) * 0x165667b19e3779f9ull;
    return h;
  }

  void insert(int id) {
    long long ix = llround(xy[id].real() / kTol);
    long long iy = llround(xy[id].imag() / kTol);
    long long it = llround(t[id] / kTol);
    bins[key(ix, iy, it)].push_back(id);
  }

  int find(complexd z, double h) const {
    long long ix = llround(z.real() / kTol);
    long long iy = llround(z.imag() / kTol);
    long long it = llround(h / kTol);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dt = -1; dt <= 1; ++dt) {
          auto bin = bins.find(key(ix + dx, iy + dy, it + dt));
          if (bin == bins.end()) continue;
          for (int id : bin->second)
            if (std::abs(xy[id].real() - z.real()) <= kTol &&
                std::abs(xy[id].imag() - z.imag()) <= kTol &&
                std::abs(t[id] - h) <= kTol)
              return id;
        }
    return -1;
  }
};

// Union of S with its image under a product isometry given by a disk map and
// a height map.  Image vertices landing on existing ones (the seam) reuse
// their ids, so the union is conforming by construction; boundary edges
// doubled by the weld move to seam_edges.  flip_orientation marks disk maps
// that reverse orientation (the image triangles and boundary edges are
// reversed to keep the directed-edge convention consistent).
template <class MapXY, class MapT>
SurfaceMesh weld_union(const SurfaceMesh& S, MapXY&& map_xy, MapT&& map_t,
                       bool flip_orientation) {
  SurfaceMesh R = S;
  VertexWeld weld(R.xy, R.t);
  const int old_count = S.vertex_count();
  std::vector<int> image_id(old_count);
  for (int i = 0; i < old_count; ++i) {
    complexd z = map_xy(S.xy[i]);
    double h = map_t(S.t[i]);
    int hit = weld.find(z, h);
    if (hit >= 0) {
      image_id[i] = hit;
      continue;
    }
    image_id[i] = R.vertex_count();
    R.xy.push_back(z);
    R.t.push_back(h);
    R.copy_of.push_back(S.copy_of[i] + S.copies);
    weld.insert(image_id[i]);
  }

  for (const auto& tr : S.triangles) {
    std::array<int, 3> m{image_id[tr[0]], image_id[tr[1]], image_id[tr[2]]};
    if (flip_orientation) std::swap(m[1], m[2]);
    if (m[0] == m[1] || m[1] == m[2] || m[2] == m[0])
      throw std::runtime_error("weld_union: triangle collapsed onto the seam");
    R.triangles.push_back(m);
  }

  auto pair_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  std::unordered_set<std::uint64_t> seam;
  for (const auto& be : S.boundary_edges) {
    int a = image_id[be[0]], b = image_id[be[1]];
    if (a < old_count && b < old_count) {
      // Both endpoints welded: the image edge coincides with the original
      // boundary edge, which is now interior.
      seam.insert(pair_key(a, b));
      R.seam_edges.push_back({a, b});
    } else {
      R.boundary_edges.push_back(
          flip_orientation ? std::array<int, 3>{b, a, be[2]}
                           : std::array<int, 3>{a, b, be[2]});
    }
  }
  std::vector<std::array<int, 3>> kept;
  for (const auto& be : R.boundary_edges)
    if (!seam.count(pair_key(be[0], be[1]))) kept.push_back(be);
  R.boundary_edges = std::move(kept);
  for (const auto& se : S.seam_edges)
    R.seam_edges.push_back({image_id[se[0]], image_id[se[1]]});

  R.copies = 2 * S.copies;
  return R;
}

}  // namespace detail

// Half-turn about the horizontal geodesic g in the t = 0 slice: the image
// vertex of (z, t) is (sigma_g(z), -t).  The surface must touch g only along
// a seam at height zero; the union is welded there.
inline SurfaceMesh rotate_pi_horizontal(const SurfaceMesh& S,
                                        const Geodesic& g) {
  const double on = 1e-10;
  int on_seam = 0;
  for (int i = 0; i < S.vertex_count(); ++i) {
    if (detail::euclid_dist_to_geodesic(g, S.xy[i]) > on) continue;
    if (std::abs(S.t[i]) > on)
      throw std::invalid_argument(
          "rotate_pi_horizontal: seam vertex off the zero-height slice");
    ++on_seam;
  }
  if (on_seam == 0)
    throw std::invalid_argument(
        "rotate_pi_horizontal: no seam on the geodesic");
  Isometry sigma = reflect_across(g);
  return detail::weld_union(
      S, [&](complexd z) { return sigma(z); },
      [](double t) { return -t; }, true);
}

// Half-turn about the vertical line {c} x R: the image vertex of (z, t) is
// (rho_c(z), t) with rho_c the point half-turn.  The axis must carry at
// least one vertex for the union to stay connected.
inline SurfaceMesh rotate_pi_vertical(const SurfaceMesh& S, complexd c) {
  const double on = 1e-10;
  int on_axis = 0;
  for (int i = 0; i < S.vertex_count(); ++i)
    if (std::abs(S.xy[i] - c) <= on) ++on_axis;
  if (on_axis == 0)
    throw std::invalid_argument("rotate_pi_vertical: no vertex on the axis");
  Isometry rho = point_rotation_pi(c);
  SurfaceMesh R = detail::weld_union(
      S, [&](complexd z) { return rho(z); },
      [](double t) { return t; }, false);
  R.axis = c;
  return R;
}

// ---- twisted assemblies ------------------------------------------------------

// The k-twisted complete surface from the exhaustion of its fundamental
// graph.  k = 1: the (+inf, -inf, 0) triangle with aperture theta, doubled
// across its zero edge by a horizontal half-turn and doubled again about the
// vertical axis at the origin (four sheets).  k >= 2: the fan domain with
// first vertex pulled to -beta, reflected across its zero edge into a single
// all-infinite domain, solved, and doubled once about the vertical axis (two
// sheets).  The final exhaustion step provides the graph.
inline SurfaceMesh assemble_twisted(int k, double theta, double beta,
                                    const std::vector<ExhaustionStep>& schedule,
                                    const ExhaustionOptions& opts = {}) {
  if (k < 1) throw std::invalid_argument("assemble_twisted: k < 1");
  if (k == 1) {
    LabeledPolygon tri = triangle_domain(theta);
    ExhaustionRun run = exhaustion_solve(tri, schedule, opts);
    const GraphSolution& sol = run.solutions.back();
    SurfaceMesh S = lift(sol);
    SurfaceMesh doubled =
        rotate_pi_horizontal(S, sol.mesh.domain.edge_geodesic(2));
    return rotate_pi_vertical(doubled, complexd(0.0, 0.0));
  }
  LabeledPolygon half = omega_theta_beta(k, theta, beta);
  LabeledPolygon full = reflect_union(half, half.edge_geodesic(k + 1));
  ExhaustionRun run = exhaustion_solve(full, schedule, opts);
  SurfaceMesh S = lift(run.solutions.back());
  return rotate_pi_vertical(S, complexd(0.0, 0.0));
}

// ---- end counting ------------------------------------------------------------

namespace detail {

// One horizontal slice {t = level}.  Crossings are tracked per mesh edge;
// each crossed triangle contributes a segment joining its two crossings, so
// components follow from a union-find over crossing ids.  A vertex exactly
// at the level counts as below, which keeps every triangle's crossed-edge
// count at 0 or 2 without perturbing data.
struct SliceCount {
  int divergent = 0;  // open curves with both endpoints on the free boundary
  int loops = 0;
};

inline SliceCount slice_curves(const SurfaceMesh& S, double level,
                               double axis_tol) {
  auto above = [&](int v) { return S.t[v] > level; };
  auto pair_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };

  std::unordered_set<std::uint64_t> boundary;
  for (const auto& be : S.boundary_edges)
    boundary.insert(pair_key(be[0], be[1]));

  std::unordered_map<std::uint64_t, int> cross_of;
  std::vector<complexd> pos;
  std::vector<int> deg;
  std::vector<char> on_boundary;
  std::vector<int> parent;
  auto root = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto crossing = [&](int a, int b) {
    std::uint64_t k = pair_key(a, b);
    auto it = cross_of.find(k);
    if (it != cross_of.end()) return it->second;
    double s = (level - S.t[a]) / (S.t[b] - S.t[a]);
    int id = static_cast<int>(pos.size());
    pos.push_back(S.xy[a] + s * (S.xy[b] - S.xy[a]));
    deg.push_back(0);
    on_boundary.push_back(boundary.count(k) ? 1 : 0);
    parent.push_back(id);
    cross_of.emplace(k, id);
    return id;
  };

  for (const auto& tr : S.triangles) {
    int hit[3], n = 0;
    for (int e = 0; e < 3; ++e) {
      int a = tr[e], b = tr[(e + 1) % 3];
      if (above(a) != above(b)) hit[n++] = crossing(a, b);
    }
    if (n == 0) continue;
    if (n != 2)
      throw std::logic_error("slice_curves: triangle with odd crossing count");
    int ra = root(hit[0]), rb = root(hit[1]);
    if (ra != rb) parent[ra] = rb;
    ++deg[hit[0]];
    ++deg[hit[1]];
  }

  // Interior crossed edges pick up one segment from each adjacent triangle;
  // degree-one crossings must sit on the free boundary.
  std::vector<int> endpoints;
  for (size_t i = 0; i < pos.size(); ++i) {
    if (deg[i] > 2)
      throw std::logic_error("slice_curves: non-manifold level crossing");
    if (deg[i] == 1) {
      if (!on_boundary[i])
        throw std::logic_error(
            "slice_curves: dangling crossing off the boundary");
      endpoints.push_back(static_cast<int>(i));
    }
  }

  // Endpoints near the vertical axis are where sheets joined at the axis
  // vertex exchange the curve: pair each with the one nearest its half-turn
  // image and merge their components.
  std::vector<int> axial, open_ends;
  for (int e : endpoints) {
    if (S.axis && std::abs(pos[e] - *S.axis) <= axis_tol)
      axial.push_back(e);
    else
      open_ends.push_back(e);
  }
  if (axial.size() % 2 != 0)
    throw std::domain_error("count_ends: unpaired axis crossing at the probe");
  if (!axial.empty()) {
    Isometry rho = point_rotation_pi(*S.axis);
    std::vector<char> used(axial.size(), 0);
    for (size_t i = 0; i < axial.size(); ++i) {
      if (used[i]) continue;
      complexd want = rho(pos[axial[i]]);
      size_t best = axial.size();
      double best_d = 1e300;
      for (size_t j = i + 1; j < axial.size(); ++j) {
        if (used[j]) continue;
        double d = std::abs(pos[axial[j]] - want);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (best == axial.size())
        throw std::logic_error("slice_curves: axis pairing exhausted");
      used[i] = used[best] = 1;
      int ra = root(axial[i]), rb = root(axial[best]);
      if (ra != rb) parent[ra] = rb;
    }
  }

  std::unordered_map<int, int> open_count;
  for (int e : open_ends) ++open_count[root(e)];
  std::unordered_set<int> roots;
  for (size_t i = 0; i < pos.size(); ++i) roots.insert(root(static_cast<int>(i)));

  SliceCount out;
  for (int r : roots) {
    auto it = open_count.find(r);
    int ends = it == open_count.end() ? 0 : it->second;
    if (ends == 0)
      ++out.loops;
    else if (ends == 2)
      ++out.divergent;
    else
      throw std::domain_error(
          "count_ends: level curve with unexpected endpoint structure");
  }
  return out;
}

}  // namespace detail

// Divergent level-curve counts in the two slices {t = +T} and {t = -T}.
struct LevelCount {
  int plus = 0;
  int minus = 0;
};

inline LevelCount count_level_curves(const SurfaceMesh& S, double T) {
  if (!(T > 0.0))
    throw std::invalid_argument("count_level_curves: T must be positive");
  double axis_tol = std::max(S.h_target, 1e-6);
  LevelCount c;
  c.plus = detail::slice_curves(S, T, axis_tol).divergent;
  c.minus = detail::slice_curves(S, -T, axis_tol).divergent;
  return c;
}

// End data of a single-ended disk-type surface read off a probe slice: the
// ideal limit curve winds once more than the number of divergent curves cut
// at the probe height.  Counts at +T and -T must agree for the probe to be
// trusted.
inline EndData count_ends(const SurfaceMesh& S, double T) {
  if (!(T > 0.0) || !(T < S.cap_n))
    throw std::invalid_argument("count_ends: probe height outside (0, cap)");
  LevelCount c = count_level_curves(S, T);
  if (c.plus == 0 || c.plus != c.minus)
    throw std::domain_error(
        "count_ends: slice counts " + std::to_string(c.plus) + " above and " +
        std::to_string(c.minus) +
        " below; probe height too low or resolution insufficient");
  EndData e;
  e.genus = 0;
  e.ends = 1;
  e.m = {c.plus - 1};
  return e;
}

// ---- audits -------------------------------------------------------------------

struct SurfaceAudit {
  bool ok = true;
  std::string message;
  int euler = 0;
  int intersections = 0;
};

namespace detail {

// Segment-interval overlap of two triangles in (x, y, t) coordinates, after
// the usual plane-side rejections.  Pairs sharing a vertex id are skipped by
// the caller, so any positive overlap here is a genuine self-intersection.
struct Tri3 {
  double p[3][3];
};

inline void cross3(const double a[3], const double b[3], double r[3]) {
  r[0] = a[1] * b[2] - a[2] * b[1];
  r[1] = a[2] * b[0] - a[0] * b[2];
  r[2] = a[0] * b[1] - a[1] * b[0];
}
inline double dot3(const double a[3], const double b[3]) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline bool coplanar_overlap(const Tri3& A, const Tri3& B, const double n[3]) {
  // Project to the dominant axis of n and run the 2D triangle overlap test:
  // any edge pair crossing or a vertex of one strictly inside the other.
  int w = 0;
  if (std::abs(n[1]) > std::abs(n[w])) w = 1;
  if (std::abs(n[2]) > std::abs(n[w])) w = 2;
  int u = (w + 1) % 3, v = (w + 2) % 3;
  auto cross2 = [&](const double* a, const double* b, const double* c) {
    return (b[u] - a[u]) * (c[v] - a[v]) - (b[v] - a[v]) * (c[u] - a[u]);
  };
  auto seg_cross = [&](const double* a, const double* b, const double* c,
                       const double* d) {
    double d1 = cross2(a, b, c), d2 = cross2(a, b, d);
    double d3 = cross2(c, d, a), d4 = cross2(c, d, b);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) &&
           std::min(std::abs(d1), std::abs(d2)) > 1e-18 &&
           std::min(std::abs(d3), std::abs(d4)) > 1e-18;
  };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (seg_cross(A.p[i], A.p[(i + 1) % 3], B.p[j], B.p[(j + 1) % 3]))
        return true;
  auto inside = [&](const double* q, const Tri3& T) {
    double s0 = cross2(T.p[0], T.p[1], q);
    double s1 = cross2(T.p[1], T.p[2], q);
    double s2 = cross2(T.p[2], T.p[0], q);
    double m = std::min({std::abs(s0), std::abs(s1), std::abs(s2)});
    return m > 1e-18 && ((s0 > 0) == (s1 > 0)) && ((s1 > 0) == (s2 > 0));
  };
  return inside(B.p[0], A) || inside(A.p[0], B);
}

inline bool tris_intersect(const Tri3& A, const Tri3& B) {
  const double eps = 1e-12;
  double e1[3], e2[3], nA[3], nB[3];
  for (int i = 0; i < 3; ++i) {
    e1[i] = A.p[1][i] - A.p[0][i];
    e2[i] = A.p[2][i] - A.p[0][i];
  }
  cross3(e1, e2, nA);
  double dB[3];
  for (int j = 0; j < 3; ++j) {
    double w[3] = {B.p[j][0] - A.p[0][0], B.p[j][1] - A.p[0][1],
                   B.p[j][2] - A.p[0][2]};
    dB[j] = dot3(nA, w);
  }
  double sA = std::sqrt(dot3(nA, nA));
  if (dB[0] > eps * sA && dB[1] > eps * sA && dB[2] > eps * sA) return false;
  if (dB[0] < -eps * sA && dB[1] < -eps * sA && dB[2] < -eps * sA) return false;

  for (int i = 0; i < 3; ++i) {
    e1[i] = B.p[1][i] - B.p[0][i];
    e2[i] = B.p[2][i] - B.p[0][i];
  }
  cross3(e1, e2, nB);
  double dA[3];
  for (int j = 0; j < 3; ++j) {
    double w[3] = {A.p[j][0] - B.p[0][0], A.p[j][1] - B.p[0][1],
                   A.p[j][2] - B.p[0][2]};
    dA[j] = dot3(nB, w);
  }
  double sB = std::sqrt(dot3(nB, nB));
  if (dA[0] > eps * sB && dA[1] > eps * sB && dA[2] > eps * sB) return false;
  if (dA[0] < -eps * sB && dA[1] < -eps * sB && dA[2] < -eps * sB) return false;

  bool copA = std::abs(dB[0]) <= eps * sA && std::abs(dB[1]) <= eps * sA &&
              std::abs(dB[2]) <= eps * sA;
  if (copA) return coplanar_overlap(A, B, nA);

  // Interval overlap on the plane-intersection line L = nA x nB.
  double L[3];
  cross3(nA, nB, L);
  auto interval = [&](const Tri3& T, const double d[3], double& lo,
                      double& hi) {
    double proj[3];
    for (int j = 0; j < 3; ++j) proj[j] = dot3(L, T.p[j]);
    lo = 1e300;
    hi = -1e300;
    for (int j = 0; j < 3; ++j) {
      int k = (j + 1) % 3;
      if ((d[j] > 0) == (d[k] > 0)) continue;
      double s = d[j] / (d[j] - d[k]);
      double x = proj[j] + s * (proj[k] - proj[j]);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return lo <= hi;
  };
  double lo1, hi1, lo2, hi2;
  if (!interval(A, dA, lo1, hi1)) return false;
  if (!interval(B, dB, lo2, hi2)) return false;
  double gap = 1e-12 * (1.0 + std::max(std::abs(hi1), std::abs(hi2)));
  return std::min(hi1, hi2) - std::max(lo1, lo2) > gap;
}

}  // namespace detail

// Structural and geometric audit: index validity, vertices inside the closed
// cylinder, no two distinct vertices within weld tolerance, every edge shared
// by at most two triangles with consistent orientation, free boundary edges
// matching triangle edges, disk Euler characteristic, and (optionally) no
// intersecting pair of triangles that do not share a vertex.
inline SurfaceAudit surface_audit(const SurfaceMesh& S,
                                  bool check_intersections = true) {
  SurfaceAudit out;
  auto fail = [&](const std::string& m) {
    out.ok = false;
    if (!out.message.empty()) out.message += "; ";
    out.message += m;
  };

  const int nv = S.vertex_count();
  bool indexable = true;
  if (S.t.size() != S.xy.size() || S.copy_of.size() != S.xy.size()) {
    fail("vertex array sizes disagree");
    indexable = false;
  }
  for (int i = 0; i < nv; ++i)
    if (std::abs(S.xy[i]) > 1.0 + 1e-12) fail("vertex outside the closed disk");

  if (indexable) {
    // If any two vertices coincide within weld tolerance, at least one of
    // them finds the other before itself in the cell scan.
    detail::VertexWeld weld(S.xy, S.t);
    for (int i = 0; i < nv; ++i)
      if (weld.find(S.xy[i], S.t[i]) != i)
        fail("vertex " + std::to_string(i) +
             " duplicates another within weld tolerance");
  }

  auto pair_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  std::unordered_map<std::uint64_t, int> forward, backward;
  for (const auto& tr : S.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = tr[e], b = tr[(e + 1) % 3];
      if (a < 0 || a >= nv || b < 0 || b >= nv) {
        fail("triangle index out of range");
        indexable = false;
        continue;
      }
      if (a == b) fail("degenerate triangle");
      (a < b ? forward : backward)[pair_key(a, b)]++;
    }
  }
  int boundary_count = 0;
  std::unordered_set<std::uint64_t> edges;
  for (const auto& kv : forward) edges.insert(kv.first);
  for (const auto& kv : backward) edges.insert(kv.first);
  for (std::uint64_t k : edges) {
    int f = forward.count(k) ? forward.at(k) : 0;
    int b = backward.count(k) ? backward.at(k) : 0;
    if (f > 1 || b > 1) fail("edge with repeated orientation");
    if (f + b == 1) ++boundary_count;
  }
  if (boundary_count != static_cast<int>(S.boundary_edges.size()))
    fail("free boundary edge count " + std::to_string(boundary_count) +
         " differs from recorded " + std::to_string(S.boundary_edges.size()));
  for (const auto& be : S.boundary_edges) {
    std::uint64_t k = pair_key(be[0], be[1]);
    int f = forward.count(k) ? forward.at(k) : 0;
    int b = backward.count(k) ? backward.at(k) : 0;
    if (f + b != 1) fail("recorded boundary edge not a mesh boundary edge");
  }
  for (const auto& se : S.seam_edges) {
    std::uint64_t k = pair_key(se[0], se[1]);
    int f = forward.count(k) ? forward.at(k) : 0;
    int b = backward.count(k) ? backward.at(k) : 0;
    if (f + b != 2) fail("seam edge not interior");
  }

  out.euler = nv - static_cast<int>(edges.size()) +
              static_cast<int>(S.triangles.size());
  if (out.euler != 1)
    fail("Euler characteristic " + std::to_string(out.euler) +
         " is not disk-like");

  if (check_intersections && indexable) {
    // Bin triangles by bounding box in the disk; only pairs meeting in a bin
    // with overlapping height ranges reach the exact test.
    double cell = std::max(S.h_target, 1e-3) * 2.0;
    auto cell_key = [&](long long ix, long long iy) {
      return (static_cast<std::uint64_t>(ix) << 32) ^
             static_cast<std::uint32_t>(iy);
    };
    struct Box {
      double xlo, xhi, ylo, yhi, tlo, thi;
    };
    std::vector<Box> boxes(S.triangles.size());
    std::unordered_map<std::uint64_t, std::vector<int>> bins;
    for (size_t i = 0; i < S.triangles.size(); ++i) {
      const auto& tr = S.triangles[i];
      Box b{1e300, -1e300, 1e300, -1e300, 1e300, -1e300};
      for (int v : tr) {
        b.xlo = std::min(b.xlo, S.xy[v].real());
        b.xhi = std::max(b.xhi, S.xy[v].real());
        b.ylo = std::min(b.ylo, S.xy[v].imag());
        b.yhi = std::max(b.yhi, S.xy[v].imag());
        b.tlo = std::min(b.tlo, S.t[v]);
        b.thi = std::max(b.thi, S.t[v]);
      }
      boxes[i] = b;
      for (long long ix = llround(std::floor(b.xlo / cell));
           ix <= llround(std::floor(b.xhi / cell)); ++ix)
        for (long long iy = llround(std::floor(b.ylo / cell));
             iy <= llround(std::floor(b.yhi / cell)); ++iy)
          bins[cell_key(ix, iy)].push_back(static_cast<int>(i));
    }
    auto share_vertex = [&](int i, int j) {
      for (int a : S.triangles[i])
        for (int b : S.triangles[j])
          if (a == b) return true;
      return false;
    };
    std::unordered_set<std::uint64_t> tested;
    for (const auto& bin : bins) {
      const auto& list = bin.second;
      for (size_t a = 0; a < list.size(); ++a)
        for (size_t b = a + 1; b < list.size(); ++b) {
          int i = list[a], j = list[b];
          const Box& bi = boxes[i];
          const Box& bj = boxes[j];
          if (bi.thi < bj.tlo || bj.thi < bi.tlo) continue;
          if (bi.xhi < bj.xlo || bj.xhi < bi.xlo) continue;
          if (bi.yhi < bj.ylo || bj.yhi < bi.ylo) continue;
          if (!tested.insert(pair_key(i, j)).second) continue;
          if (share_vertex(i, j)) continue;
          detail::Tri3 A, B;
          for (int v = 0; v < 3; ++v) {
            int p = S.triangles[i][v], q = S.triangles[j][v];
            A.p[v][0] = S.xy[p].real();
            A.p[v][1] = S.xy[p].imag();
            A.p[v][2] = S.t[p];
            B.p[v][0] = S.xy[q].real();
            B.p[v][1] = S.xy[q].imag();
            B.p[v][2] = S.t[q];
          }
          if (detail::tris_intersect(A, B)) ++out.intersections;
        }
    }
    if (out.intersections > 0)
      fail(std::to_string(out.intersections) +
           " intersecting triangle pairs");
  }
  return out;
}

}  // namespace h2xr
