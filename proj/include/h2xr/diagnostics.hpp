#pragma once

// Verification reports for triangulated product-space surfaces.  Every
// estimate is intrinsic: a triangle is realized flat with its product-metric
// side lengths, and all angles, areas, and gradients are read off that
// comparison triangle.  No flat chart of the disk enters any formula, so the
// reports are invariant under disk isometries by construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "domains.hpp"
#include "hyperbolic.hpp"
#include "surface.hpp"

namespace h2xr {

namespace detail {

// Corner angles from side lengths; l[i] is the side opposite corner i.
// Cosines are clamped so needle triangles still yield finite angles.
inline std::array<double, 3> corner_angles(const std::array<double, 3>& l) {
  std::array<double, 3> a;
  for (int i = 0; i < 3; ++i) {
    double lj = l[(i + 1) % 3], lk = l[(i + 2) % 3];
    double c = (lj * lj + lk * lk - l[i] * l[i]) / (2.0 * lj * lk);
    a[i] = std::acos(std::clamp(c, -1.0, 1.0));
  }
  return a;
}

// Stable Heron form; the factors are ordered so no cancellation occurs.
inline double comparison_area(std::array<double, 3> l) {
  std::sort(l.begin(), l.end());
  double a = l[2], b = l[1], c = l[0];
  double s = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
  return 0.25 * std::sqrt(std::max(0.0, s));
}

// Flat realization of a triangle with the given side lengths: corner 0 at
// the origin, corner 1 on the positive x axis, corner 2 above it.
struct ComparisonTriangle {
  std::array<std::array<double, 2>, 3> p;
  double area;
};

inline ComparisonTriangle comparison_coords(double l01, double l02,
                                            double l12) {
  double x2 = l01 > 0.0 ? (l01 * l01 + l02 * l02 - l12 * l12) / (2.0 * l01)
                        : 0.0;
  double y2 = std::sqrt(std::max(0.0, l02 * l02 - x2 * x2));
  ComparisonTriangle T;
  T.p = {{{0.0, 0.0}, {l01, 0.0}, {x2, y2}}};
  T.area = 0.5 * l01 * y2;
  return T;
}

// Gradient of the affine interpolant of per-corner values f0, f1, f2.
// Requires a nondegenerate triangle (area > 0).
inline std::array<double, 2> affine_gradient(const ComparisonTriangle& T,
                                             double f0, double f1, double f2) {
  double gx = (f1 - f0) / T.p[1][0];
  double gy = (f2 - f0 - T.p[2][0] * gx) / T.p[2][1];
  return {gx, gy};
}

// Apex lookup for directed triangle edges: apex(a, b) is the third corner of
// the unique triangle whose counterclockwise boundary contains a -> b.
struct DirectedEdges {
  std::unordered_map<std::uint64_t, int> apex;

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }
  explicit DirectedEdges(const std::vector<std::array<int, 3>>& tris) {
    for (const auto& t : tris) {
      apex[key(t[0], t[1])] = t[2];
      apex[key(t[1], t[2])] = t[0];
      apex[key(t[2], t[0])] = t[1];
    }
  }
  const int* find(int a, int b) const {
    auto it = apex.find(key(a, b));
    return it == apex.end() ? nullptr : &it->second;
  }
};

}  // namespace detail

// Intrinsic curvature survey.  vertex_k holds the angle defect over the
// mixed Voronoi area at interior vertices and zero at boundary vertices;
// total_curvature is the plain sum of interior defects, the lumped integral
// of K.  boundary_turning sums pi minus the hinge angle over every boundary
// visit; it carries both the geodesic-curvature integral and the corner
// exterior angles, the discrete walk makes no distinction between them.
// gb_residual = total_curvature + boundary_turning - 2 pi per boundary loop.
struct CurvatureReport {
  std::vector<double> vertex_k;
  double total_curvature = 0.0;
  double boundary_turning = 0.0;
  int boundary_loops = 0;
  double gb_residual = 0.0;
  double h_target = 0.0;
};

// Boundary turning is fan-based at smooth boundary vertices (pi minus the
// incident angle sum, which closes the Gauss-Bonnet identity exactly) and
// hinge-based at corners, where the edge tag changes: there the exterior
// angle is the comparison angle of the chord triangle of the two boundary
// neighbors, an estimate independent of the interior triangulation.  The
// residual therefore isolates the corner discretization error instead of
// reporting either an identity or the O(h) boundary collar.
inline CurvatureReport gauss_curvature(const SurfaceMesh& S) {
  const int nv = S.vertex_count();
  if (nv == 0 || S.triangles.empty())
    throw std::invalid_argument("gauss_curvature: empty mesh");
  if (S.t.size() != S.xy.size())
    throw std::invalid_argument("gauss_curvature: height count mismatch");

  std::vector<double> angle_sum(nv, 0.0), mixed_area(nv, 0.0);
  for (const auto& tr : S.triangles) {
    std::array<double, 3> l = {edge_length(S, tr[1], tr[2]),
                               edge_length(S, tr[2], tr[0]),
                               edge_length(S, tr[0], tr[1])};
    if (l[0] <= 0.0 || l[1] <= 0.0 || l[2] <= 0.0) continue;
    auto ang = detail::corner_angles(l);
    double area = detail::comparison_area(l);
    int obtuse = -1;
    for (int i = 0; i < 3; ++i) {
      angle_sum[tr[i]] += ang[i];
      if (ang[i] > 0.5 * kPi) obtuse = i;
    }
    if (area <= 0.0) continue;
    if (obtuse >= 0) {
      for (int i = 0; i < 3; ++i)
        mixed_area[tr[i]] += (i == obtuse ? 0.5 : 0.25) * area;
    } else {
      for (int i = 0; i < 3; ++i) {
        double lj = l[(i + 1) % 3], lk = l[(i + 2) % 3];
        double cj = std::cos(ang[(i + 1) % 3]) / std::sin(ang[(i + 1) % 3]);
        double ck = std::cos(ang[(i + 2) % 3]) / std::sin(ang[(i + 2) % 3]);
        mixed_area[tr[i]] += 0.125 * (lj * lj * cj + lk * lk * ck);
      }
    }
  }

  std::vector<char> on_boundary(nv, 0);
  for (const auto& be : S.boundary_edges) {
    on_boundary[be[0]] = 1;
    on_boundary[be[1]] = 1;
  }

  CurvatureReport rep;
  rep.h_target = S.h_target;
  rep.vertex_k.assign(nv, 0.0);
  for (int v = 0; v < nv; ++v) {
    if (on_boundary[v]) continue;
    double defect = 2.0 * kPi - angle_sum[v];
    rep.total_curvature += defect;
    if (mixed_area[v] > 0.0) rep.vertex_k[v] = defect / mixed_area[v];
  }

  // Walk the boundary loops.  Recorded edges are normalized to the triangle
  // orientation, and the successor of a -> b is found by pivoting the fan
  // around b, which keeps the sectors of a pinch vertex separate.
  detail::DirectedEdges de(S.triangles);
  std::unordered_map<std::uint64_t, int> recorded;
  std::vector<std::array<int, 3>> walk_edges;
  walk_edges.reserve(S.boundary_edges.size());
  for (const auto& be : S.boundary_edges) {
    int a = be[0], b = be[1];
    if (!de.find(a, b)) {
      if (!de.find(b, a))
        throw std::logic_error("gauss_curvature: boundary edge not in mesh");
      std::swap(a, b);
    }
    recorded[detail::DirectedEdges::key(a, b)] =
        static_cast<int>(walk_edges.size());
    walk_edges.push_back({a, b, be[2]});
  }

  auto corner_angle = [&](int x, int b, int y) {
    double lbx = edge_length(S, b, x);
    double lby = edge_length(S, b, y);
    if (lbx <= 0.0 || lby <= 0.0) return 0.0;
    double lxy = edge_length(S, x, y);
    double c = (lbx * lbx + lby * lby - lxy * lxy) / (2.0 * lbx * lby);
    return std::acos(std::clamp(c, -1.0, 1.0));
  };

  std::vector<char> used(walk_edges.size(), 0);
  const int cap = static_cast<int>(S.triangles.size()) + 3;
  for (size_t s = 0; s < walk_edges.size(); ++s) {
    if (used[s]) continue;
    rep.boundary_loops += 1;
    int a = walk_edges[s][0], b = walk_edges[s][1];
    int tag_in = walk_edges[s][2];
    used[s] = 1;
    bool closed = false;
    for (size_t guard = 0; guard <= walk_edges.size() && !closed; ++guard) {
      // Pivot the fan around b from edge (b, a) to the next boundary edge
      // (b, w), accumulating only this sector's angles so a pinch vertex
      // visited by two loops splits its angles between them.
      int w = *de.find(a, b);
      double sector = corner_angle(a, b, w);
      for (int spins = 0; de.find(w, b); ++spins) {
        if (spins > cap)
          throw std::logic_error("gauss_curvature: fan pivot does not close");
        int next = *de.find(w, b);
        sector += corner_angle(w, b, next);
        w = next;
      }
      auto it = recorded.find(detail::DirectedEdges::key(b, w));
      if (it == recorded.end())
        throw std::logic_error(
            "gauss_curvature: boundary walk left the recorded boundary");
      rep.boundary_turning += walk_edges[it->second][2] != tag_in
                                  ? kPi - corner_angle(a, b, w)
                                  : kPi - sector;
      if (it->second == static_cast<int>(s)) {
        closed = true;
        break;
      }
      if (used[it->second])
        throw std::logic_error("gauss_curvature: boundary walk self-crosses");
      used[it->second] = 1;
      a = b;
      b = w;
      tag_in = walk_edges[it->second][2];
    }
    if (!closed)
      throw std::logic_error("gauss_curvature: boundary loop does not close");
  }

  rep.gb_residual = rep.total_curvature + rep.boundary_turning -
                    2.0 * kPi * rep.boundary_loops;
  return rep;
}

inline double gauss_bonnet_residual(const SurfaceMesh& S) {
  return gauss_curvature(S).gb_residual;
}

// Vertical flux probe.  r and height describe the solid cylinder
// |z| <= r, |t| <= height; value integrates the inner product of the outward
// unit conormal with the vertical field over the boundary of the clipped
// piece of the surface, and perimeter is the induced length of that
// boundary.  Both vanish together only on an empty intersection.
struct FluxReport {
  double r = 0.0;
  double height = 0.0;
  double value = 0.0;
  double perimeter = 0.0;
  double h_target = 0.0;
};

namespace detail {

// One Sutherland-Hodgman pass against {vals[k] <= 0}.  Each polygon vertex
// carries the affine clip values and the tag of the edge it starts: -1 for
// interior triangle edges, -2 for free boundary edges, k >= 0 for edges
// created by clip plane k.
struct ClipVertex {
  std::array<double, 2> pos;
  std::array<double, 3> vals;
  int tag;
};

inline void clip_halfplane(std::vector<ClipVertex>& poly, int k) {
  if (poly.empty()) return;
  std::vector<ClipVertex> out;
  out.reserve(poly.size() + 2);
  for (size_t i = 0; i < poly.size(); ++i) {
    const ClipVertex& A = poly[i];
    const ClipVertex& B = poly[(i + 1) % poly.size()];
    bool ain = A.vals[k] <= 0.0, bin = B.vals[k] <= 0.0;
    auto cross = [&](int tag) {
      double s = A.vals[k] / (A.vals[k] - B.vals[k]);
      ClipVertex X;
      for (int d = 0; d < 2; ++d)
        X.pos[d] = A.pos[d] + s * (B.pos[d] - A.pos[d]);
      for (int d = 0; d < 3; ++d)
        X.vals[d] = A.vals[d] + s * (B.vals[d] - A.vals[d]);
      X.vals[k] = 0.0;
      X.tag = tag;
      return X;
    };
    if (ain && bin) {
      out.push_back(B);
    } else if (ain && !bin) {
      out.push_back(cross(k));
    } else if (!ain && bin) {
      out.push_back(cross(A.tag));
      out.push_back(B);
    }
  }
  poly.swap(out);
}

}  // namespace detail

inline FluxReport flux_vertical(const SurfaceMesh& S, double r,
                                double height) {
  if (!(r > 0.0) || !std::isfinite(r) || !(height > 0.0) ||
      !std::isfinite(height))
    throw std::invalid_argument("flux_vertical: require r > 0 and height > 0");
  if (S.t.size() != S.xy.size())
    throw std::invalid_argument("flux_vertical: height count mismatch");

  std::unordered_map<std::uint64_t, char> free_edge;
  auto ekey = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return detail::DirectedEdges::key(a, b);
  };
  for (const auto& be : S.boundary_edges) free_edge[ekey(be[0], be[1])] = 1;

  FluxReport rep;
  rep.r = r;
  rep.height = height;
  rep.h_target = S.h_target;
  for (const auto& tr : S.triangles) {
    double l01 = edge_length(S, tr[0], tr[1]);
    double l02 = edge_length(S, tr[0], tr[2]);
    double l12 = edge_length(S, tr[1], tr[2]);
    auto T = detail::comparison_coords(l01, l02, l12);
    if (T.area <= 0.0) continue;
    auto grad = detail::affine_gradient(T, S.t[tr[0]], S.t[tr[1]], S.t[tr[2]]);

    // Clip values: radial excess, then height excess above and below.  All
    // three are affine on the comparison triangle at mesh resolution.
    std::vector<detail::ClipVertex> poly(3);
    for (int i = 0; i < 3; ++i) {
      int v = tr[i], w = tr[(i + 1) % 3];
      poly[i].pos = T.p[i];
      poly[i].vals = {std::abs(S.xy[v]) - r, S.t[v] - height,
                      -S.t[v] - height};
      poly[i].tag = free_edge.count(ekey(v, w)) ? -2 : -1;
    }
    for (int k = 0; k < 3; ++k) detail::clip_halfplane(poly, k);
    if (poly.size() < 3) continue;

    for (size_t i = 0; i < poly.size(); ++i) {
      const auto& A = poly[i];
      const auto& B = poly[(i + 1) % poly.size()];
      double dx = B.pos[0] - A.pos[0], dy = B.pos[1] - A.pos[1];
      double len = std::hypot(dx, dy);
      if (len <= 0.0) continue;
      if (A.tag == -2)
        throw std::domain_error(
            "flux_vertical: probe cylinder reaches the free boundary");
      if (A.tag < 0) continue;
      // Outward normal of a counterclockwise polygon edge.
      double nx = dy / len, ny = -dx / len;
      rep.value += (grad[0] * nx + grad[1] * ny) * len;
      rep.perimeter += len;
    }
  }
  return rep;
}

// Truncated side-length balance of an ideal quadrilateral whose sides
// alternate between two families: (side 01 + side 23) - (side 12 + side 30),
// each side measured outside the horodisks at its endpoints.  Resizing any
// horocycle shifts one side of each family by the same amount, so the value
// does not depend on the choices; zero is the closing condition for the
// four-ended saddle graph over the quadrilateral.
inline double scherk_condition(const std::array<IdealPoint, 4>& corner,
                               const std::vector<Horocycle>* horocycles =
                                   nullptr) {
  std::array<double, 4> rel;
  rel[0] = 0.0;
  for (int i = 1; i < 4; ++i) {
    double d = std::fmod(corner[i].angle - corner[0].angle, 2.0 * kPi);
    if (d < 0.0) d += 2.0 * kPi;
    rel[i] = d;
  }
  for (int i = 1; i < 4; ++i)
    if (!(rel[i] > rel[i - 1]))
      throw std::invalid_argument(
          "scherk_condition: corners out of cyclic order");

  std::vector<Horocycle> H;
  if (horocycles) {
    if (horocycles->size() != 4)
      throw std::invalid_argument("scherk_condition: need four horocycles");
    H = *horocycles;
    for (int i = 0; i < 4; ++i)
      if (H[i].base.angle != corner[i].angle)
        throw std::invalid_argument(
            "scherk_condition: horocycle base does not match its corner");
  } else {
    H = default_horocycles_at(
        {corner[0], corner[1], corner[2], corner[3]});
  }

  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      double chord = ideal_chord(corner[i], corner[j]);
      if (H[i].s + H[j].s + 2.0 * std::log(0.5 * chord) < 0.0)
        throw std::domain_error("scherk_condition: overlapping horodisks");
    }

  auto side = [&](int i, int j) {
    return truncated_length(geodesic_between(corner[i], corner[j]), H[i],
                            H[j]);
  };
  return (side(0, 1) + side(2, 3)) - (side(1, 2) + side(3, 0));
}

// Root-mean-square cotangent-Laplacian residual of the height coordinate
// over interior vertices.  The weights come from the comparison triangles,
// so the operator discretizes the Laplace-Beltrami operator of the induced
// metric; the height of a minimal surface is harmonic, and the residual
// gauges how far the discrete surface is from that.
inline double harmonicity_residual(const SurfaceMesh& S) {
  const int nv = S.vertex_count();
  if (nv == 0 || S.triangles.empty())
    throw std::invalid_argument("harmonicity_residual: empty mesh");
  std::vector<double> res(nv, 0.0);
  for (const auto& tr : S.triangles) {
    std::array<double, 3> l = {edge_length(S, tr[1], tr[2]),
                               edge_length(S, tr[2], tr[0]),
                               edge_length(S, tr[0], tr[1])};
    if (detail::comparison_area(l) <= 0.0) continue;
    auto ang = detail::corner_angles(l);
    for (int i = 0; i < 3; ++i) {
      int a = tr[(i + 1) % 3], b = tr[(i + 2) % 3];
      double w = 0.5 * std::cos(ang[i]) / std::sin(ang[i]);
      double d = w * (S.t[b] - S.t[a]);
      res[a] += d;
      res[b] -= d;
    }
  }
  std::vector<char> on_boundary(nv, 0);
  for (const auto& be : S.boundary_edges)
    on_boundary[be[0]] = on_boundary[be[1]] = 1;
  double sq = 0.0;
  int count = 0;
  for (int v = 0; v < nv; ++v) {
    if (on_boundary[v]) continue;
    sq += res[v] * res[v];
    count += 1;
  }
  return count == 0 ? 0.0 : std::sqrt(sq / count);
}

// Vertical component of the unit normal.  On each triangle the tangential
// part of the vertical field is the intrinsic gradient of the height, so
// |N3| = sqrt(1 - |grad t|^2); values are averaged to vertices by comparison
// area.  collar_max is the largest vertex value in the outer radial band,
// where the normals of the model surfaces turn horizontal as the
// truncation deepens.
struct N3Profile {
  std::vector<double> vertex_n3;
  double collar_max = 0.0;
  double collar_radius = 0.0;
};

inline N3Profile n3_profile(const SurfaceMesh& S,
                            double collar_fraction = 0.1) {
  const int nv = S.vertex_count();
  if (nv == 0 || S.triangles.empty())
    throw std::invalid_argument("n3_profile: empty mesh");
  if (!(collar_fraction > 0.0) || !(collar_fraction < 1.0))
    throw std::invalid_argument("n3_profile: collar fraction in (0, 1)");

  std::vector<double> acc(nv, 0.0), wsum(nv, 0.0);
  for (const auto& tr : S.triangles) {
    double l01 = edge_length(S, tr[0], tr[1]);
    double l02 = edge_length(S, tr[0], tr[2]);
    double l12 = edge_length(S, tr[1], tr[2]);
    auto T = detail::comparison_coords(l01, l02, l12);
    if (T.area <= 0.0) continue;
    auto g = detail::affine_gradient(T, S.t[tr[0]], S.t[tr[1]], S.t[tr[2]]);
    double n3 = std::sqrt(std::max(0.0, 1.0 - g[0] * g[0] - g[1] * g[1]));
    for (int i = 0; i < 3; ++i) {
      acc[tr[i]] += T.area * n3;
      wsum[tr[i]] += T.area;
    }
  }

  N3Profile prof;
  prof.vertex_n3.assign(nv, 0.0);
  double rmax = 0.0;
  for (int v = 0; v < nv; ++v) {
    if (wsum[v] > 0.0) prof.vertex_n3[v] = acc[v] / wsum[v];
    rmax = std::max(rmax, std::abs(S.xy[v]));
  }
  prof.collar_radius = (1.0 - collar_fraction) * rmax;
  for (int v = 0; v < nv; ++v)
    if (wsum[v] > 0.0 && std::abs(S.xy[v]) >= prof.collar_radius)
      prof.collar_max = std::max(prof.collar_max, prof.vertex_n3[v]);
  return prof;
}

}  // namespace h2xr
