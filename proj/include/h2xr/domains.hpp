#pragma once

// Labeled geodesic polygons in the Poincare disk and the Jenkins-Serrin
// solvability check.  Edge i joins vertex i to vertex i+1 (cyclic).  Edge
// data is +infinity, -infinity, or a finite height.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hyperbolic.hpp"

namespace h2xr {

struct Vertex {
  bool ideal = false;
  complexd z{0, 0};    // position; unit-circle point iff ideal
  double angle = 0.0;  // canonical angle, meaningful iff ideal

  static Vertex disk(complexd p) {
    DiskPoint check(p);
    Vertex v;
    v.ideal = false;
    v.z = p;
    return v;
  }
  static Vertex at_infinity(double a) {
    IdealPoint q(a);
    Vertex v;
    v.ideal = true;
    v.z = q.point();
    v.angle = q.angle;
    return v;
  }
  IdealPoint ideal_point() const {
    if (!ideal) throw std::logic_error("Vertex: not ideal");
    return IdealPoint(angle);
  }
};

inline bool same_vertex(const Vertex& a, const Vertex& b) {
  if (a.ideal != b.ideal) return false;
  return a.ideal ? (a.angle == b.angle) : (a.z == b.z);
}

struct EdgeLabel {
  enum Kind { PlusInf, MinusInf, Finite } kind = Finite;
  double value = 0.0;  // Finite only

  static EdgeLabel plus_inf() { return {PlusInf, 0.0}; }
  static EdgeLabel minus_inf() { return {MinusInf, 0.0}; }
  static EdgeLabel finite(double c) {
    if (!std::isfinite(c)) throw std::invalid_argument("EdgeLabel: non-finite height");
    return {Finite, c};
  }
  bool infinite() const { return kind != Finite; }
  EdgeLabel negated() const {
    if (kind == PlusInf) return minus_inf();
    if (kind == MinusInf) return plus_inf();
    return finite(-value);
  }
  friend bool operator==(const EdgeLabel& a, const EdgeLabel& b) {
    return a.kind == b.kind && (a.kind != Finite || a.value == b.value);
  }
};

struct LabeledPolygon {
  std::vector<Vertex> vertices;
  std::vector<EdgeLabel> labels;  // labels[i] on edge (vertices[i], vertices[i+1])

  int size() const { return static_cast<int>(vertices.size()); }
  const Vertex& vertex(int i) const { return vertices[(i % size() + size()) % size()]; }
  const EdgeLabel& label(int i) const { return labels[(i % size() + size()) % size()]; }

  Geodesic edge_geodesic(int i) const {
    const Vertex& a = vertex(i);
    const Vertex& b = vertex(i + 1);
    if (a.ideal && b.ideal)
      return geodesic_between(a.ideal_point(), b.ideal_point());
    if (a.ideal) return geodesic_between(a.ideal_point(), DiskPoint(b.z));
    if (b.ideal) return geodesic_between(DiskPoint(a.z), b.ideal_point());
    return geodesic_between(DiskPoint(a.z), DiskPoint(b.z));
  }

  std::vector<int> ideal_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (vertices[i].ideal) out.push_back(i);
    return out;
  }
  bool all_edges_infinite() const {
    for (const auto& l : labels)
      if (!l.infinite()) return false;
    return true;
  }
};

namespace detail {

// Proper intersection of Euclidean segments, used on sampled edge polylines.
inline bool segments_cross(complexd a, complexd b, complexd c, complexd d) {
  auto orient = [](complexd p, complexd q, complexd r) {
    double v = (q.real() - p.real()) * (r.imag() - p.imag()) -
               (q.imag() - p.imag()) * (r.real() - p.real());
    return (v > 0) - (v < 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

inline std::vector<complexd> sample_edge(const Geodesic& g, int n) {
  std::vector<complexd> pts(n + 1);
  for (int i = 0; i <= n; ++i) pts[i] = g.point_at(double(i) / n);
  return pts;
}

}  // namespace detail

// Sampled-polyline winding test.  Adequate for the desk-scale domains here;
// callers keep query points away from the boundary.
inline bool point_inside(const LabeledPolygon& P, complexd z,
                         int samples_per_edge = 64) {
  double winding = 0.0;
  for (int i = 0; i < P.size(); ++i) {
    auto pts = detail::sample_edge(P.edge_geodesic(i), samples_per_edge);
    for (size_t j = 0; j + 1 < pts.size(); ++j) {
      complexd u = pts[j] - z, v = pts[j + 1] - z;
      winding += std::atan2(u.real() * v.imag() - u.imag() * v.real(),
                            u.real() * v.real() + u.imag() * v.imag());
    }
  }
  return std::abs(winding) > kPi;  // ~2*pi inside, ~0 outside
}

// Validating constructor: >= 3 vertices, one label per edge, consecutive
// vertices distinct, no two adjacent infinite edges of equal sign meeting at
// an ideal vertex, and pairwise disjoint non-adjacent edges.
inline LabeledPolygon make_polygon(std::vector<Vertex> vs,
                                   std::vector<EdgeLabel> labels) {
  const int n = static_cast<int>(vs.size());
  if (n < 3) throw std::invalid_argument("polygon: need >= 3 vertices");
  if (labels.size() != vs.size())
    throw std::invalid_argument("polygon: one label per edge required");
  for (int i = 0; i < n; ++i)
    if (same_vertex(vs[i], vs[(i + 1) % n]))
      throw std::invalid_argument("polygon: consecutive vertices equal");
  for (int i = 0; i < n; ++i) {
    const Vertex& shared = vs[(i + 1) % n];
    const EdgeLabel& a = labels[i];
    const EdgeLabel& b = labels[(i + 1) % n];
    if (shared.ideal && a.infinite() && b.infinite() && a.kind == b.kind)
      throw std::invalid_argument(
          "polygon: adjacent equal infinite labels at an ideal vertex");
  }
  LabeledPolygon P{std::move(vs), std::move(labels)};
  std::vector<std::vector<complexd>> poly(n);
  for (int i = 0; i < n; ++i)
    poly[i] = detail::sample_edge(P.edge_geodesic(i), 32);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges
      for (size_t s = 0; s + 1 < poly[i].size(); ++s)
        for (size_t t = 0; t + 1 < poly[j].size(); ++t)
          if (detail::segments_cross(poly[i][s], poly[i][s + 1], poly[j][t],
                                     poly[j][t + 1]))
            throw std::invalid_argument("polygon: edges intersect, not simple");
    }
  }
  return P;
}

// ---- constructors ----------------------------------------------------------

// Ideal 2k-gon with alternating labels, +infinity first.
inline LabeledPolygon ideal_scherk_polygon(const std::vector<double>& angles) {
  const int m = static_cast<int>(angles.size());
  if (m < 4 || m % 2 != 0)
    throw std::invalid_argument("ideal_scherk_polygon: need 2k angles, k >= 2");
  std::vector<double> a(m);
  for (int i = 0; i < m; ++i) a[i] = canonical_angle(angles[i]);
  int lo = static_cast<int>(std::min_element(a.begin(), a.end()) - a.begin());
  for (int i = 0; i + 1 < m; ++i)
    if (!(a[(lo + i) % m] < a[(lo + i + 1) % m]))
      throw std::invalid_argument(
          "ideal_scherk_polygon: angles not strictly cyclically ordered");
  std::vector<Vertex> vs;
  std::vector<EdgeLabel> ls;
  for (int i = 0; i < m; ++i) {
    vs.push_back(Vertex::at_infinity(a[i]));
    ls.push_back(i % 2 == 0 ? EdgeLabel::plus_inf() : EdgeLabel::minus_inf());
  }
  return make_polygon(std::move(vs), std::move(ls));
}

// Triangle with vertices 0, angle 0, angle theta and data (+inf, -inf, 0).
inline LabeledPolygon triangle_domain(double theta) {
  if (!(theta > 0.0) || !(theta <= kPi / 2))
    throw std::invalid_argument("triangle_domain: theta outside (0, pi/2]");
  std::vector<Vertex> vs{Vertex::disk(0.0), Vertex::at_infinity(0.0),
                         Vertex::at_infinity(theta)};
  std::vector<EdgeLabel> ls{EdgeLabel::plus_inf(), EdgeLabel::minus_inf(),
                            EdgeLabel::finite(0.0)};
  return make_polygon(std::move(vs), std::move(ls));
}

// Fan of 2k ideal vertices e^{i j theta}, j = 0..2k-1, around the origin,
// alternating labels from +infinity, closed by a zero-height edge.
inline LabeledPolygon omega_theta(int k, double theta) {
  if (k < 2) throw std::invalid_argument("omega_theta: k >= 2 required");
  if (!(theta > 0.0) || !(theta < kPi / (2 * k)))
    throw std::invalid_argument("omega_theta: theta outside (0, pi/(2k))");
  std::vector<Vertex> vs{Vertex::disk(0.0)};
  std::vector<EdgeLabel> ls;
  for (int j = 0; j < 2 * k; ++j) {
    vs.push_back(Vertex::at_infinity(j * theta));
    ls.push_back(j % 2 == 0 ? EdgeLabel::plus_inf() : EdgeLabel::minus_inf());
  }
  ls.push_back(EdgeLabel::finite(0.0));
  return make_polygon(std::move(vs), std::move(ls));
}

// Same fan with the first ideal vertex moved to e^{-i beta} and only k+1
// ideal vertices: 0, e^{-i beta}, e^{i theta}, ..., e^{i k theta}, closed by
// a zero-height edge back to the origin.
inline LabeledPolygon omega_theta_beta(int k, double theta, double beta) {
  if (k < 2) throw std::invalid_argument("omega_theta_beta: k >= 2 required");
  if (!(theta > 0.0) || !(theta < kPi / (2 * k)))
    throw std::invalid_argument("omega_theta_beta: theta outside (0, pi/(2k))");
  if (!(beta > 0.0) || !(beta <= kPi / 2 - k * theta))
    throw std::invalid_argument(
        "omega_theta_beta: beta outside (0, pi/2 - k*theta]");
  std::vector<Vertex> vs{Vertex::disk(0.0), Vertex::at_infinity(-beta)};
  std::vector<EdgeLabel> ls{EdgeLabel::plus_inf()};
  for (int j = 1; j <= k; ++j) {
    vs.push_back(Vertex::at_infinity(j * theta));
    ls.push_back(j % 2 == 1 ? EdgeLabel::minus_inf() : EdgeLabel::plus_inf());
  }
  ls.push_back(EdgeLabel::finite(0.0));
  return make_polygon(std::move(vs), std::move(ls));
}

// ---- reflect-and-union -----------------------------------------------------

namespace detail {

inline bool same_geodesic_line(const Geodesic& a, const Geodesic& b,
                               double tol) {
  if (a.kind != b.kind) return false;
  if (a.kind == GeodesicKind::Diameter) {
    double d = std::abs(std::remainder(a.phi - b.phi, kPi));
    return d <= tol;
  }
  return std::abs(a.center - b.center) <= tol &&
         std::abs(a.radius - b.radius) <= tol;
}

// Signed side of the geodesic line; zero on the line.
inline double side_of(const Geodesic& g, complexd z) {
  if (g.kind == GeodesicKind::Diameter)
    return (z * std::polar(1.0, -g.phi)).imag();
  return std::abs(z - g.center) - g.radius;
}

}  // namespace detail

// Union of P with its reflection across g, where g carries P's single
// finite-height edge.  The reflected copy's labels are negated: this is the
// sign flip a half-turn about g applies to a graph, absorbed into the domain,
// and it is what keeps infinite labels alternating at the welded vertex.
// The welded edge's endpoints each appear once; the finite edge disappears
// into the interior.
inline LabeledPolygon reflect_union(const LabeledPolygon& P,
                                    const Geodesic& g) {
  const int n = P.size();
  int f = -1;
  for (int i = 0; i < n; ++i) {
    if (!P.labels[i].infinite()) {
      if (f >= 0)
        throw std::invalid_argument("reflect_union: multiple finite edges");
      f = i;
    }
  }
  if (f < 0) throw std::invalid_argument("reflect_union: no finite edge");
  if (!detail::same_geodesic_line(P.edge_geodesic(f), g, 1e-10))
    throw std::invalid_argument(
        "reflect_union: geodesic does not contain the finite edge");
  double sgn = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == f || i == (f + 1) % n) continue;
    double s = detail::side_of(g, P.vertices[i].z);
    if (std::abs(s) <= 1e-12)
      throw std::invalid_argument("reflect_union: vertex on the axis");
    if (sgn == 0.0)
      sgn = s;
    else if (s * sgn < 0.0)
      throw std::invalid_argument("reflect_union: polygon straddles the axis");
  }
  Isometry R = reflect_across(g);
  // Reindex so the finite edge is (n-1, 0); both its endpoints lie on g.
  auto src = [&](int j) -> const Vertex& { return P.vertex(f + 1 + j); };
  auto srclab = [&](int j) -> const EdgeLabel& { return P.label(f + 1 + j); };
  std::vector<Vertex> vs;
  std::vector<EdgeLabel> ls;
  for (int j = 0; j < n; ++j) vs.push_back(src(j));
  for (int j = 0; j < n - 1; ++j) ls.push_back(srclab(j));
  for (int j = n - 2; j >= 1; --j) {
    const Vertex& v = src(j);
    vs.push_back(v.ideal ? Vertex::at_infinity(R(v.ideal_point()).angle)
                         : Vertex::disk(R(v.z)));
  }
  for (int j = n - 2; j >= 0; --j) ls.push_back(srclab(j).negated());
  return make_polygon(std::move(vs), std::move(ls));
}

// ---- horocycles and truncated edge lengths ---------------------------------

// Equal-size horocycles at the given ideal points: the tangency-critical
// Euclidean diameter for the closest pair, halved.  Deterministic and always
// pairwise disjoint with margin.
inline std::vector<Horocycle> default_horocycles_at(
    const std::vector<IdealPoint>& pts) {
  std::vector<Horocycle> out;
  if (pts.empty()) return out;
  double d_star = 1.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      double c = ideal_chord(pts[i], pts[j]);
      if (c <= 0.0)
        throw std::invalid_argument("default_horocycles_at: repeated point");
      d_star = std::min(d_star, 2.0 * c / (2.0 + c));
    }
  for (const auto& p : pts) out.push_back(Horocycle::from_diameter(p, 0.5 * d_star));
  return out;
}

inline std::vector<Horocycle> default_horocycles(const LabeledPolygon& P) {
  std::vector<IdealPoint> pts;
  for (const auto& v : P.vertices)
    if (v.ideal) pts.push_back(v.ideal_point());
  return default_horocycles_at(pts);
}

// Length of the geodesic chord (va, vb) outside the horocycles at its ideal
// endpoints; plain distance when both endpoints are interior.
inline double truncated_chord_length(const Vertex& a, const Vertex& b,
                                     const Horocycle* Ha, const Horocycle* Hb) {
  if (a.ideal && b.ideal)
    return truncated_length(geodesic_between(a.ideal_point(), b.ideal_point()),
                            *Ha, *Hb);
  if (a.ideal) return dist_point_horocycle(b.z, *Ha);
  if (b.ideal) return dist_point_horocycle(a.z, *Hb);
  return dist(a.z, b.z);
}

// ---- Jenkins-Serrin check ---------------------------------------------------

// Slack record for one inscribed polygon.  margin_* = |boundary|/2 - (total
// truncated length of the +inf resp. -inf edges).  A margin is "balanced"
// when every horocycle size cancels out of it; only balanced margins are
// meaningful as strict-inequality checks, the others grow without bound as
// the horocycles shrink.
struct InscribedMargin {
  std::vector<int> indices;
  double margin_alpha = 0.0, margin_beta = 0.0;
  bool balanced_alpha = false, balanced_beta = false;
};

struct JSReport {
  enum class Verdict { Satisfied, FailsEquality, FailsStrict };
  Verdict verdict = Verdict::Satisfied;
  std::vector<int> witness;      // inscribed polygon achieving failure; may be empty
  std::vector<double> margins;   // all balanced slacks, enumeration order
  std::vector<InscribedMargin> detail;
  std::optional<double> global_equality_residual;  // all-infinite boundary only
  double tolerance = 1e-9;
};

inline const char* to_string(JSReport::Verdict v) {
  switch (v) {
    case JSReport::Verdict::Satisfied: return "Satisfied";
    case JSReport::Verdict::FailsEquality: return "FailsEquality";
    default: return "FailsStrict";
  }
}

// Jenkins-Serrin solvability over the polygon: for every inscribed polygon
// P' spanned by vertices of P (the whole of P included only when a finite
// edge exists), the truncated +inf and -inf edge totals must each stay below
// half the truncated perimeter; with an all-infinite boundary the totals over
// the whole boundary must agree exactly instead.  Verdicts are decided by the
// balanced margins only, so they do not depend on the horocycle sizes.
inline JSReport js_check(
    const LabeledPolygon& P,
    const std::optional<std::vector<double>>& horocycle_sizes = std::nullopt) {
  const int n = P.size();
  if (n < 3) throw std::invalid_argument("js_check: degenerate polygon");
  const double tol = 1e-9;

  std::vector<int> ideal_of(n, -1);
  std::vector<IdealPoint> ipts;
  for (int i = 0; i < n; ++i)
    if (P.vertices[i].ideal) {
      ideal_of[i] = static_cast<int>(ipts.size());
      ipts.push_back(P.vertices[i].ideal_point());
    }
  std::vector<Horocycle> H;
  if (horocycle_sizes) {
    if (horocycle_sizes->size() != ipts.size())
      throw std::invalid_argument("js_check: one horocycle size per ideal vertex");
    for (size_t i = 0; i < ipts.size(); ++i)
      H.push_back(Horocycle(ipts[i], (*horocycle_sizes)[i]));
  } else {
    H = default_horocycles_at(ipts);
  }
  auto horo = [&](int vi) -> const Horocycle* {
    return ideal_of[vi] >= 0 ? &H[ideal_of[vi]] : nullptr;
  };

  const bool all_inf = P.all_edges_infinite();
  JSReport rep;
  rep.tolerance = tol;

  // Global equality over the whole boundary (all-infinite case only); every
  // ideal vertex meets one edge of each sign, so the horocycle sizes cancel.
  if (all_inf) {
    double alpha = 0.0, beta = 0.0;
    for (int i = 0; i < n; ++i) {
      double L = truncated_chord_length(P.vertex(i), P.vertex(i + 1), horo(i),
                                        horo((i + 1) % n));
      (P.labels[i].kind == EdgeLabel::PlusInf ? alpha : beta) += L;
    }
    rep.global_equality_residual = alpha - beta;
  }

  // Chord data is subset-independent: precompute per ordered vertex pair the
  // truncated length, the edge label when the pair is a boundary edge, and
  // whether a diagonal runs through the interior.
  auto chord_geodesic = [&](int i, int j) {
    const Vertex& a = P.vertices[i];
    const Vertex& b = P.vertices[j];
    if (a.ideal && b.ideal)
      return geodesic_between(a.ideal_point(), b.ideal_point());
    if (a.ideal) return geodesic_between(a.ideal_point(), DiskPoint(b.z));
    if (b.ideal) return geodesic_between(DiskPoint(a.z), b.ideal_point());
    return geodesic_between(DiskPoint(a.z), DiskPoint(b.z));
  };
  std::vector<double> len(n * n, 0.0);
  std::vector<char> ok(n * n, 0);
  std::vector<const EdgeLabel*> lab(n * n, nullptr);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool boundary = (j == (i + 1) % n) || (i == (j + 1) % n);
      if (boundary) {
        int e = (j == (i + 1) % n) ? i : j;
        lab[i * n + j] = &P.labels[e];
        ok[i * n + j] = 1;
      } else if (j > i) {
        Geodesic d = chord_geodesic(i, j);
        bool inside = true;
        for (int q = 1; q <= 7 && inside; ++q)
          inside = point_inside(P, d.point_at(q / 8.0));
        ok[i * n + j] = ok[j * n + i] = inside ? 1 : 0;
      }
      if (ok[i * n + j] && j > i)
        len[i * n + j] = len[j * n + i] = truncated_chord_length(
            P.vertices[i], P.vertices[j], horo(i), horo(j));
    }

  // Enumerate vertex subsets in cyclic order, smallest first; ascending mask
  // order makes the reported witness deterministic.
  const InscribedMargin* strict_hit = nullptr;
  const InscribedMargin* equal_hit = nullptr;
  for (int size = 3; size <= n; ++size) {
    if (size == n && all_inf) break;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != static_cast<unsigned>(size)) continue;
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) idx.push_back(i);
      const int m = size;
      double perim = 0.0, alpha = 0.0, beta = 0.0;
      std::vector<int> ca(m, 0), cb(m, 0);  // per-vertex horocycle coefficients
      bool valid = true;
      for (int t = 0; t < m && valid; ++t) {
        int i = idx[t], j = idx[(t + 1) % m];
        if (!ok[i * n + j]) {
          valid = false;
          break;
        }
        const EdgeLabel* l =
            (j == (i + 1) % n || i == (j + 1) % n) ? lab[i * n + j] : nullptr;
        double L = len[i * n + j];
        perim += L;
        int wa = 1, wb = 1;  // weight of this edge's horocycle sizes in the margin
        if (l && l->kind == EdgeLabel::PlusInf) {
          alpha += L;
          wa = -1;
        }
        if (l && l->kind == EdgeLabel::MinusInf) {
          beta += L;
          wb = -1;
        }
        if (ideal_of[i] >= 0) {
          ca[t] += wa;
          cb[t] += wb;
        }
        if (ideal_of[j] >= 0) {
          ca[(t + 1) % m] += wa;
          cb[(t + 1) % m] += wb;
        }
      }
      if (!valid) continue;
      InscribedMargin rec;
      rec.indices = std::move(idx);
      rec.margin_alpha = 0.5 * perim - alpha;
      rec.margin_beta = 0.5 * perim - beta;
      rec.balanced_alpha =
          std::all_of(ca.begin(), ca.end(), [](int c) { return c == 0; });
      rec.balanced_beta =
          std::all_of(cb.begin(), cb.end(), [](int c) { return c == 0; });
      rep.detail.push_back(std::move(rec));
    }
  }

  for (const auto& rec : rep.detail) {
    for (int pass = 0; pass < 2; ++pass) {
      bool bal = pass == 0 ? rec.balanced_alpha : rec.balanced_beta;
      double mgn = pass == 0 ? rec.margin_alpha : rec.margin_beta;
      if (!bal) continue;
      rep.margins.push_back(mgn);
      if (mgn < -tol && !strict_hit) strict_hit = &rec;
      if (std::abs(mgn) <= tol && !equal_hit) equal_hit = &rec;
    }
  }

  if (strict_hit) {
    rep.verdict = JSReport::Verdict::FailsStrict;
    rep.witness = strict_hit->indices;
  } else if (equal_hit) {
    rep.verdict = JSReport::Verdict::FailsEquality;
    rep.witness = equal_hit->indices;
  } else if (all_inf && std::abs(*rep.global_equality_residual) > tol) {
    rep.verdict = JSReport::Verdict::FailsEquality;
  } else {
    rep.verdict = JSReport::Verdict::Satisfied;
  }
  return rep;
}

}  // namespace h2xr
