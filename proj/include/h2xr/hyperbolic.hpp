#pragma once

// Poincare-disk primitives: distances, geodesics, isometries, horocycles,
// and horocycle-truncated lengths.  Angles in radians, lengths in hyperbolic
// units.  The metric is (2/(1-|z|^2))^2 |dz|^2 on the open unit disk.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace h2xr {

using complexd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Reduce an angle to the canonical representative in [0, 2*pi).
inline double canonical_angle(double a) {
  double t = std::fmod(a, 2.0 * kPi);
  if (t < 0.0) t += 2.0 * kPi;
  if (t >= 2.0 * kPi) t = 0.0;  // rounding of tiny negative inputs
  return t;
}

// Conformal factor lambda(z) = 2/(1-|z|^2).
inline double conformal_factor(complexd z) {
  return 2.0 / (1.0 - std::norm(z));
}

// Point strictly inside the disk.  Construction rejects |z| >= 1.
struct DiskPoint {
  complexd z;
  explicit DiskPoint(complexd p) : z(p) {
    if (!(std::abs(p) < 1.0))
      throw std::invalid_argument("DiskPoint: |z| >= 1");
  }
};

// Point on the circle at infinity, stored as its canonical angle.
// Equality is exact on the canonical form.
struct IdealPoint {
  double angle;
  explicit IdealPoint(double a) : angle(canonical_angle(a)) {}
  complexd point() const { return std::polar(1.0, angle); }
  friend bool operator==(IdealPoint u, IdealPoint v) {
    return u.angle == v.angle;
  }
  friend bool operator!=(IdealPoint u, IdealPoint v) { return !(u == v); }
};

// dist(p,q) = 2 asinh(|p-q| / sqrt((1-|p|^2)(1-|q|^2))), stable near the rim.
inline double dist(complexd p, complexd q) {
  double a = 1.0 - std::norm(p);
  double b = 1.0 - std::norm(q);
  if (a <= 0.0 || b <= 0.0)
    throw std::invalid_argument("dist: point not inside the disk");
  return 2.0 * std::asinh(std::abs(p - q) / std::sqrt(a * b));
}
inline double dist(DiskPoint p, DiskPoint q) { return dist(p.z, q.z); }

// Unoriented geodesic plus the defining endpoint pair.  A geodesic is either
// a diameter (line angle phi in [0, pi)) or a circular arc orthogonal to the
// unit circle (|center|^2 = 1 + radius^2).  The representation is identical
// under endpoint swap.
enum class GeodesicKind { Diameter, Arc };

struct Geodesic {
  GeodesicKind kind = GeodesicKind::Diameter;
  double phi = 0.0;        // Diameter only
  complexd center{0, 0};   // Arc only
  double radius = 0.0;     // Arc only
  complexd e0{0, 0}, e1{0, 0};  // endpoints; unit modulus iff ideal
  bool ideal0 = false, ideal1 = false;
  double ang0 = 0.0, ang1 = 0.0;  // canonical ideal angles, valid iff ideal

  // Point on the defining segment, t in [0,1]; t=0 at e0, t=1 at e1.
  // Endpoints are returned exactly so chains of edges share corner nodes
  // bitwise.
  complexd point_at(double t) const {
    if (t == 0.0) return e0;
    if (t == 1.0) return e1;
    if (kind == GeodesicKind::Diameter) return e0 + t * (e1 - e0);
    double a0 = std::arg(e0 - center);
    double a1 = std::arg(e1 - center);
    double d = std::remainder(a1 - a0, 2.0 * kPi);  // in (-pi, pi), |d| < pi
    return center + std::polar(radius, a0 + t * d);
  }

  // Euclidean unit tangent at endpoint k, pointing into the segment.
  // Angles against other curves are hyperbolic angles (the model is conformal).
  complexd tangent_into(int k) const {
    if (kind == GeodesicKind::Diameter) {
      complexd d = (k == 0) ? e1 - e0 : e0 - e1;
      return d / std::abs(d);
    }
    double a0 = std::arg(e0 - center);
    double a1 = std::arg(e1 - center);
    double d = std::remainder(a1 - a0, 2.0 * kPi);
    complexd e = (k == 0) ? e0 : e1;
    double sgn = (k == 0) ? (d >= 0 ? 1.0 : -1.0) : (d >= 0 ? -1.0 : 1.0);
    complexd t = complexd(0, 1) * (e - center) * sgn;
    return t / std::abs(t);
  }
};

namespace detail {

// Build the geodesic through a and b (unit modulus marks an ideal endpoint).
// Each endpoint w of an orthogonal circle with center c obeys
// Re(conj(w) c) = (1+|w|^2)/2; the system is symmetric in the endpoints, so
// the representation cannot depend on their order.  Near-zero determinant
// means the endpoints are collinear with the origin: a diameter.
inline Geodesic make_geodesic(complexd a, bool a_ideal, complexd b,
                              bool b_ideal) {
  if (a == b && a_ideal == b_ideal)
    throw std::invalid_argument("geodesic_between: equal endpoints");
  Geodesic g;
  g.e0 = a;
  g.e1 = b;
  g.ideal0 = a_ideal;
  g.ideal1 = b_ideal;
  double det = a.real() * b.imag() - b.real() * a.imag();
  if (std::abs(det) <= 1e-12) {
    g.kind = GeodesicKind::Diameter;
    // Swap-symmetric endpoint choice so the representation is bitwise
    // identical regardless of argument order.
    complexd w = a;
    double na = std::norm(a), nb = std::norm(b);
    if (nb > na || (nb == na && (b.real() > a.real() ||
                                 (b.real() == a.real() && b.imag() > a.imag()))))
      w = b;
    if (std::abs(w) == 0.0)
      throw std::invalid_argument("geodesic_between: endpoints coincide");
    g.phi = std::fmod(std::atan2(w.imag(), w.real()) + 2.0 * kPi, kPi);
  } else {
    g.kind = GeodesicKind::Arc;
    double r1 = 0.5 * (1.0 + std::norm(a));
    double r2 = 0.5 * (1.0 + std::norm(b));
    double cx = (r1 * b.imag() - r2 * a.imag()) / det;
    double cy = (a.real() * r2 - b.real() * r1) / det;
    g.center = complexd(cx, cy);
    g.radius = std::sqrt(std::max(std::norm(g.center) - 1.0, 0.0));
  }
  return g;
}

}  // namespace detail

inline Geodesic geodesic_between(DiskPoint p, DiskPoint q) {
  return detail::make_geodesic(p.z, false, q.z, false);
}
inline Geodesic geodesic_between(DiskPoint p, IdealPoint q) {
  Geodesic g = detail::make_geodesic(p.z, false, q.point(), true);
  g.ang1 = q.angle;
  return g;
}
inline Geodesic geodesic_between(IdealPoint p, DiskPoint q) {
  Geodesic g = detail::make_geodesic(p.point(), true, q.z, false);
  g.ang0 = p.angle;
  return g;
}
inline Geodesic geodesic_between(IdealPoint p, IdealPoint q) {
  if (p == q) throw std::invalid_argument("geodesic_between: equal endpoints");
  Geodesic g = detail::make_geodesic(p.point(), true, q.point(), true);
  g.ang0 = p.angle;
  g.ang1 = q.angle;
  return g;
}

// Disk-preserving Mobius map, optionally pre-composed with conjugation.
// T(z) = (a z' + b)/(c z' + d) with z' = conj(z) iff reflection.
struct Isometry {
  complexd a{1, 0}, b{0, 0}, c{0, 0}, d{1, 0};
  bool reflection = false;

  complexd operator()(complexd z) const {
    if (reflection) z = std::conj(z);
    return (a * z + b) / (c * z + d);
  }
  DiskPoint operator()(DiskPoint p) const { return DiskPoint((*this)(p.z)); }
  IdealPoint operator()(IdealPoint p) const {
    return IdealPoint(std::arg((*this)(p.point())));
  }
};

inline Isometry compose(const Isometry& A, const Isometry& B) {
  complexd ba = B.a, bb = B.b, bc = B.c, bd = B.d;
  if (A.reflection) {
    ba = std::conj(ba);
    bb = std::conj(bb);
    bc = std::conj(bc);
    bd = std::conj(bd);
  }
  Isometry r;
  r.a = A.a * ba + A.b * bc;
  r.b = A.a * bb + A.b * bd;
  r.c = A.c * ba + A.d * bc;
  r.d = A.c * bb + A.d * bd;
  r.reflection = (A.reflection != B.reflection);
  return r;
}

inline Isometry inverse(const Isometry& T) {
  Isometry r;
  r.a = T.d;
  r.b = -T.b;
  r.c = -T.c;
  r.d = T.a;
  if (T.reflection) {
    r.a = std::conj(r.a);
    r.b = std::conj(r.b);
    r.c = std::conj(r.c);
    r.d = std::conj(r.d);
    r.reflection = true;
  }
  return r;
}

inline Isometry rotation_about_origin(double phi) {
  Isometry r;
  r.a = std::polar(1.0, phi);
  return r;
}

// Direct isometry taking 0 to z0.
inline Isometry disk_translation(complexd z0) {
  if (!(std::abs(z0) < 1.0))
    throw std::invalid_argument("disk_translation: |z0| >= 1");
  Isometry r;
  r.a = complexd(1, 0);
  r.b = z0;
  r.c = std::conj(z0);
  r.d = complexd(1, 0);
  return r;
}

// Reflection across a geodesic: z -> e^{2 i phi} conj(z) for a diameter,
// inversion in the orthogonal circle for an arc.  Involution, fixes g.
inline Isometry reflect_across(const Geodesic& g) {
  Isometry r;
  r.reflection = true;
  if (g.kind == GeodesicKind::Diameter) {
    r.a = std::polar(1.0, 2.0 * g.phi);
  } else {
    r.a = g.center;
    r.b = g.radius * g.radius - std::norm(g.center);
    r.c = complexd(1, 0);
    r.d = -std::conj(g.center);
  }
  return r;
}

// Rotation by pi about an interior point: direct involution fixing c.
inline Isometry point_rotation_pi(complexd c) {
  if (!(std::abs(c) < 1.0))
    throw std::invalid_argument("point_rotation_pi: |c| >= 1");
  Isometry r;
  double n = 1.0 + std::norm(c);
  r.a = complexd(-n, 0);
  r.b = 2.0 * c;
  r.c = -2.0 * std::conj(c);
  r.d = complexd(n, 0);
  return r;
}

// Busemann function at the ideal point xi, normalized so B(0) = 0:
// B_xi(z) = log(|xi - z|^2 / (1 - |z|^2)).  Level sets are horocycles at xi.
inline double busemann(IdealPoint xi, complexd z) {
  return std::log(std::norm(xi.point() - z) / (1.0 - std::norm(z)));
}

// Horocycle at an ideal base point.  The Busemann parameter s > 0 selects the
// level set {B = -s}; s = 0 would be the horocycle through the origin.  The
// Euclidean diameter is d = 1 - tanh(s/2), in (0,1); both views are mutually
// consistent, converting s -> d -> s is the identity.
struct Horocycle {
  IdealPoint base;
  double s;

  Horocycle(IdealPoint b, double size) : base(b), s(size) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("Horocycle: require s > 0");
  }
  double euclidean_diameter() const { return 1.0 - std::tanh(0.5 * s); }
  static Horocycle from_diameter(IdealPoint b, double d) {
    if (!(d > 0.0) || !(d < 1.0))
      throw std::invalid_argument("Horocycle: require diameter in (0,1)");
    return Horocycle(b, 2.0 * std::atanh(1.0 - d));
  }
  // Point of the horocycle deepest inside the disk.
  complexd apex() const { return (1.0 - euclidean_diameter()) * base.point(); }
};

// Distance from an interior point to a horocycle, B_xi(p) + s.
// Defined only outside the closed horodisk {B <= -s}.
inline double dist_point_horocycle(complexd p, const Horocycle& H) {
  double b = busemann(H.base, p);
  if (b <= -H.s)
    throw std::domain_error("dist_point_horocycle: point inside horodisk");
  return b + H.s;
}
inline double dist_point_horocycle(DiskPoint p, const Horocycle& H) {
  return dist_point_horocycle(p.z, H);
}

// Image of a horocycle under an isometry: the base point maps directly and
// the new size is read off the transported apex.
inline Horocycle transform(const Horocycle& H, const Isometry& T) {
  IdealPoint base = T(H.base);
  double s = -busemann(base, T(H.apex()));
  return Horocycle(base, s);
}

// Euclidean chord between two ideal points, |e^{ia} - e^{ib}| = 2|sin((a-b)/2)|.
inline double ideal_chord(IdealPoint u, IdealPoint v) {
  return 2.0 * std::abs(std::sin(0.5 * (u.angle - v.angle)));
}

// Length of the geodesic between two ideal points left over after removing
// the horoball ends: s_a + s_b + 2 log(chord/2).  Nonnegative exactly when
// the horodisks are disjoint.  Adding delta to either s adds delta exactly.
inline double truncated_length(const Geodesic& g, const Horocycle& Ha,
                               const Horocycle& Hb) {
  if (!g.ideal0 || !g.ideal1)
    throw std::invalid_argument("truncated_length: endpoints must be ideal");
  bool fwd = (Ha.base.angle == g.ang0 && Hb.base.angle == g.ang1);
  bool rev = (Ha.base.angle == g.ang1 && Hb.base.angle == g.ang0);
  if (!fwd && !rev)
    throw std::invalid_argument(
        "truncated_length: horocycle not based at a geodesic endpoint");
  double chord = 2.0 * std::abs(std::sin(0.5 * (g.ang0 - g.ang1)));
  double L = Ha.s + Hb.s + 2.0 * std::log(0.5 * chord);
  if (L < 0.0)
    throw std::domain_error("truncated_length: overlapping horodisks");
  return L;
}

}  // namespace h2xr
