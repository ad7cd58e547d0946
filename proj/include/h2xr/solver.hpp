#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "domains.hpp"
#include "hyperbolic.hpp"
#include "mesher.hpp"

namespace h2xr {

// Discrete minimizer of the vertical graph-area functional over a truncated
// domain.  u holds one height per mesh node; boundary nodes carry exactly
// +n, -n, or the finite edge value per the domain labels (corner nodes take
// the finite value when one is present, otherwise the cap average).
struct GraphSolution {
  TriMesh2D mesh;
  std::vector<double> u;
  double cap_n = 0.0;
  double residual = 0.0;  // relative Euler-Lagrange residual at acceptance
  int iterations = 0;
};

struct NewtonOptions {
  double tolerance = 1e-10;  // relative to the initial gradient norm
  int max_iterations = 100;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

namespace detail {

// Planar realization of one mesh triangle by its hyperbolic side lengths:
// X1 = (0,0), X2 = (x2,0), X3 = (x3,y3), y3 > 0 for counterclockwise
// input.  The element energy is the Euclidean area of the lifted triangle
// ((X_i, u_i)), which depends on the vertex positions only through
// isometry-invariant distances.
struct Element {
  int v[3];
  double x2, x3, y3;
  double nz;  // x2 * y3, twice the realized base area

  // Coefficients of the affine horizontal normal components
  // n_x = a . u, n_y = b . u  (n = (P2-P1) x (P3-P1)).
  void normal_coeffs(double a[3], double b[3]) const {
    a[0] = y3;
    a[1] = -y3;
    a[2] = 0.0;
    b[0] = x2 - x3;
    b[1] = x3;
    b[2] = -x2;
  }
};

inline std::vector<Element> build_elements(const TriMesh2D& M) {
  std::vector<Element> es;
  es.reserve(M.triangles.size());
  for (const auto& t : M.triangles) {
    Element e;
    e.v[0] = t[0];
    e.v[1] = t[1];
    e.v[2] = t[2];
    DiskPoint p0(M.nodes[t[0]]), p1(M.nodes[t[1]]), p2(M.nodes[t[2]]);
    double d01 = dist(p0, p1), d02 = dist(p0, p2), d12 = dist(p1, p2);
    e.x2 = d01;
    e.x3 = (d02 * d02 + d01 * d01 - d12 * d12) / (2.0 * d01);
    e.y3 = std::sqrt(std::max(d02 * d02 - e.x3 * e.x3, 1e-300));
    e.nz = e.x2 * e.y3;
    es.push_back(e);
  }
  return es;
}

inline double element_energy(const Element& e, const std::vector<double>& u) {
  double a[3], b[3];
  e.normal_coeffs(a, b);
  double u0 = u[e.v[0]], u1 = u[e.v[1]], u2 = u[e.v[2]];
  double nx = a[0] * u0 + a[1] * u1 + a[2] * u2;
  double ny = b[0] * u0 + b[1] * u1 + b[2] * u2;
  return 0.5 * std::sqrt(nx * nx + ny * ny + e.nz * e.nz);
}

inline double total_energy(const std::vector<Element>& es,
                           const std::vector<double>& u) {
  double A = 0.0;
  for (const auto& e : es) A += element_energy(e, u);
  return A;
}

// Gradient of the total energy with respect to every nodal height.
inline void energy_gradient(const std::vector<Element>& es,
                            const std::vector<double>& u,
                            std::vector<double>& grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const auto& e : es) {
    double a[3], b[3];
    e.normal_coeffs(a, b);
    double u0 = u[e.v[0]], u1 = u[e.v[1]], u2 = u[e.v[2]];
    double nx = a[0] * u0 + a[1] * u1 + a[2] * u2;
    double ny = b[0] * u0 + b[1] * u1 + b[2] * u2;
    double inv = 0.5 / std::sqrt(nx * nx + ny * ny + e.nz * e.nz);
    for (int k = 0; k < 3; ++k)
      grad[e.v[k]] += inv * (nx * a[k] + ny * b[k]);
  }
}

// Boundary values per node: finite edge values win over caps, ties average.
// Throws when a finite label exceeds the cap (the data must stay within
// [-n, n]).
inline std::vector<double> boundary_values(const TriMesh2D& M, double n,
                                           std::vector<char>& is_boundary) {
  if (!(n > 0.0)) throw std::invalid_argument("solve: cap n must be positive");
  const int N = static_cast<int>(M.nodes.size());
  is_boundary.assign(N, 0);
  std::vector<double> finite_sum(N, 0.0), cap_sum(N, 0.0);
  std::vector<int> finite_cnt(N, 0), cap_cnt(N, 0);
  for (const auto& be : M.boundary_edges) {
    const EdgeLabel& L = M.domain.label(be[2]);
    double v;
    if (L.kind == EdgeLabel::PlusInf)
      v = n;
    else if (L.kind == EdgeLabel::MinusInf)
      v = -n;
    else {
      if (std::abs(L.value) > n)
        throw std::invalid_argument("solve: finite boundary value exceeds cap");
      v = L.value;
    }
    for (int end = 0; end < 2; ++end) {
      int node = be[end];
      is_boundary[node] = 1;
      if (L.kind == EdgeLabel::Finite) {
        finite_sum[node] += v;
        finite_cnt[node] += 1;
      } else {
        cap_sum[node] += v;
        cap_cnt[node] += 1;
      }
    }
  }
  std::vector<double> bc(N, 0.0);
  for (int i = 0; i < N; ++i) {
    if (!is_boundary[i]) continue;
    if (finite_cnt[i] > 0)
      bc[i] = finite_sum[i] / finite_cnt[i];
    else
      bc[i] = cap_sum[i] / cap_cnt[i];
  }
  return bc;
}

// Harmonic interpolation of the boundary data (flat cotangent stiffness),
// the Newton starting point.
inline std::vector<double> harmonic_init(const TriMesh2D& M,
                                         const std::vector<double>& bc,
                                         const std::vector<char>& is_boundary,
                                         const std::vector<int>& interior_of,
                                         int n_int) {
  const int N = static_cast<int>(M.nodes.size());
  std::vector<double> u = bc;
  if (n_int == 0) return u;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_int);
  for (const auto& t : M.triangles) {
    complexd z[3] = {M.nodes[t[0]], M.nodes[t[1]], M.nodes[t[2]]};
    double area2 = (z[1].real() - z[0].real()) * (z[2].imag() - z[0].imag()) -
                   (z[1].imag() - z[0].imag()) * (z[2].real() - z[0].real());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        complexd ei = z[(i + 2) % 3] - z[(i + 1) % 3];
        complexd ej = z[(j + 2) % 3] - z[(j + 1) % 3];
        double kij = (ei.real() * ej.real() + ei.imag() * ej.imag()) /
                     (2.0 * area2);
        int gi = t[i], gj = t[j];
        if (!is_boundary[gi]) {
          if (!is_boundary[gj])
            trips.emplace_back(interior_of[gi], interior_of[gj], kij);
          else
            rhs[interior_of[gi]] -= kij * bc[gj];
        }
      }
  }
  Eigen::SparseMatrix<double> K(n_int, n_int);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve: harmonic initializer factorization failed");
  Eigen::VectorXd x = ldlt.solve(rhs);
  for (int i = 0; i < N; ++i)
    if (!is_boundary[i]) u[i] = x[interior_of[i]];
  return u;
}

}  // namespace detail

// Total curvature of the lifted graph: sum of angle defects 2*pi - sum of
// incident corner angles over interior vertices, with angles taken from the
// product-metric chord lengths sqrt(dist^2 + (du)^2).
inline double graph_total_curvature(const TriMesh2D& M,
                                    const std::vector<double>& u) {
  const int N = static_cast<int>(M.nodes.size());
  std::vector<char> is_boundary(N, 0);
  for (const auto& be : M.boundary_edges)
    is_boundary[be[0]] = is_boundary[be[1]] = 1;
  std::vector<double> angle_sum(N, 0.0);
  for (const auto& t : M.triangles) {
    double l[3];  // l[k] is the side opposite corner k
    for (int k = 0; k < 3; ++k) {
      int i = t[(k + 1) % 3], j = t[(k + 2) % 3];
      double d = dist(DiskPoint(M.nodes[i]), DiskPoint(M.nodes[j]));
      double du = u[i] - u[j];
      l[k] = std::sqrt(d * d + du * du);
    }
    for (int k = 0; k < 3; ++k) {
      double b = l[(k + 1) % 3], c = l[(k + 2) % 3], a = l[k];
      double cosv = (b * b + c * c - a * a) / (2.0 * b * c);
      angle_sum[t[k]] += std::acos(std::clamp(cosv, -1.0, 1.0));
    }
  }
  double total = 0.0;
  for (int i = 0; i < N; ++i)
    if (!is_boundary[i]) total += 2.0 * kPi - angle_sum[i];
  return total;
}

// Graph-area functional: sum over elements of the Euclidean area of the
// triangle with the element's hyperbolic side lengths as base and the nodal
// heights lifted.  Exceeds the flat-slice area unless u is constant per
// element, and is invariant under disk isometries.
inline double area(const TriMesh2D& mesh, const std::vector<double>& u) {
  if (u.size() != mesh.nodes.size())
    throw std::invalid_argument("area: one height per node required");
  return detail::total_energy(detail::build_elements(mesh), u);
}

// Analytic gradient of the graph-area functional with respect to every
// nodal height (boundary nodes included).
inline std::vector<double> area_gradient(const TriMesh2D& mesh,
                                         const std::vector<double>& u) {
  if (u.size() != mesh.nodes.size())
    throw std::invalid_argument("area_gradient: one height per node required");
  std::vector<double> g(u.size(), 0.0);
  detail::energy_gradient(detail::build_elements(mesh), u, g);
  return g;
}

// Damped Newton minimization of the graph area with Dirichlet data derived
// from the domain labels and cap n.  Accepts only when the relative gradient
// norm is below tolerance and the discrete maximum principle holds; throws
// on non-convergence with the last residual in the message.
inline GraphSolution solve_dirichlet(const TriMesh2D& mesh, double cap_n,
                                     const NewtonOptions& opts = {},
                                     const std::vector<double>* warm_start =
                                         nullptr) {
  const int N = static_cast<int>(mesh.nodes.size());
  std::vector<char> is_boundary;
  std::vector<double> bc = detail::boundary_values(mesh, cap_n, is_boundary);
  std::vector<int> interior_of(N, -1);
  int n_int = 0;
  for (int i = 0; i < N; ++i)
    if (!is_boundary[i]) interior_of[i] = n_int++;

  std::vector<double> u;
  if (warm_start) {
    if (warm_start->size() != static_cast<size_t>(N))
      throw std::invalid_argument("solve: warm start size mismatch");
    u = *warm_start;
    for (int i = 0; i < N; ++i)
      if (is_boundary[i]) u[i] = bc[i];
  } else {
    u = detail::harmonic_init(mesh, bc, is_boundary, interior_of, n_int);
  }

  std::vector<detail::Element> es = detail::build_elements(mesh);
  std::vector<double> grad(N, 0.0);

  auto interior_residual = [&](Eigen::VectorXd& F) {
    detail::energy_gradient(es, u, grad);
    for (int i = 0; i < N; ++i)
      if (!is_boundary[i]) F[interior_of[i]] = grad[i];
    return F.norm();
  };

  Eigen::VectorXd F(n_int);
  double r0 = n_int ? interior_residual(F) : 0.0;
  const double scale = std::max(1.0, r0);
  double energy = detail::total_energy(es, u);
  double rel = r0 / scale;
  int iter = 0;

  while (n_int > 0 && rel > opts.tolerance) {
    if (iter >= opts.max_iterations) {
      std::ostringstream os;
      os << "solve: Newton did not converge in " << opts.max_iterations
         << " iterations, last relative residual " << rel;
      throw std::runtime_error(os.str());
    }
    ++iter;

    // Hessian of the element areas, interior block.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(es.size() * 9);
    for (const auto& e : es) {
      double a[3], b[3];
      e.normal_coeffs(a, b);
      double u0 = u[e.v[0]], u1 = u[e.v[1]], u2 = u[e.v[2]];
      double nx = a[0] * u0 + a[1] * u1 + a[2] * u2;
      double ny = b[0] * u0 + b[1] * u1 + b[2] * u2;
      double nn = std::sqrt(nx * nx + ny * ny + e.nz * e.nz);
      double m[3];
      for (int k = 0; k < 3; ++k) m[k] = nx * a[k] + ny * b[k];
      for (int i = 0; i < 3; ++i) {
        if (is_boundary[e.v[i]]) continue;
        for (int j = 0; j < 3; ++j) {
          if (is_boundary[e.v[j]]) continue;
          double h = (a[i] * a[j] + b[i] * b[j]) / (2.0 * nn) -
                     m[i] * m[j] / (2.0 * nn * nn * nn);
          trips.emplace_back(interior_of[e.v[i]], interior_of[e.v[j]], h);
        }
      }
    }
    Eigen::SparseMatrix<double> H(n_int, n_int);
    H.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd d;
    double shift = 0.0;
    for (int attempt = 0;; ++attempt) {
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-F);
        if (ldlt.info() == Eigen::Success) break;
      }
      if (attempt >= 6) {
        std::ostringstream os;
        os << "solve: Hessian factorization failed, last relative residual "
           << rel;
        throw std::runtime_error(os.str());
      }
      shift = (shift == 0.0) ? 1e-12 : shift * 100.0;
      Eigen::SparseMatrix<double> I(n_int, n_int);
      I.setIdentity();
      H += shift * I;
    }

    double slope = F.dot(d);  // negative for a descent direction
    double t = 1.0;
    std::vector<double> trial = u;
    bool accepted = false;
    // Near the minimum the demanded decrease falls below the roundoff in the
    // energy evaluation; the noise allowance keeps full Newton steps accepted
    // there instead of stalling the backtracking.
    double noise =
        8.0 * std::numeric_limits<double>::epsilon() * std::abs(energy);
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      for (int i = 0; i < N; ++i)
        if (!is_boundary[i]) trial[i] = u[i] + t * d[interior_of[i]];
      double e_trial = detail::total_energy(es, trial);
      if (e_trial <= energy + opts.armijo * t * slope + noise) {
        u = trial;
        energy = e_trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "solve: line search failed, last relative residual " << rel;
      throw std::runtime_error(os.str());
    }
    rel = interior_residual(F) / scale;
  }

  // Discrete maximum principle, enforced on acceptance.
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < N; ++i)
    if (is_boundary[i]) {
      lo = std::min(lo, bc[i]);
      hi = std::max(hi, bc[i]);
    }
  double slack = 1e-9 * std::max(1.0, hi - lo);
  for (int i = 0; i < N; ++i)
    if (u[i] < lo - slack || u[i] > hi + slack) {
      std::ostringstream os;
      os << "solve: maximum principle violated at node " << i << " (u=" << u[i]
         << ", bounds [" << lo << ", " << hi << "])";
      throw std::runtime_error(os.str());
    }

  GraphSolution sol;
  sol.mesh = mesh;
  sol.u = std::move(u);
  sol.cap_n = cap_n;
  sol.residual = rel;
  sol.iterations = iter;
  return sol;
}

// ---- exhaustion ------------------------------------------------------------

struct ExhaustionStep {
  double r;  // truncation radius, 1 - 1/(n+1)
  double n;  // boundary cap
  double h;  // mesh target length
};

// Doubling caps n_j = 2^j starting at j = 1, r_j = 1 - 1/(n_j + 1), h halved.
inline std::vector<ExhaustionStep> make_schedule(int steps, double h0) {
  if (steps < 1) throw std::invalid_argument("make_schedule: steps < 1");
  if (!(h0 > 0.0)) throw std::invalid_argument("make_schedule: h0 <= 0");
  std::vector<ExhaustionStep> s;
  for (int j = 1; j <= steps; ++j) {
    double n = static_cast<double>(1 << j);
    s.push_back(ExhaustionStep{1.0 - 1.0 / (n + 1.0), n,
                               h0 / static_cast<double>(1 << (j - 1))});
  }
  return s;
}

struct ExhaustionOptions {
  double grading = 8.0;
  NewtonOptions newton;
  int max_probes = 128;
};

struct ExhaustionRun {
  LabeledPolygon domain;
  std::vector<ExhaustionStep> schedule;
  std::vector<GraphSolution> solutions;
  std::vector<double> curvature_trace;  // graph total curvature per step
  std::vector<complexd> probes;         // fixed compact probe set
  std::vector<double> probe_diffs;      // max |u_j - u_{j-1}| over probes
  JSReport::Verdict verdict = JSReport::Verdict::Satisfied;
  std::string warning;
};

namespace detail {

// Cell-binned point location over a finished mesh, for warm starts and
// probe evaluation.
struct TriLocator {
  const TriMesh2D& M;
  double cell = 1e-3;
  std::unordered_map<long long, std::vector<int>> bins;

  static long long key(int ix, int iy) {
    return (static_cast<long long>(ix) << 32) ^ (iy & 0xffffffffLL);
  }

  explicit TriLocator(const TriMesh2D& mesh) : M(mesh) {
    // Cell size from the coarsest sampled triangle so each triangle touches
    // O(1) cells even when h_target is unset.
    double est = 2.0 * mesh.h_target;
    size_t stride = std::max<size_t>(1, M.triangles.size() / 64);
    for (size_t t = 0; t < M.triangles.size(); t += stride) {
      const auto& tri = M.triangles[t];
      for (int k = 0; k < 3; ++k)
        est = std::max(est, 2.0 * std::abs(M.nodes[tri[k]] -
                                           M.nodes[tri[(k + 1) % 3]]));
    }
    cell = std::max(est, 1e-3);
    for (int t = 0; t < static_cast<int>(M.triangles.size()); ++t) {
      const auto& tri = M.triangles[t];
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (int k = 0; k < 3; ++k) {
        complexd z = M.nodes[tri[k]];
        x0 = std::min(x0, z.real());
        x1 = std::max(x1, z.real());
        y0 = std::min(y0, z.imag());
        y1 = std::max(y1, z.imag());
      }
      for (int ix = static_cast<int>(std::floor(x0 / cell));
           ix <= static_cast<int>(std::floor(x1 / cell)); ++ix)
        for (int iy = static_cast<int>(std::floor(y0 / cell));
             iy <= static_cast<int>(std::floor(y1 / cell)); ++iy)
          bins[key(ix, iy)].push_back(t);
    }
  }

  int locate(complexd p) const {
    auto it = bins.find(key(static_cast<int>(std::floor(p.real() / cell)),
                            static_cast<int>(std::floor(p.imag() / cell))));
    if (it == bins.end()) return -1;
    for (int t : it->second) {
      const auto& tri = M.triangles[t];
      complexd a = M.nodes[tri[0]], b = M.nodes[tri[1]], c = M.nodes[tri[2]];
      double s0 = orient(a, b, p), s1 = orient(b, c, p), s2 = orient(c, a, p);
      if (s0 >= -1e-14 && s1 >= -1e-14 && s2 >= -1e-14) return t;
    }
    return -1;
  }

  double eval_in(int t, const std::vector<double>& u, complexd p) const {
    const auto& tri = M.triangles[t];
    complexd a = M.nodes[tri[0]], b = M.nodes[tri[1]], c = M.nodes[tri[2]];
    double w0 = orient(b, c, p), w1 = orient(c, a, p), w2 = orient(a, b, p);
    double s = w0 + w1 + w2;
    return (w0 * u[tri[0]] + w1 * u[tri[1]] + w2 * u[tri[2]]) / s;
  }

  // Linear interpolation of nodal data at p; points outside the mesh are
  // walked radially inward until they land in a triangle.
  double eval(const std::vector<double>& u, complexd p) const {
    complexd q = p;
    for (int k = 0; k <= 80; ++k) {
      int t = locate(q);
      if (t >= 0) return eval_in(t, u, q);
      q = p * (1.0 - 0.0125 * (k + 1));
    }
    return 0.0;
  }
};

}  // namespace detail

// The exhaustion of a labeled domain: per step truncate at r_j, mesh at h_j,
// solve with cap n_j warm-started from the previous step, and record the
// graph total curvature and probe differences.  A failing solvability check
// is a warning, not an error, so failure modes stay observable.
inline ExhaustionRun exhaustion_solve(const LabeledPolygon& P,
                                      const std::vector<ExhaustionStep>& schedule,
                                      const ExhaustionOptions& opts = {}) {
  if (schedule.empty())
    throw std::invalid_argument("exhaustion_solve: empty schedule");
  for (size_t j = 0; j + 1 < schedule.size(); ++j)
    if (!(schedule[j].r < schedule[j + 1].r) ||
        !(schedule[j].n < schedule[j + 1].n) ||
        !(schedule[j].h > schedule[j + 1].h))
      throw std::invalid_argument(
          "exhaustion_solve: schedule must have r and n increasing, h "
          "decreasing");

  ExhaustionRun run;
  run.domain = P;
  run.schedule = schedule;
  JSReport js = js_check(P);
  run.verdict = js.verdict;
  if (js.verdict != JSReport::Verdict::Satisfied)
    run.warning =
        "solvability check not satisfied; run continues for failure study";

  for (size_t j = 0; j < schedule.size(); ++j) {
    const ExhaustionStep& st = schedule[j];
    TriMesh2D mesh;
    try {
      mesh = triangulate(truncate(P, st.r), st.h, opts.grading);
    } catch (const std::exception& ex) {
      throw std::runtime_error("exhaustion step " + std::to_string(j) +
                               ": " + ex.what());
    }

    std::vector<double> warm;
    const std::vector<double>* warm_ptr = nullptr;
    std::unique_ptr<detail::TriLocator> prev_loc;
    if (j > 0) {
      const GraphSolution& prev = run.solutions.back();
      prev_loc = std::make_unique<detail::TriLocator>(prev.mesh);
      warm.resize(mesh.nodes.size());
      for (size_t i = 0; i < mesh.nodes.size(); ++i) {
        double v = prev_loc->eval(prev.u, mesh.nodes[i]);
        warm[i] = std::clamp(v, -st.n, st.n);
      }
      warm_ptr = &warm;
    }

    GraphSolution sol;
    try {
      try {
        sol = solve_dirichlet(mesh, st.n, opts.newton, warm_ptr);
      } catch (const std::runtime_error&) {
        if (!warm_ptr) throw;
        // The transported coarse solution can leave a capped plateau against
        // the deeper boundary data that damped Newton crawls along; a cold
        // harmonic start avoids it.
        sol = solve_dirichlet(mesh, st.n, opts.newton, nullptr);
      }
    } catch (const std::exception& ex) {
      throw std::runtime_error("exhaustion step " + std::to_string(j) +
                               ": " + ex.what());
    }
    run.curvature_trace.push_back(graph_total_curvature(mesh, sol.u));

    if (j == 0) {
      // Fixed probe set: interior nodes of the first mesh kept away from the
      // whole step-0 boundary, so heights at the probes settle instead of
      // tracking boundary layers that move with the caps.
      std::vector<char> bdry(mesh.nodes.size(), 0);
      for (const auto& be : mesh.boundary_edges) bdry[be[0]] = bdry[be[1]] = 1;
      const double margin = 0.15 * st.r;
      std::vector<complexd> interior;
      for (size_t i = 0; i < mesh.nodes.size(); ++i) {
        if (bdry[i]) continue;
        double gap = 1e300;
        for (const auto& be : mesh.boundary_edges)
          gap = std::min(gap, std::abs(mesh.nodes[i] - mesh.nodes[be[0]]));
        if (gap >= margin) interior.push_back(mesh.nodes[i]);
      }
      if (interior.empty())
        for (size_t i = 0; i < mesh.nodes.size(); ++i)
          if (!bdry[i]) interior.push_back(mesh.nodes[i]);
      size_t stride = std::max<size_t>(1, interior.size() / opts.max_probes);
      for (size_t i = 0; i < interior.size(); i += stride)
        run.probes.push_back(interior[i]);
    } else {
      const GraphSolution& prev = run.solutions.back();
      detail::TriLocator cur_loc(mesh);
      double diff = 0.0;
      for (complexd p : run.probes)
        diff = std::max(diff, std::abs(cur_loc.eval(sol.u, p) -
                                       prev_loc->eval(prev.u, p)));
      run.probe_diffs.push_back(diff);
    }

    run.solutions.push_back(std::move(sol));
  }
  return run;
}

}  // namespace h2xr
