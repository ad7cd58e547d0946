#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <cstdio>
#include <vector>

#include "h2xr/io.hpp"
#include "h2xr/mesher.hpp"

using namespace h2xr;
using Catch::Matchers::WithinAbs;

namespace {

// Disk-coordinate square with finite labels, counterclockwise.
LabeledPolygon disk_square() {
  std::vector<Vertex> vs{
      Vertex::disk(complexd(0.5, -0.5)), Vertex::disk(complexd(0.5, 0.5)),
      Vertex::disk(complexd(-0.5, 0.5)), Vertex::disk(complexd(-0.5, -0.5))};
  std::vector<EdgeLabel> ls(4, EdgeLabel::finite(0.0));
  return make_polygon(std::move(vs), std::move(ls));
}

double loop_area(const TriMesh2D& M) {
  double twice = 0.0;
  for (const auto& e : M.boundary_edges) {
    complexd a = M.nodes[e[0]], b = M.nodes[e[1]];
    twice += a.real() * b.imag() - b.real() * a.imag();
  }
  return 0.5 * twice;
}

bool mesh_contains(const TriMesh2D& M, complexd p) {
  for (const auto& t : M.triangles) {
    complexd a = M.nodes[t[0]], b = M.nodes[t[1]], c = M.nodes[t[2]];
    auto side = [&](complexd u, complexd v) {
      return (v.real() - u.real()) * (p.imag() - u.imag()) -
             (v.imag() - u.imag()) * (p.real() - u.real());
    };
    if (side(a, b) >= -1e-15 && side(b, c) >= -1e-15 && side(c, a) >= -1e-15)
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("truncation pulls ideal vertices onto the circle of radius r") {
  LabeledPolygon P = triangle_domain(kPi / 2);
  TruncatedPolygon T = truncate(P, 0.8);
  REQUIRE(T.size() == 3);
  REQUIRE_THAT(std::abs(T.vertices[0] - complexd(0.0, 0.0)), WithinAbs(0.0, 0.0));
  REQUIRE_THAT(std::abs(T.vertices[1] - complexd(0.8, 0.0)), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(std::abs(T.vertices[2] - complexd(0.0, 0.8)), WithinAbs(0.0, 1e-15));
  REQUIRE(T.source.labels.size() == P.labels.size());
  for (size_t i = 0; i < P.labels.size(); ++i) REQUIRE(T.label(i) == P.labels[i]);

  for (double r : {0.9, 0.99, 0.999})
    for (int i = 0; i < 3; ++i) {
      TruncatedPolygon Tr = truncate(P, r);
      if (P.vertices[i].ideal)
        REQUIRE_THAT(std::abs(Tr.vertices[i] - P.vertices[i].z),
                     WithinAbs(1.0 - r, 1e-12));
    }

  REQUIRE_THROWS_AS(truncate(P, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(truncate(P, 1.0), std::invalid_argument);

  // Repeated ideal angle at nonadjacent vertices is rejected up front.
  std::vector<Vertex> vs{Vertex::at_infinity(0.0), Vertex::at_infinity(1.0),
                         Vertex::at_infinity(0.0)};
  std::vector<EdgeLabel> ls{EdgeLabel::plus_inf(), EdgeLabel::minus_inf(),
                            EdgeLabel::finite(0.0)};
  LabeledPolygon bad{std::move(vs), std::move(ls)};
  REQUIRE_THROWS_AS(truncate(bad, 0.5), std::invalid_argument);
}

TEST_CASE("truncation rechecks simplicity") {
  // The truncated edge between r and r e^{i pi/2} bows closer to the origin
  // than the ideal edge (Euclidean depth 0.4002 at r = 0.8 versus 0.4142
  // ideal), so a radial edge straddling that depth crosses the truncated
  // boundary even though the ideal polygon is simple.
  complexd diag = std::polar(1.0, kPi / 4);
  std::vector<Vertex> vs{Vertex::at_infinity(0.0), Vertex::at_infinity(kPi / 2),
                         Vertex::disk(0.407 * diag), Vertex::disk(0.3 * diag)};
  std::vector<EdgeLabel> ls{EdgeLabel::plus_inf(), EdgeLabel::finite(0.0),
                            EdgeLabel::finite(0.0), EdgeLabel::finite(0.0)};
  LabeledPolygon P = make_polygon(std::move(vs), std::move(ls));
  REQUIRE_THROWS_AS(truncate(P, 0.8), std::invalid_argument);
  REQUIRE_NOTHROW(truncate(P, 0.995));
}

TEST_CASE("square mesh density tracks the area count") {
  TruncatedPolygon T = truncate(disk_square(), 0.9);
  TriMesh2D M1 = triangulate(T, 0.1);
  MeshAudit a1 = mesh_audit(M1);
  INFO(a1.message);
  REQUIRE(a1.ok);
  REQUIRE(a1.min_angle_nonexempt_deg >= 20.0 - 1e-6);

  double A = loop_area(M1);
  REQUIRE(A > 0.5);
  REQUIRE(A < 1.0);
  double predicted = 2.0 * A / (0.1 * 0.1);
  double count = static_cast<double>(M1.triangles.size());
  REQUIRE(count >= 0.5 * predicted);
  REQUIRE(count <= 2.0 * predicted);

  TriMesh2D M2 = triangulate(T, 0.05);
  REQUIRE(mesh_audit(M2).ok);
  double ratio = static_cast<double>(M2.triangles.size()) / count;
  REQUIRE(ratio >= 4.0 / 1.5);
  REQUIRE(ratio <= 4.0 * 1.5);
}

TEST_CASE("boundary tags resolve and grading refines the infinite edges") {
  TruncatedPolygon T = truncate(triangle_domain(kPi / 2), 0.8);
  TriMesh2D M = triangulate(T, 0.12);
  MeshAudit audit = mesh_audit(M);
  INFO(audit.message);
  REQUIRE(audit.ok);

  double min_inf = 1e30, max_fin = 0.0;
  for (const auto& e : M.boundary_edges) {
    REQUIRE(e[2] >= 0);
    REQUIRE(e[2] < 3);
    double len = std::abs(M.nodes[e[0]] - M.nodes[e[1]]);
    if (T.label(e[2]).infinite())
      min_inf = std::min(min_inf, len);
    else
      max_fin = std::max(max_fin, len);
  }
  REQUIRE(min_inf <= 0.12 / 4.0);       // graded band reaches h/grading scale
  REQUIRE(max_fin >= 0.12 / 4.0);       // finite edge stays coarse off-band
  REQUIRE(max_fin >= 3.0 * min_inf);

  // The two truncated ideal corners are sharp and declared exempt; the
  // right-angle corner at the origin is not.
  REQUIRE(M.exempt_disks.size() == 2);
  for (const auto& d : M.exempt_disks)
    REQUIRE(std::abs(complexd(d[0], d[1])) > 0.5);
}

TEST_CASE("meshing is deterministic") {
  TruncatedPolygon T = truncate(triangle_domain(1.2), 0.85);
  TriMesh2D a = triangulate(T, 0.1);
  TriMesh2D b = triangulate(T, 0.1);
  REQUIRE(a.nodes == b.nodes);
  REQUIRE(a.triangles == b.triangles);
  REQUIRE(a.boundary_edges == b.boundary_edges);
  REQUIRE(a.corners == b.corners);
}

TEST_CASE("meshed region covers compact subsets as r approaches 1") {
  LabeledPolygon P = triangle_domain(kPi / 2);
  complexd probe(0.6, 0.05);
  TriMesh2D coarse = triangulate(truncate(P, 0.55), 0.1);
  TriMesh2D fine = triangulate(truncate(P, 0.9), 0.1);
  REQUIRE(mesh_audit(coarse).ok);
  REQUIRE(mesh_audit(fine).ok);
  REQUIRE_FALSE(mesh_contains(coarse, probe));
  REQUIRE(mesh_contains(fine, probe));
}

TEST_CASE("mesh audit rejects corrupted meshes") {
  TriMesh2D good = triangulate(truncate(disk_square(), 0.9), 0.15);
  REQUIRE(mesh_audit(good).ok);

  TriMesh2D flipped = good;
  std::swap(flipped.triangles[0][0], flipped.triangles[0][1]);
  REQUIRE_FALSE(mesh_audit(flipped).ok);

  TriMesh2D open_loop = good;
  open_loop.boundary_edges.pop_back();
  REQUIRE_FALSE(mesh_audit(open_loop).ok);

  TriMesh2D drifted = good;
  drifted.nodes[drifted.boundary_edges[0][0]] += complexd(1e-4, 0.0);
  REQUIRE_FALSE(mesh_audit(drifted).ok);

  TriMesh2D retagged = good;
  retagged.boundary_edges[0][2] = 99;
  REQUIRE_FALSE(mesh_audit(retagged).ok);
}

TEST_CASE("mesh files round trip") {
  TriMesh2D M = triangulate(truncate(triangle_domain(kPi / 2), 0.8), 0.15);
  const std::string path = "mesh_roundtrip_tmp.json";
  write_mesh_file(path, M);
  TriMesh2D back = read_mesh_file(path);
  REQUIRE(back.nodes == M.nodes);
  REQUIRE(back.triangles == M.triangles);
  REQUIRE(back.boundary_edges == M.boundary_edges);
  REQUIRE(back.corners == M.corners);
  REQUIRE(back.domain.r == M.domain.r);
  REQUIRE(back.domain.vertices == M.domain.vertices);

  std::string once = read_text_file(path);
  write_mesh_file(path, back);
  REQUIRE(read_text_file(path) == once);
  std::remove(path.c_str());
}
