#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "h2xr/io.hpp"
#include "h2xr/solver.hpp"
#include "h2xr/surface.hpp"

using namespace h2xr;

namespace {

LabeledPolygon alternating_square() {
  std::vector<Vertex> vs;
  std::vector<EdgeLabel> ls;
  for (int j = 0; j < 4; ++j) {
    vs.push_back(Vertex::at_infinity(kPi / 4 + j * kPi / 2));
    ls.push_back(j % 2 == 0 ? EdgeLabel::plus_inf() : EdgeLabel::minus_inf());
  }
  return make_polygon(std::move(vs), std::move(ls));
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("run artifact records every step and round-trips", "[io]") {
  ExhaustionRun run =
      exhaustion_solve(alternating_square(), make_schedule(2, 0.25));
  REQUIRE(run.solutions.size() == 2);

  ordered_json j = run_to_json(run);
  REQUIRE(j.at("steps").size() == 2);
  for (const auto& s : j.at("steps")) {
    REQUIRE(s.at("h").get<double>() > 0.0);
    REQUIRE(s.at("area").get<double>() > 0.0);
    REQUIRE(s.at("total_curvature").get<double>() < 0.0);
    REQUIRE(s.at("triangles").get<int>() > 10);
  }
  REQUIRE(j.at("verdict").get<std::string>() == "Satisfied");
  REQUIRE(j.at("probe_diffs").size() == 2);

  std::string path = temp_path("h2xr_run_artifact.json");
  write_run_file(path, run);
  ordered_json back = read_run_file(path);
  REQUIRE(back == j);

  SECTION("rewriting is byte-identical") {
    std::string first = read_text_file(path);
    write_run_file(path, run);
    REQUIRE(read_text_file(path) == first);
  }

  SECTION("csv has one row per step with full-precision fields") {
    std::string csv = run_csv(j);
    REQUIRE(csv.rfind("step,r,n,h,residual,area,total_curvature\n", 0) == 0);
    int rows = 0;
    for (char c : csv)
      if (c == '\n') ++rows;
    REQUIRE(rows == 3);
    REQUIRE(run_csv(back) == csv);
    // field 6 of row 1 parses back to the recorded area exactly
    std::string row = csv.substr(csv.find('\n') + 1);
    for (int skip = 0; skip < 5; ++skip) row = row.substr(row.find(',') + 1);
    double area_back = std::stod(row);
    REQUIRE(area_back == j.at("steps")[0].at("area").get<double>());
  }

  std::remove(path.c_str());
}

TEST_CASE("run artifact reader rejects truncated files", "[io]") {
  std::string path = temp_path("h2xr_bad_artifact.json");
  write_text_file(path, "{\"steps\": []}\n");
  REQUIRE_THROWS_AS(read_run_file(path), std::invalid_argument);
  write_text_file(path, "{\"steps\": [{\"step\": 0, \"r\": 0.5}]}\n");
  REQUIRE_THROWS_AS(read_run_file(path), std::invalid_argument);
  std::remove(path.c_str());
  REQUIRE_THROWS_AS(read_run_file(path), std::runtime_error);
}

TEST_CASE("obj export re-parses to the same mesh", "[io]") {
  TriMesh2D M = triangulate(truncate(alternating_square(), 0.7), 0.2);
  SurfaceMesh S = lift(solve_dirichlet(M, 1.0));
  std::string obj = surface_to_obj(S);
  ObjData d = parse_obj(obj);
  REQUIRE(d.vertices.size() == S.xy.size());
  REQUIRE(d.faces.size() == S.triangles.size());
  for (size_t v = 0; v < d.vertices.size(); ++v) {
    REQUIRE(d.vertices[v][0] == S.xy[v].real());
    REQUIRE(d.vertices[v][1] == S.xy[v].imag());
    REQUIRE(d.vertices[v][2] == S.t[v]);
  }
  for (size_t f = 0; f < d.faces.size(); ++f)
    for (int i = 0; i < 3; ++i) REQUIRE(d.faces[f][i] == S.triangles[f][i]);

  SECTION("malformed inputs are rejected") {
    REQUIRE_THROWS_AS(parse_obj("v 0 0\n"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_obj("v 0 0 0\nf 1 1 1 1\n"),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_obj("vn 0 0 1\n"), std::invalid_argument);
  }
}

TEST_CASE("ply export carries copy ids and vertical components", "[io]") {
  SurfaceMesh S = assemble_twisted(1, kPi / 3, 0.0, make_schedule(1, 0.3));
  std::string ply = surface_to_ply(S);
  REQUIRE(ply.rfind("ply\nformat ascii 1.0\n", 0) == 0);
  REQUIRE(ply.find("element vertex " + std::to_string(S.xy.size())) !=
          std::string::npos);
  REQUIRE(ply.find("element face " + std::to_string(S.triangles.size())) !=
          std::string::npos);
  REQUIRE(ply.find("property int copy_id") != std::string::npos);
  REQUIRE(ply.find("property double n3") != std::string::npos);
  // four sheets present: copy ids 0..3 each appear in the vertex block
  for (int id = 0; id < 4; ++id) {
    bool seen = false;
    for (int v : S.copy_of)
      if (v == id) seen = true;
    REQUIRE(seen);
  }
  REQUIRE(surface_to_ply(S) == ply);
}

TEST_CASE("surface report embeds resolutions and tolerances", "[io]") {
  TriMesh2D M = triangulate(truncate(alternating_square(), 0.8), 0.15);
  SurfaceMesh S = lift(solve_dirichlet(M, 2.0));
  std::string rep = surface_report_text(S, {{0.35, 1.0}});
  REQUIRE(rep.rfind("h2xr surface report\n", 0) == 0);
  for (const char* key :
       {"mesh: ", "curvature: total=", "gauss_bonnet: residual=",
        "harmonicity: rms=", "n3: collar_max=", "flux r=", "tolerance",
        "h_target=0.15"})
    REQUIRE(rep.find(key) != std::string::npos);
  REQUIRE(surface_report_text(S, {{0.35, 1.0}}) == rep);
}
