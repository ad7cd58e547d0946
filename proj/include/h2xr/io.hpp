#pragma once

// Serialization: domain description files (JSON), mesh dumps, run artifacts,
// OBJ/PLY surface exports.  All writers are deterministic: no timestamps, no
// environment-dependent fields, shortest round-trip doubles.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diagnostics.hpp"
#include "domains.hpp"
#include "mesher.hpp"
#include "solver.hpp"
#include "surface.hpp"

namespace h2xr {

using ordered_json = nlohmann::ordered_json;

struct DomainFile {
  LabeledPolygon polygon;
  std::optional<std::vector<double>> horocycle_sizes;  // one per ideal vertex
};

inline ordered_json domain_to_json(const LabeledPolygon& P,
                                   const std::optional<std::vector<double>>&
                                       horocycle_sizes = std::nullopt) {
  ordered_json j;
  j["vertices"] = ordered_json::array();
  for (const auto& v : P.vertices) {
    if (v.ideal)
      j["vertices"].push_back({{"ideal", v.angle}});
    else
      j["vertices"].push_back({{"disk", {v.z.real(), v.z.imag()}}});
  }
  j["labels"] = ordered_json::array();
  for (const auto& l : P.labels) {
    if (l.kind == EdgeLabel::PlusInf)
      j["labels"].push_back("+inf");
    else if (l.kind == EdgeLabel::MinusInf)
      j["labels"].push_back("-inf");
    else
      j["labels"].push_back({{"finite", l.value}});
  }
  if (horocycle_sizes) j["horocycles"] = *horocycle_sizes;
  return j;
}

inline DomainFile domain_from_json(const ordered_json& j) {
  if (!j.contains("vertices") || !j.contains("labels"))
    throw std::invalid_argument("domain: missing vertices or labels");
  std::vector<Vertex> vs;
  for (const auto& v : j.at("vertices")) {
    if (v.contains("ideal"))
      vs.push_back(Vertex::at_infinity(v.at("ideal").get<double>()));
    else if (v.contains("disk")) {
      auto xy = v.at("disk");
      vs.push_back(Vertex::disk(complexd(xy.at(0).get<double>(),
                                         xy.at(1).get<double>())));
    } else {
      throw std::invalid_argument("domain: vertex needs 'ideal' or 'disk'");
    }
  }
  std::vector<EdgeLabel> ls;
  for (const auto& l : j.at("labels")) {
    if (l.is_string() && l.get<std::string>() == "+inf")
      ls.push_back(EdgeLabel::plus_inf());
    else if (l.is_string() && l.get<std::string>() == "-inf")
      ls.push_back(EdgeLabel::minus_inf());
    else if (l.is_object() && l.contains("finite"))
      ls.push_back(EdgeLabel::finite(l.at("finite").get<double>()));
    else
      throw std::invalid_argument("domain: label must be +inf, -inf, or finite");
  }
  DomainFile out{make_polygon(std::move(vs), std::move(ls)), std::nullopt};
  if (j.contains("horocycles")) {
    std::vector<double> sizes = j.at("horocycles").get<std::vector<double>>();
    size_t n_ideal = out.polygon.ideal_indices().size();
    if (sizes.size() != n_ideal)
      throw std::invalid_argument("domain: one horocycle size per ideal vertex");
    out.horocycle_sizes = std::move(sizes);
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << body;
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Mesh dump.  The domain is stored as (polygon, r, h, grading) and the
// truncation is reconstructed on read; truncate() is deterministic, so the
// rebuilt TruncatedPolygon is bit-identical to the serialized one.
inline ordered_json mesh_to_json(const TriMesh2D& M) {
  ordered_json j;
  j["domain"] = domain_to_json(M.domain.source);
  j["r"] = M.domain.r;
  j["h_target"] = M.h_target;
  j["grading"] = M.grading;
  j["nodes"] = ordered_json::array();
  for (const auto& z : M.nodes) j["nodes"].push_back({z.real(), z.imag()});
  j["triangles"] = M.triangles;
  j["boundary_edges"] = M.boundary_edges;
  j["corners"] = M.corners;
  j["exempt_disks"] = M.exempt_disks;
  return j;
}

inline TriMesh2D mesh_from_json(const ordered_json& j) {
  TriMesh2D M;
  M.domain = truncate(domain_from_json(j.at("domain")).polygon,
                      j.at("r").get<double>());
  M.h_target = j.at("h_target").get<double>();
  M.grading = j.at("grading").get<double>();
  for (const auto& xy : j.at("nodes"))
    M.nodes.push_back(complexd(xy.at(0).get<double>(), xy.at(1).get<double>()));
  M.triangles = j.at("triangles").get<std::vector<std::array<int, 3>>>();
  M.boundary_edges =
      j.at("boundary_edges").get<std::vector<std::array<int, 3>>>();
  M.corners = j.at("corners").get<std::vector<int>>();
  M.exempt_disks =
      j.at("exempt_disks").get<std::vector<std::array<double, 3>>>();
  MeshAudit audit = mesh_audit(M);
  if (!audit.ok) throw std::invalid_argument("mesh file invalid: " + audit.message);
  return M;
}

inline void write_mesh_file(const std::string& path, const TriMesh2D& M) {
  write_text_file(path, mesh_to_json(M).dump() + "\n");
}

inline TriMesh2D read_mesh_file(const std::string& path) {
  return mesh_from_json(ordered_json::parse(read_text_file(path)));
}

inline void write_domain_file(const std::string& path, const LabeledPolygon& P,
                              const std::optional<std::vector<double>>&
                                  horocycle_sizes = std::nullopt) {
  write_text_file(path, domain_to_json(P, horocycle_sizes).dump(2) + "\n");
}

inline DomainFile read_domain_file(const std::string& path) {
  return domain_from_json(ordered_json::parse(read_text_file(path)));
}

namespace detail {

inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

// ---- run artifacts ---------------------------------------------------------

// One JSON record per exhaustion step: schedule parameters plus the measured
// residual, mesh size, graph area, and lifted total curvature.
inline ordered_json run_to_json(const ExhaustionRun& run) {
  ordered_json j;
  j["domain"] = domain_to_json(run.domain);
  j["verdict"] = to_string(run.verdict);
  if (!run.warning.empty()) j["warning"] = run.warning;
  j["steps"] = ordered_json::array();
  for (size_t i = 0; i < run.solutions.size(); ++i) {
    const GraphSolution& sol = run.solutions[i];
    ordered_json s;
    s["step"] = i;
    s["r"] = run.schedule[i].r;
    s["n"] = run.schedule[i].n;
    s["h"] = run.schedule[i].h;
    s["residual"] = sol.residual;
    s["iterations"] = sol.iterations;
    s["nodes"] = sol.mesh.nodes.size();
    s["triangles"] = sol.mesh.triangles.size();
    s["area"] = area(sol.mesh, sol.u);
    s["total_curvature"] = gauss_curvature(lift(sol)).total_curvature;
    j["steps"].push_back(std::move(s));
  }
  j["probes"] = ordered_json::array();
  for (complexd p : run.probes) j["probes"].push_back({p.real(), p.imag()});
  j["probe_diffs"] = run.probe_diffs;
  return j;
}

inline void write_run_file(const std::string& path, const ExhaustionRun& run) {
  write_text_file(path, run_to_json(run).dump(2) + "\n");
}

inline ordered_json read_run_file(const std::string& path) {
  ordered_json j = ordered_json::parse(read_text_file(path));
  if (!j.contains("steps") || !j.at("steps").is_array() ||
      j.at("steps").empty())
    throw std::invalid_argument("run artifact: missing steps");
  for (const auto& s : j.at("steps"))
    for (const char* key :
         {"step", "r", "n", "h", "residual", "area", "total_curvature"})
      if (!s.contains(key))
        throw std::invalid_argument(std::string("run artifact: step missing ") +
                                    key);
  return j;
}

// Convergence table, one row per step, full-precision fields.
inline std::string run_csv(const ordered_json& artifact) {
  std::string out = "step,r,n,h,residual,area,total_curvature\n";
  for (const auto& s : artifact.at("steps")) {
    out += std::to_string(s.at("step").get<int>());
    for (const char* key : {"r", "n", "h", "residual", "area",
                            "total_curvature"}) {
      out += ',';
      out += detail::fmt17(s.at(key).get<double>());
    }
    out += '\n';
  }
  return out;
}

// ---- surface exports -------------------------------------------------------

// Vertex positions are (x, y, t): disk coordinates plus height.
inline std::string surface_to_obj(const SurfaceMesh& S) {
  std::string out;
  out.reserve(S.xy.size() * 48 + S.triangles.size() * 24);
  for (size_t v = 0; v < S.xy.size(); ++v) {
    out += "v ";
    out += detail::fmt17(S.xy[v].real());
    out += ' ';
    out += detail::fmt17(S.xy[v].imag());
    out += ' ';
    out += detail::fmt17(S.t[v]);
    out += '\n';
  }
  for (const auto& tr : S.triangles) {
    out += "f ";
    out += std::to_string(tr[0] + 1);
    out += ' ';
    out += std::to_string(tr[1] + 1);
    out += ' ';
    out += std::to_string(tr[2] + 1);
    out += '\n';
  }
  return out;
}

struct ObjData {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<int, 3>> faces;
};

// Structural re-parse of an OBJ export: v/f/comment lines only, triangular
// faces, 1-based indices in range.
inline ObjData parse_obj(const std::string& text) {
  ObjData d;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      std::array<double, 3> p{};
      if (!(ls >> p[0] >> p[1] >> p[2]))
        throw std::invalid_argument("obj: bad vertex at line " +
                                    std::to_string(lineno));
      d.vertices.push_back(p);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      if (!(ls >> f[0] >> f[1] >> f[2]))
        throw std::invalid_argument("obj: bad face at line " +
                                    std::to_string(lineno));
      int extra;
      if (ls >> extra)
        throw std::invalid_argument("obj: non-triangular face at line " +
                                    std::to_string(lineno));
      for (int& idx : f) {
        if (idx < 1 || idx > (int)d.vertices.size())
          throw std::invalid_argument("obj: face index out of range at line " +
                                      std::to_string(lineno));
        --idx;
      }
      d.faces.push_back(f);
    } else {
      throw std::invalid_argument("obj: unexpected record '" + tag +
                                  "' at line " + std::to_string(lineno));
    }
  }
  return d;
}

// ASCII PLY with per-vertex copy id and vertical normal component.
inline std::string surface_to_ply(const SurfaceMesh& S) {
  N3Profile prof = n3_profile(S);
  std::string out = "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(S.xy.size()) + "\n";
  out +=
      "property double x\nproperty double y\nproperty double t\n"
      "property int copy_id\nproperty double n3\n";
  out += "element face " + std::to_string(S.triangles.size()) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  for (size_t v = 0; v < S.xy.size(); ++v) {
    out += detail::fmt17(S.xy[v].real());
    out += ' ';
    out += detail::fmt17(S.xy[v].imag());
    out += ' ';
    out += detail::fmt17(S.t[v]);
    out += ' ';
    out += std::to_string(S.copy_of[v]);
    out += ' ';
    out += detail::fmt17(prof.vertex_n3[v]);
    out += '\n';
  }
  for (const auto& tr : S.triangles) {
    out += "3 ";
    out += std::to_string(tr[0]);
    out += ' ';
    out += std::to_string(tr[1]);
    out += ' ';
    out += std::to_string(tr[2]);
    out += '\n';
  }
  return out;
}

// ---- diagnostic report -----------------------------------------------------

// Structured text, one record per line, every figure annotated with the mesh
// resolution it was measured at and the tolerance the toolkit holds it to.
inline std::string surface_report_text(
    const SurfaceMesh& S,
    const std::vector<std::array<double, 2>>& flux_probes = {}) {
  CurvatureReport rep = gauss_curvature(S);
  N3Profile prof = n3_profile(S);
  double harm = harmonicity_residual(S);
  const std::string at = " at h=" + detail::fmt17(S.h_target);

  double kmin = 0.0, kmax = 0.0;
  bool any = false;
  for (double k : rep.vertex_k) {
    if (k == 0.0) continue;
    if (!any || k < kmin) kmin = k;
    if (!any || k > kmax) kmax = k;
    any = true;
  }

  std::string out = "h2xr surface report\n";
  out += "mesh: vertices=" + std::to_string(S.xy.size()) +
         " triangles=" + std::to_string(S.triangles.size()) +
         " copies=" + std::to_string(S.copies) +
         " cap_n=" + detail::fmt17(S.cap_n) +
         " h_target=" + detail::fmt17(S.h_target) + "\n";
  out += "curvature: total=" + detail::fmt17(rep.total_curvature) +
         " boundary_turning=" + detail::fmt17(rep.boundary_turning) +
         " loops=" + std::to_string(rep.boundary_loops) + at + "\n";
  out += "gauss_bonnet: residual=" + detail::fmt17(rep.gb_residual) +
         " (identity tolerance 1e-9" + at + ")\n";
  out += "curvature_range: interior K in [" + detail::fmt17(kmin) + ", " +
         detail::fmt17(kmax) + "] (estimator slack 0.35" + at + ")\n";
  out += "harmonicity: rms=" + detail::fmt17(harm) + " (tolerance 1e-9" + at +
         ")\n";
  out += "n3: collar_max=" + detail::fmt17(prof.collar_max) +
         " over |z|>=" + detail::fmt17(prof.collar_radius) +
         " (flat-slice reference 1" + at + ")\n";
  for (const auto& probe : flux_probes) {
    FluxReport f = flux_vertical(S, probe[0], probe[1]);
    out += "flux r=" + detail::fmt17(probe[0]) +
           " T=" + detail::fmt17(probe[1]) +
           ": value=" + detail::fmt17(f.value) +
           " perimeter=" + detail::fmt17(f.perimeter) +
           " (|value| <= 1% of perimeter" + at + ")\n";
  }
  return out;
}

}  // namespace h2xr
