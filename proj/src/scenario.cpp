#include "wkam/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace wkam {
namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& msg) { fail(Err::ConfigError, msg); }

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      config_fail("unknown key '" + it.key() + "' in " + where);
}

double need_number(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_number())
    config_fail("missing numeric key '" + key + "' in " + where);
  return obj[key].get<double>();
}

Vec need_vec(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_array())
    config_fail("missing array key '" + key + "' in " + where);
  const auto& arr = obj[key];
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) config_fail("non-numeric entry in '" + key + "' of " + where);
    v[i] = arr[i].get<double>();
  }
  return v;
}

Domain parse_domain(const json& obj) {
  if (!obj.is_object()) config_fail("'domain' must be an object");
  std::string kind = obj.value("kind", "");
  if (kind == "disk") {
    reject_unknown(obj, "domain", {"kind", "center", "radius"});
    return Domain::disk(need_vec(obj, "domain", "center"), need_number(obj, "domain", "radius"));
  }
  if (kind == "rectangle") {
    reject_unknown(obj, "domain", {"kind", "min", "max"});
    return Domain::rectangle(need_vec(obj, "domain", "min"), need_vec(obj, "domain", "max"));
  }
  if (kind == "polygon") {
    reject_unknown(obj, "domain", {"kind", "vertices"});
    if (!obj.contains("vertices") || !obj["vertices"].is_array())
      config_fail("polygon domain needs a 'vertices' array");
    std::vector<Vec> verts;
    for (const auto& v : obj["vertices"]) {
      Vec p(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i].get<double>();
      verts.push_back(p);
    }
    return Domain::polygon(std::move(verts));
  }
  if (kind == "implicit") {
    std::string name = obj.value("name", "");
    if (name == "ellipse") {
      reject_unknown(obj, "domain", {"kind", "name", "center", "semi_x", "semi_y"});
      Vec c = need_vec(obj, "domain", "center");
      double sx = need_number(obj, "domain", "semi_x");
      double sy = need_number(obj, "domain", "semi_y");
      Vec lo(2), hi(2);
      lo << c[0] - 1.05 * sx, c[1] - 1.05 * sy;
      hi << c[0] + 1.05 * sx, c[1] + 1.05 * sy;
      return Domain::implicit(make_ellipse(c, sx, sy), lo, hi);
    }
    if (name == "smoothed-square") {
      reject_unknown(obj, "domain", {"kind", "name", "center", "half_width", "power"});
      Vec c = need_vec(obj, "domain", "center");
      double w = need_number(obj, "domain", "half_width");
      int p = static_cast<int>(need_number(obj, "domain", "power"));
      Vec lo(2), hi(2);
      lo << c[0] - 1.05 * w, c[1] - 1.05 * w;
      hi << c[0] + 1.05 * w, c[1] + 1.05 * w;
      return Domain::implicit(make_smoothed_square(c, w, p), lo, hi);
    }
    config_fail("unknown implicit catalog entry '" + name + "'");
  }
  config_fail("domain.kind must be disk|rectangle|polygon|implicit, got '" + kind + "'");
}

LagrangianSpec parse_lagrangian(const json& obj, const Domain& domain) {
  if (!obj.is_object()) config_fail("'lagrangian' must be an object");
  std::string kind = obj.value("kind", "");
  const int dim = domain.dimension();
  if (kind == "kinetic") {
    reject_unknown(obj, "lagrangian", {"kind", "kinetic", "drift", "constant"});
    Vec drift = obj.contains("drift") ? need_vec(obj, "lagrangian", "drift") : Vec(Vec::Zero(dim));
    if (drift.size() != dim) config_fail("lagrangian.drift dimension mismatch");
    return make_kinetic_lagrangian(dim, need_number(obj, "lagrangian", "kinetic"), drift,
                                   need_number(obj, "lagrangian", "constant"));
  }
  if (kind == "mechanical") {
    reject_unknown(obj, "lagrangian",
                   {"kind", "metric", "s_linear", "s_constant", "potential_constant",
                    "potential_quadratic"});
    Mat A = Mat::Identity(dim, dim);
    if (obj.contains("metric")) {
      const auto& rows = obj["metric"];
      if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
        config_fail("lagrangian.metric must be a " + std::to_string(dim) + "x" +
                    std::to_string(dim) + " matrix");
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = rows[i][j].get<double>();
    }
    Vec sl = obj.contains("s_linear") ? need_vec(obj, "lagrangian", "s_linear")
                                      : Vec(Vec::Zero(dim));
    double sc = obj.value("s_constant", 0.0);
    double vc = need_number(obj, "lagrangian", "potential_constant");
    double vq = obj.value("potential_quadratic", 0.0);

    MechanicalSpec mech;
    mech.dim = dim;
    mech.A = [A](const Vec&) { return A; };
    mech.S = [sl, sc](const Vec& x) { return sc + sl.dot(x); };
    mech.DS = [sl](const Vec&) { return sl; };
    mech.V = [vc, vq](const Vec& x) { return vc + vq * x.squaredNorm(); };
    mech.DV = [vq](const Vec& x) { return Vec(2.0 * vq * x); };
    mech.A_constant = true;
    mech.DS_constant = true;
    mech.V_constant = vq == 0.0;
    return make_mechanical_lagrangian(mech, domain);
  }
  config_fail("lagrangian.kind must be kinetic|mechanical, got '" + kind + "'");
}

BoundaryData parse_boundary(const json& obj) {
  if (!obj.is_object()) config_fail("'boundary' must be an object");
  std::string kind = obj.value("kind", "");
  BoundaryData bd;
  if (kind == "constant") {
    reject_unknown(obj, "boundary", {"kind", "value"});
    double v = need_number(obj, "boundary", "value");
    bd.g = [v](const BoundaryPoint&) { return v; };
    bd.G = [v](const Vec&) { return v; };
    bd.grad_G = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    bd.nu = 0.0;  // constant data satisfies (G1) with nu = 0
    return bd;
  }
  if (kind == "affine") {
    reject_unknown(obj, "boundary", {"kind", "gradient", "offset", "nu"});
    Vec a = need_vec(obj, "boundary", "gradient");
    double c = obj.value("offset", 0.0);
    bd.g = [a, c](const BoundaryPoint& y) { return c + a.dot(y.point); };
    bd.G = [a, c](const Vec& x) { return c + a.dot(x); };
    bd.grad_G = [a](const Vec&) { return a; };
    if (obj.contains("nu")) bd.nu = obj["nu"].get<double>();
    return bd;
  }
  config_fail("boundary.kind must be constant|affine, got '" + kind + "'");
}

void parse_tolerances(const json& obj, Scenario& sc) {
  reject_unknown(obj, "tolerances",
                 {"tol_opt", "m_bd", "refine_top", "delta_opt_scale", "arc_tol_rel",
                  "multistart", "n_nodes", "max_iter", "c_samples", "eps_sing", "eps_crit",
                  "eps_qp", "eps_H", "h_flow", "delta_bd", "t_cap", "eps_gc", "maximizer_tol",
                  "near_boundary_fraction"});
  SolverOptions& so = sc.solver_options;
  TraceOptions& to = sc.trace_options;
  if (obj.contains("tol_opt")) {
    so.action.tol_opt = obj["tol_opt"].get<double>();
    so.refine_action.tol_opt = so.action.tol_opt;
  }
  if (obj.contains("m_bd")) so.m_bd = obj["m_bd"].get<int>();
  if (obj.contains("refine_top")) so.refine_top = obj["refine_top"].get<int>();
  if (obj.contains("delta_opt_scale")) so.delta_opt_scale = obj["delta_opt_scale"].get<double>();
  if (obj.contains("arc_tol_rel")) so.arc_tol_rel = obj["arc_tol_rel"].get<double>();
  if (obj.contains("multistart")) so.action.multistart = obj["multistart"].get<int>();
  if (obj.contains("n_nodes")) {
    so.action.n_nodes = obj["n_nodes"].get<int>();
    so.refine_action.n_nodes = so.action.n_nodes;
  }
  if (obj.contains("max_iter")) so.action.max_iter = obj["max_iter"].get<int>();
  if (obj.contains("c_samples")) so.c_samples = obj["c_samples"].get<int>();
  if (obj.contains("near_boundary_fraction"))
    so.near_boundary_fraction = obj["near_boundary_fraction"].get<double>();
  if (obj.contains("eps_sing")) to.eps_sing = obj["eps_sing"].get<double>();
  if (obj.contains("eps_crit")) to.eps_crit = obj["eps_crit"].get<double>();
  if (obj.contains("eps_qp")) to.eps_qp = obj["eps_qp"].get<double>();
  if (obj.contains("eps_H")) to.eps_H = obj["eps_H"].get<double>();
  if (obj.contains("h_flow")) to.h_flow = obj["h_flow"].get<double>();
  if (obj.contains("delta_bd")) to.delta_bd = obj["delta_bd"].get<double>();
  if (obj.contains("t_cap")) to.t_cap = obj["t_cap"].get<double>();
  if (obj.contains("eps_gc")) to.eps_gc = obj["eps_gc"].get<double>();
  if (obj.contains("maximizer_tol")) to.maximizer_tol = obj["maximizer_tol"].get<double>();
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    config_fail("config parse error at line " + std::to_string(line) + ", column " +
                std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) config_fail("config root must be a JSON object");
  reject_unknown(root, "config root",
                 {"schema_version", "name", "domain", "quasiconvexity_hint", "lagrangian",
                  "boundary", "tolerances", "grid", "seeds"});
  if (!root.contains("schema_version") || !root["schema_version"].is_number_integer() ||
      root["schema_version"].get<int>() != 1)
    config_fail("config requires schema_version = 1");
  if (!root.contains("domain") || !root.contains("lagrangian") || !root.contains("boundary"))
    config_fail("config requires 'domain', 'lagrangian' and 'boundary' sections");

  Scenario sc;
  sc.name = root.value("name", "scenario");
  sc.domain = parse_domain(root["domain"]);
  if (root.contains("quasiconvexity_hint"))
    sc.domain.set_quasiconvexity_hint(root["quasiconvexity_hint"].get<double>());
  sc.lagrangian = parse_lagrangian(root["lagrangian"], sc.domain);
  sc.boundary = parse_boundary(root["boundary"]);
  if (root.contains("tolerances")) parse_tolerances(root["tolerances"], sc);
  if (root.contains("grid")) {
    reject_unknown(root["grid"], "grid", {"h"});
    sc.grid_h = need_number(root["grid"], "grid", "h");
    if (!(sc.grid_h > 0.0)) config_fail("grid.h must be positive");
  }
  if (root.contains("seeds")) {
    reject_unknown(root["seeds"], "seeds", {"master"});
    sc.master_seed = root["seeds"]["master"].get<std::uint64_t>();
  }
  sc.canonical = root.dump();
  sc.hash = fnv1a64(sc.canonical);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace wkam
