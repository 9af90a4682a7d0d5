#include "wkam/scenario.hpp"
#include "wkam/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace wkam;
using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int thread_count(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("WKAM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

Vec parse_point(const std::string& s) {
  Vec p(2);
  char sep;
  std::istringstream is(s);
  if (!(is >> p[0] >> sep >> p[1]) || sep != ',')
    fail(Err::ConfigError, "seed point must be 'x,y', got '" + s + "'");
  return p;
}

json scenario_meta(const Scenario& sc) {
  json m;
  m["name"] = sc.name;
  m["scenario_hash"] = sc.hash;
  m["schema_version"] = 1;
  m["grid_h"] = sc.grid_h;
  m["tolerances"]["tol_opt"] = sc.solver_options.action.tol_opt;
  m["tolerances"]["m_bd"] = sc.solver_options.m_bd;
  m["tolerances"]["delta_opt_scale"] = sc.solver_options.delta_opt_scale;
  m["tolerances"]["arc_tol_rel"] = sc.solver_options.arc_tol_rel;
  m["tolerances"]["eps_crit"] = sc.trace_options.eps_crit;
  return m;
}

void write_field_csv(const ValueField& field, std::ostream& os) {
  os << "x1,x2,u,T,ystar_arc,singular\n";
  for (const auto& fp : field.points) {
    if (fp.failed) continue;
    os << fmt(fp.x[0]) << ',' << fmt(fp.x[1]) << ',' << fmt(fp.u) << ',' << fmt(fp.T) << ','
       << fmt(fp.ystar_arc) << ',' << (fp.singular ? 1 : 0) << '\n';
  }
}

ValueField read_field_csv(const std::string& path, const Scenario& sc) {
  std::ifstream in(path);
  if (!in) fail(Err::SolverFailure, "cannot open field file '" + path + "'");
  ValueField field;
  field.lo = sc.domain.bbox_lo();
  field.h = sc.grid_h;
  field.nx = static_cast<int>(std::floor((sc.domain.bbox_hi()[0] - field.lo[0]) / field.h + 1e-9)) + 1;
  field.ny = static_cast<int>(std::floor((sc.domain.bbox_hi()[1] - field.lo[1]) / field.h + 1e-9)) + 1;
  field.index.assign(static_cast<std::size_t>(field.nx) * field.ny, -1);

  std::string line;
  if (!std::getline(in, line) || line != "x1,x2,u,T,ystar_arc,singular")
    fail(Err::SolverFailure, "corrupted field file: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FieldPoint fp;
    fp.x = Vec(2);
    int sing = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%d", &fp.x[0], &fp.x[1], &fp.u, &fp.T,
                    &fp.ystar_arc, &sing) != 6)
      fail(Err::SolverFailure, "corrupted field file: bad row '" + line + "'");
    fp.singular = sing != 0;
    int i = static_cast<int>(std::lround((fp.x[0] - field.lo[0]) / field.h));
    int j = static_cast<int>(std::lround((fp.x[1] - field.lo[1]) / field.h));
    if (i < 0 || i >= field.nx || j < 0 || j >= field.ny)
      fail(Err::SolverFailure, "corrupted field file: point off the lattice");
    field.index[static_cast<std::size_t>(j) * field.nx + i] =
        static_cast<int>(field.points.size());
    field.points.push_back(std::move(fp));
  }
  return field;
}

int compatibility_gate(const ValueSolver& solver) {
  CompatibilityReport rep = solver.check_compatibility(32);
  if (!rep.pass) {
    std::cerr << "compatibility failure:\n";
    for (const auto& e : rep.entries)
      if (e.applicable && !e.pass)
        std::cerr << "  " << e.name << " (worst " << e.worst << ", tol " << e.tol << ")\n";
    return 3;
  }
  return 0;
}

int cmd_solve(const Scenario& sc, const std::string& out, int threads) {
  SolverOptions so = sc.solver_options;
  so.threads = threads;
  ValueSolver solver(sc.lagrangian, sc.domain, sc.boundary, so);
  if (int rc = compatibility_gate(solver)) return rc;

  ValueField field = solver.solve_field(sc.grid_h);
  std::filesystem::create_directories(out);
  {
    std::ofstream os(out + "/field.csv");
    write_field_csv(field, os);
  }
  json meta = scenario_meta(sc);
  meta["c_hat"] = solver.critical();
  meta["points"] = field.points.size();
  std::size_t failed = 0;
  for (const auto& fp : field.points)
    if (fp.failed) ++failed;
  meta["failed_points"] = failed;
  std::ofstream ms(out + "/field_meta.json");
  ms << meta.dump(2) << '\n';
  return 0;
}

void write_chain_csv(const SingularChain& chain, const Domain& dom, std::ostream& os) {
  os << "k,s,x1,x2,u,p_min,d_bnd,verdict\n";
  for (std::size_t k = 0; k < chain.points.size(); ++k) {
    os << k << ',' << fmt(chain.s[k]) << ',' << fmt(chain.points[k][0]) << ','
       << fmt(chain.points[k][1]) << ',' << fmt(chain.u_values[k]) << ','
       << fmt(chain.covectors[k].norm()) << ',' << fmt(dom.boundary_distance(chain.points[k]))
       << ',' << verdict_name(chain.verdict) << '\n';
  }
}

int cmd_trace(const Scenario& sc, const std::vector<std::string>& seeds, const std::string& mode,
              const std::string& out, int threads) {
  if (seeds.empty()) fail(Err::ConfigError, "trace needs at least one --seed-point");
  SolverOptions so = sc.solver_options;
  so.threads = threads;
  ValueSolver solver(sc.lagrangian, sc.domain, sc.boundary, so);
  if (int rc = compatibility_gate(solver)) return rc;
  SingularTracer tracer(solver, sc.trace_options);
  if (mode == "mechanical" && !tracer.mechanical_ready())
    fail(Err::ConditionMViolated, tracer.mechanical_status());

  const double budget = 5.0 * sc.domain.diameter();
  json summary;
  summary["scenario"] = scenario_meta(sc);
  summary["mode"] = mode;
  std::filesystem::create_directories(out);

  for (std::size_t k = 0; k < seeds.size(); ++k) {
    Vec x0 = parse_point(seeds[k]);
    if (sc.domain.signed_distance(x0) > 0.0)
      fail(Err::ConfigError, "seed point " + seeds[k] + " lies outside the domain");
    SingularChain chain = mode == "mechanical" ? tracer.trace_mechanical(x0, budget)
                                               : tracer.trace_general(x0, budget);
    std::ofstream os(out + "/chain_" + std::to_string(k) + ".csv");
    write_chain_csv(chain, sc.domain, os);
    json jc;
    jc["seed"] = {x0[0], x0[1]};
    jc["verdict"] = verdict_name(chain.verdict);
    jc["steps"] = chain.points.size();
    jc["final"] = {chain.points.back()[0], chain.points.back()[1]};
    jc["not_cut_warning"] = chain.not_cut_warning;
    if (!chain.note.empty()) jc["note"] = chain.note;
    summary["chains"].push_back(jc);
  }
  std::ofstream ms(out + "/trace_summary.json");
  ms << summary.dump(2) << '\n';
  return 0;
}

json report_json(const VerificationReport& rep) {
  json out;
  out["scenario_hash"] = rep.scenario_hash;
  out["all_pass"] = rep.all_pass();
  for (const auto& c : rep.checks) {
    json jc;
    jc["name"] = c.name;
    jc["applicable"] = c.applicable;
    jc["pass"] = c.pass;
    jc["samples"] = c.samples;
    jc["worst"] = c.worst;
    jc["tol"] = c.tol;
    jc["note"] = c.note;
    out["checks"].push_back(jc);
  }
  return out;
}

int cmd_verify(const Scenario& sc, const std::string& field_path, const std::string& out,
               int threads, int samples) {
  SolverOptions so = sc.solver_options;
  so.threads = threads;
  ValueSolver solver(sc.lagrangian, sc.domain, sc.boundary, so);
  SingularTracer tracer(solver, sc.trace_options);

  ValueField field;
  const ValueField* fp = nullptr;
  if (!field_path.empty()) {
    field = read_field_csv(field_path, sc);
    fp = &field;
  }
  VerifyOptions vo;
  vo.samples = samples;
  vo.pairs = samples;
  vo.grid_h = sc.grid_h;
  vo.scenario_hash = sc.hash;
  VerificationReport rep = run_standard_checks(solver, tracer, fp, vo);

  std::filesystem::create_directories(out);
  std::ofstream os(out + "/verify_report.json");
  os << report_json(rep).dump(2) << '\n';
  for (const auto& c : rep.checks)
    std::cout << (c.applicable ? (c.pass ? "PASS " : "FAIL ") : "N/A  ") << c.name << " ("
              << c.note << ")\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_skeleton(const Scenario& sc, const std::string& out, int threads) {
  SolverOptions so = sc.solver_options;
  so.threads = threads;
  ValueSolver solver(sc.lagrangian, sc.domain, sc.boundary, so);
  if (int rc = compatibility_gate(solver)) return rc;

  ValueField field = solver.solve_field(sc.grid_h);
  std::filesystem::create_directories(out);
  std::vector<std::size_t> flagged;
  for (std::size_t k = 0; k < field.points.size(); ++k)
    if (field.points[k].singular && !field.points[k].failed) flagged.push_back(k);

  {
    std::ofstream os(out + "/skeleton.csv");
    os << "x1,x2,u\n";
    for (std::size_t k : flagged) {
      const auto& fp = field.points[k];
      os << fmt(fp.x[0]) << ',' << fmt(fp.x[1]) << ',' << fmt(fp.u) << '\n';
    }
  }

  // advisory 8-connectivity statistics of the flagged cloud
  std::vector<int> comp(field.points.size(), -1);
  int ncomp = 0;
  for (std::size_t start : flagged) {
    if (comp[start] >= 0) continue;
    std::vector<std::size_t> stack{start};
    comp[start] = ncomp;
    while (!stack.empty()) {
      std::size_t cur = stack.back();
      stack.pop_back();
      int ci = static_cast<int>(std::lround((field.points[cur].x[0] - field.lo[0]) / field.h));
      int cj = static_cast<int>(std::lround((field.points[cur].x[1] - field.lo[1]) / field.h));
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          int ni = ci + di, nj = cj + dj;
          if (ni < 0 || ni >= field.nx || nj < 0 || nj >= field.ny) continue;
          int idx = field.at(ni, nj);
          if (idx < 0 || comp[idx] >= 0 || !field.points[idx].singular) continue;
          comp[idx] = ncomp;
          stack.push_back(idx);
        }
    }
    ++ncomp;
  }
  json meta = scenario_meta(sc);
  meta["c_hat"] = solver.critical();
  meta["flagged"] = flagged.size();
  meta["connected_components"] = ncomp;
  std::ofstream ms(out + "/skeleton_meta.json");
  ms << meta.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-KAM Dirichlet solver: value fields, singular chains, verification"};
  app.require_subcommand(1);

  std::string config, out = "out", mode = "general", field_path;
  int threads = 0;
  int samples = 2000;
  std::vector<std::string> seed_points;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario config file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: WKAM_THREADS or cores)");
  };
  CLI::App* solve = app.add_subcommand("solve", "solve the value field on a grid");
  add_common(solve);
  CLI::App* trace = app.add_subcommand("trace", "trace singular generalized characteristics");
  add_common(trace);
  trace->add_option("--seed-point", seed_points, "chain seed 'x,y' (repeatable)");
  trace->add_option("--mode", mode, "general|mechanical")
      ->check(CLI::IsMember({"general", "mechanical"}));
  CLI::App* verify = app.add_subcommand("verify", "run the property verifier battery");
  add_common(verify);
  verify->add_option("--field", field_path, "precomputed field.csv to audit");
  verify->add_option("--samples", samples, "sample count per check");
  CLI::App* skeleton = app.add_subcommand("skeleton", "flag singular grid points");
  add_common(skeleton);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  bool mechanical_mode = mode == "mechanical";
  try {
    Scenario sc = load_scenario(config);
    int nthreads = thread_count(threads);
    if (solve->parsed()) return cmd_solve(sc, out, nthreads);
    if (trace->parsed()) return cmd_trace(sc, seed_points, mode, out, nthreads);
    if (verify->parsed()) return cmd_verify(sc, field_path, out, nthreads, samples);
    if (skeleton->parsed()) return cmd_skeleton(sc, out, nthreads);
  } catch (const wkam::Error& e) {
    std::cerr << "error [" << wkam::err_name(e.code()) << "]: " << e.what() << '\n';
    switch (e.code()) {
      case wkam::Err::ConfigError: return 2;
      case wkam::Err::SupercriticalViolated: return 3;
      case wkam::Err::ConditionMViolated: return 2;
      case wkam::Err::InvariantViolation: return mechanical_mode ? 5 : 4;
      default: return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
