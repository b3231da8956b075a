#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>

#include "catalog.hpp"
#include "causalcert/serialize.hpp"

using namespace causalcert;
namespace cat = causalcert::catalog;

namespace {

enum Exit { kOk = 0, kValidation = 1, kParse = 2, kSolver = 3, kBracket = 4 };

struct Options {
  cat::ScenarioConfig cfg;
  std::optional<double> tol;
  std::optional<double> lo, hi;
  bool json = false;
  std::string out = ".";
  std::string witness_file;
  int jobs = 1;
};

bool solved(SolveStatus s) { return s == SolveStatus::Optimal || s == SolveStatus::Inaccurate; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string out_path(const Options& o, const std::string& file) {
  std::filesystem::create_directories(o.out);
  return (std::filesystem::path(o.out) / file).string();
}

int cmd_validate(const Options& o) {
  ValidityReport rep = cat::validate(o.cfg);
  if (o.json) {
    Json items = Json::array();
    for (const auto& i : rep.items) items.push_back({{"name", i.name}, {"residual", i.residual}, {"ok", i.ok}});
    std::cout << Json{{"scenario", o.cfg.name}, {"ok", rep.ok()}, {"checks", items}}.dump(2) << "\n";
  } else {
    for (const auto& i : rep.items)
      std::cout << (i.ok ? "ok    " : "FAIL  ") << i.name << "  residual " << fmt("%.3e", i.residual) << "\n";
    std::cout << (rep.ok() ? "valid" : "invalid: " + rep.summary()) << "\n";
  }
  return rep.ok() ? kOk : kValidation;
}

int cmd_certify(const Options& o) {
  const double r = o.cfg.r.value_or(0.0);
  CertificationResult res = cat::certify_at(o.cfg, r);
  std::string wpath;
  if (res.witness) {
    wpath = out_path(o, o.cfg.name + "-witness.json");
    write_json_file(wpath, to_json(*res.witness));
  }
  if (o.json) {
    Json j = to_json(res);
    j["scenario"] = o.cfg.name;
    j["r"] = r;
    j["witness_file"] = wpath.empty() ? Json(nullptr) : Json(wpath);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "scenario    " << o.cfg.name << "  (r = " << r << ")\n"
              << "cone        " << to_string(res.cone) << "\n"
              << "status      " << to_string(res.status) << "\n"
              << "robustness  " << fmt("%.6f", res.robustness) << "\n"
              << "verdict     " << to_string(res.verdict) << "\n"
              << "duality gap " << fmt("%.2e", res.duality_gap) << "\n"
              << "time        " << fmt("%.1f ms", res.solve_time_ms) << "\n";
    if (!wpath.empty()) std::cout << "witness     " << wpath << "\n";
  }
  if (!solved(res.status)) {
    std::cerr << "solver failed: " << to_string(res.status) << "\n";
    return kSolver;
  }
  return kOk;
}

std::pair<double, double> bracket(const Options& o) {
  double lo = 0.0, hi = 1.0;
  if (o.cfg.name != "custom") {
    const cat::ScenarioInfo& i = cat::info(o.cfg.name);
    lo = i.r_lo;
    hi = i.r_hi;
  }
  return {o.lo.value_or(lo), o.hi.value_or(hi)};
}

Json probes_json(const ScanResult& s) {
  Json a = Json::array();
  for (const auto& p : s.probes)
    a.push_back({{"r", p.r}, {"robustness", p.robustness}, {"verdict", to_string(p.verdict)}, {"status", to_string(p.status)}});
  return a;
}

int cmd_scan(const Options& o) {
  auto [lo, hi] = bracket(o);
  ScanResult s = cat::scan(o.cfg, lo, hi);
  const std::string log = out_path(o, o.cfg.name + "-scan.json");
  Json j = {{"scenario", o.cfg.name}, {"threshold", s.threshold}, {"lo", s.lo}, {"hi", s.hi}, {"probes", probes_json(s)}};
  write_json_file(log, j);
  if (o.json) {
    j["probe_log"] = log;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "scenario  " << o.cfg.name << "\n"
              << "threshold " << fmt("%.3f", s.threshold) << "  (bracket [" << fmt("%.4f", s.lo) << ", "
              << fmt("%.4f", s.hi) << "], " << s.probes.size() << " probes)\n"
              << "probe log " << log << "\n";
  }
  return kOk;
}

struct Row {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string error;
};

int cmd_reproduce(const Options& o) {
  const auto& table = cat::named_scenarios();
  auto run = [&](const cat::ScenarioInfo& info) {
    Row row{info.name, 0.0, info.reference, info.tolerance, false, ""};
    try {
      cat::ScenarioConfig c = o.cfg;
      c.name = info.name;
      ScanResult s = cat::scan(c, info.r_lo, info.r_hi);
      row.value = s.threshold;
      row.pass = std::abs(s.threshold - info.reference) <= info.tolerance;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };
  std::vector<Row> rows;
  if (o.jobs > 1) {
    std::vector<std::future<Row>> fs;
    for (const auto& info : table) fs.push_back(std::async(std::launch::async, run, std::cref(info)));
    for (auto& f : fs) rows.push_back(f.get());
  } else {
    for (const auto& info : table) rows.push_back(run(info));
  }
  const cat::WitnessRows w = cat::qs_witness_rows();
  const double qs = 2.0 - 2.0 * std::sqrt(2.0 / 3.0);
  rows.push_back({"S_QS * E_QS", w.on_object, -qs, 1e-8, std::abs(w.on_object + qs) <= 1e-8, ""});
  rows.push_back({"S_QS * E_noise", w.on_noise, 1.0, 1e-8, std::abs(w.on_noise - 1.0) <= 1e-8, ""});

  bool all = true;
  for (const auto& r : rows) all = all && r.pass;
  if (o.json) {
    Json a = Json::array();
    for (const auto& r : rows)
      a.push_back({{"name", r.name},
                   {"value", r.error.empty() ? Json(r.value) : Json(nullptr)},
                   {"reference", r.reference},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass},
                   {"error", r.error.empty() ? Json(nullptr) : Json(r.error)}});
    std::cout << Json{{"rows", a}, {"all_pass", all}}.dump(2) << "\n";
  } else {
    std::printf("%-16s %12s %12s %10s  %s\n", "row", "computed", "reference", "tolerance", "result");
    for (const auto& r : rows) {
      if (!r.error.empty())
        std::printf("%-16s %12s %12.5f %10.0e  FAIL (%s)\n", r.name.c_str(), "-", r.reference, r.tolerance,
                    r.error.c_str());
      else
        std::printf("%-16s %12.5f %12.5f %10.0e  %s\n", r.name.c_str(), r.value, r.reference, r.tolerance,
                    r.pass ? "pass" : "FAIL");
    }
    std::printf("%s\n", all ? "all rows pass" : "some rows fail");
  }
  return all ? kOk : kValidation;
}

int cmd_witness_verify(const Options& o) {
  WitnessFamily w = o.witness_file.empty() ? qs_witness() : witness_from_json(read_json_file(o.witness_file));
  SolverOptions so = o.cfg.certify.solver;
  WitnessReport rep = check_witness(w, so);
  std::optional<double> on_object, on_noise;
  const cat::Family f = cat::family_at(o.cfg, o.cfg.r.value_or(0.0));
  if (f.cone == w.cone.variant && f.object.size() == w.S.size()) {
    on_object = apply_witness(w, f.object);
    on_noise = apply_witness(w, f.noise);
  }
  if (o.json) {
    Json j = to_json(rep);
    j["cone"] = to_string(w.cone.variant);
    j["on_object"] = on_object ? Json(*on_object) : Json(nullptr);
    j["on_noise"] = on_noise ? Json(*on_noise) : Json(nullptr);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "witness on cone " << to_string(w.cone.variant) << "\n";
    for (const auto& c : rep.orders)
      std::cout << (c.ok ? "ok    " : "FAIL  ") << c.order << "  margin " << fmt("%.3e", c.margin) << "  min eigenvalue "
                << fmt("%.3e", c.min_eigenvalue) << "  linear residual " << fmt("%.3e", c.linear_residual) << "\n";
    if (on_object) std::cout << "S * object  " << fmt("%.8f", *on_object) << "  (" << o.cfg.name << ")\n";
    if (on_noise) std::cout << "S * noise   " << fmt("%.8f", *on_noise) << "\n";
    std::cout << (rep.ok() ? "valid witness" : "not a witness") << "\n";
  }
  return rep.ok() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certification of causal nonseparability from device-independent and semi-device-independent data"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  std::string scenario;
  app.add_option("--scenario", scenario, "qs-sdiqi | qs-ttu | qs-tuu | qs-dd | feix-sdiqi | feix-dd | custom");
  app.add_option("--process", o.cfg.process_file, "process JSON (implies --scenario custom)");
  app.add_option("--instruments", o.cfg.instruments_file, "instrument JSON with alice, bob and optionally fiona");
  app.add_option("--r", o.cfg.r, "noise weight");
  app.add_option("--q", o.cfg.q, "Feix mixing weight");
  app.add_option("--epsilon", o.cfg.epsilon, "Feix perturbation");
  app.add_option("--xi", o.cfg.xi, "Feix input-state parameter");
  app.add_option("--cone", o.cfg.cone, "cone variant (e.g. DPOVM_TwoPlusF, MDCI_Element, Process_Bipartite)");
  app.add_option("--tol", o.tol, "solver feasibility tolerance");
  app.add_flag("--json", o.json, "JSON output");
  app.add_option("--out", o.out, "output directory for witness files and probe logs");

  auto* validate = app.add_subcommand("validate", "check process, instruments and induced objects");
  auto* certify = app.add_subcommand("certify", "robustness, verdict and witness");
  auto* scan = app.add_subcommand("scan", "bisection for the noise threshold");
  scan->add_option("--lo", o.lo, "lower end of the bracket");
  scan->add_option("--hi", o.hi, "upper end of the bracket");
  auto* reproduce = app.add_subcommand("reproduce", "all catalogued thresholds and the fixed-witness values");
  reproduce->add_option("--jobs", o.jobs, "parallel scans")->check(CLI::PositiveNumber);
  auto* wverify = app.add_subcommand("witness-verify", "dual-cone decomposition of a witness (default: hand-coded QS witness)");
  wverify->add_option("witness", o.witness_file, "witness JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    if (const char* env = std::getenv("CAUSALCERT_SOLVER_TOL")) {
      char* end = nullptr;
      const double t = std::strtod(env, &end);
      if (end == env || *end != '\0' || !(t > 0.0)) throw ParseError(std::string("CAUSALCERT_SOLVER_TOL: bad value '") + env + "'");
      o.cfg.certify.solver.tol = t;
    }
    if (o.tol) {
      if (!(*o.tol > 0.0)) throw ParseError("--tol must be positive");
      o.cfg.certify.solver.tol = *o.tol;
    }
    o.cfg.name = !scenario.empty() ? scenario : (!o.cfg.process_file.empty() ? "custom" : "qs-sdiqi");
    if (o.cfg.name != "custom") cat::info(o.cfg.name);
    if (o.cfg.cone) {
      try {
        cone_from_string(*o.cfg.cone);
      } catch (const InvalidParam& e) {
        throw ParseError(e.what());
      }
    }

    if (*validate) return cmd_validate(o);
    if (*certify) return cmd_certify(o);
    if (*scan) return cmd_scan(o);
    if (*reproduce) return cmd_reproduce(o);
    if (*wverify) return cmd_witness_verify(o);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const SolverError& e) {
    std::cerr << "solver error (" << e.status() << "): " << e.what() << "\n";
    return kSolver;
  } catch (const InvalidBracket& e) {
    std::cerr << "bad bracket: " << e.what() << "\n";
    return kBracket;
  } catch (const ValidationFailed& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
