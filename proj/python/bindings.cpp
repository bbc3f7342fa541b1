// Thin pybind11 layer. Configs, users and results cross the boundary as JSON
// text; the Python package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include <json.hpp>

#include "flexsan/check.hpp"
#include "flexsan/config.hpp"
#include "flexsan/sim.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace flexsan;

namespace {

RootConfig resolve(const std::string& doc, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(doc);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return load_config(j, overrides);
}

json metrics_columns(const std::vector<SlotMetrics>& ms) {
  json cols;
  auto col = [&](const char* name, auto field) {
    json v = json::array();
    for (const auto& m : ms) v.push_back(m.*field);
    cols[name] = std::move(v);
  };
  col("t_s", &SlotMetrics::t_s);
  col("active", &SlotMetrics::active);
  col("admitted", &SlotMetrics::admitted);
  col("adm_rate", &SlotMetrics::adm_rate);
  col("gops", &SlotMetrics::gops);
  col("gops_util", &SlotMetrics::gops_util);
  col("bw_util", &SlotMetrics::bw_util);
  col("frac_gnb", &SlotMetrics::frac_gnb);
  col("frac_du", &SlotMetrics::frac_du);
  col("lat_p50", &SlotMetrics::lat_p50);
  col("lat_p95", &SlotMetrics::lat_p95);
  col("runtime_s", &SlotMetrics::runtime_s);
  return cols;
}

std::string summary_with_metrics(RunSummary& s, bool with_metrics) {
  json j = json::parse(summary_json(s));
  if (with_metrics) j["metrics"] = metrics_columns(s.metrics);
  return j.dump();
}

std::string load(const std::string& doc, const std::vector<std::string>& overrides) {
  return to_json(resolve(doc, overrides)).dump();
}

std::string digest(const std::string& doc, const std::vector<std::string>& overrides) {
  return config_digest(resolve(doc, overrides).sim);
}

std::string run(const std::string& doc, const std::vector<std::string>& overrides, const std::string& algorithm,
                std::uint64_t seed, bool record_runtime, const std::string& out_dir) {
  const RootConfig cfg = resolve(doc, overrides);
  const Algorithm a = parse_algorithm(algorithm);
  RunSummary s;
  {
    py::gil_scoped_release unlocked;
    RunOptions opt;
    opt.record_runtime = record_runtime;
    s = run_simulation(cfg.sim, a, seed, opt);
    if (!out_dir.empty()) write_outputs(s, out_dir);
  }
  return summary_with_metrics(s, true);
}

std::string sweep_runs(const std::string& doc, const std::vector<std::string>& overrides, const std::vector<int>& counts,
                       const std::string& algorithms, const std::vector<std::uint64_t>& seeds, unsigned threads,
                       bool record_runtime) {
  const RootConfig cfg = resolve(doc, overrides);
  const auto algs = parse_algorithm_list(algorithms);
  std::vector<RunSummary> runs;
  {
    py::gil_scoped_release unlocked;
    SweepOptions opt;
    opt.threads = threads;
    opt.run.record_runtime = record_runtime;
    runs = sweep(counts, algs, cfg.sim, seeds.empty() ? cfg.seeds : seeds, opt);
  }
  json out = json::array();
  std::size_t i = 0;
  for (int c : counts) {
    for (std::size_t a = 0; a < algs.size(); ++a) {
      for (std::size_t k = 0; k < (seeds.empty() ? cfg.seeds.size() : seeds.size()); ++k, ++i) {
        json j = json::parse(summary_json(runs[i]));
        j["count"] = c;
        out.push_back(std::move(j));
      }
    }
  }
  return out.dump();
}

std::string check(const std::string& doc, const std::vector<std::string>& overrides, std::size_t instances,
                  std::size_t users, std::uint64_t seed) {
  const RootConfig cfg = resolve(doc, overrides);
  CheckReport r;
  {
    py::gil_scoped_release unlocked;
    r = run_check(cfg.sim, instances, users, seed, cfg.record_runtime);
  }
  json rows = json::array();
  for (const auto& row : r.rows) {
    const auto ratio = row.cost_ratio();
    rows.push_back({{"instance", row.index},
                    {"seed", row.seed},
                    {"users", row.users},
                    {"load_factor", row.load_factor},
                    {"branch", row.branch},
                    {"tago_admitted", row.tago_admitted},
                    {"oracle_admitted", row.oracle_admitted},
                    {"gap", row.gap()},
                    {"tago_gops", row.tago_gops},
                    {"oracle_gops", row.oracle_gops},
                    {"cost_ratio", ratio ? json(*ratio) : json(nullptr)},
                    {"tago_feasible", row.tago_feasible}});
  }
  return json{{"rows", rows},
              {"within_gap", r.within_gap()},
              {"full_pairs", r.full_pairs()},
              {"within_cost", r.within_cost()},
              {"infeasible", r.infeasible()},
              {"passed", r.passed()}}
      .dump();
}

std::string solve(const std::string& doc, const std::vector<std::string>& overrides, const std::string& users_doc,
                  const std::string& algorithm) {
  const RootConfig cfg = resolve(doc, overrides);
  const Algorithm a = parse_algorithm(algorithm);
  const json uj = json::parse(users_doc);
  if (!uj.is_array()) throw InvalidArgument("users must be a list");
  std::vector<UserDemand> users;
  for (std::size_t i = 0; i < uj.size(); ++i) {
    const auto& e = uj[i];
    UserDemand u;
    u.id = e.value("id", static_cast<UserId>(i));
    u.r_min = e.value("r_min", u.r_min);
    u.t_max = e.value("t_max", u.t_max);
    u.snr_linear = e.value("snr_linear", u.snr_linear);
    u.distance_m = e.value("distance_m", u.distance_m);
    u.validate();
    users.push_back(u);
  }
  OrchestrationTrace trace;
  const SlotSolution s = solve_slot(a, users, cfg.sim, a == Algorithm::Tago ? &trace : nullptr);
  const auto rep = check_feasibility(s, users, cfg.sim.satellite, cfg.sim.cost_model);
  json decisions = json::array();
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& d = s.decisions[i];
    json e{{"id", users[i].id}, {"admitted", d.admitted}};
    e["arch"] = d.arch ? json(to_string(*d.arch)) : json(nullptr);
    e["bandwidth_hz"] = d.bandwidth_hz;
    e["latency_s"] = std::isfinite(rep.latency_s[i]) ? json(rep.latency_s[i]) : json(nullptr);
    decisions.push_back(std::move(e));
  }
  json out{{"decisions", decisions},
           {"admitted", s.admitted_count()},
           {"feasible", rep.feasible()},
           {"total_gops", rep.total_gops},
           {"total_bandwidth_hz", rep.total_bandwidth_hz}};
  if (a == Algorithm::Tago) {
    out["branch"] = to_string(trace.branch);
    out["sigma"] = trace.sigma;
  }
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_flexsan, m) {
  m.doc() = "Native core of the flexsan package";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TraceFormatError>(m, "TraceFormatError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", base.ptr());
  py::register_exception<ThroughputUnsatisfiable>(m, "ThroughputUnsatisfiable", PyExc_ValueError);

  m.def("load", &load, py::arg("doc"), py::arg("overrides"));
  m.def("digest", &digest, py::arg("doc"), py::arg("overrides"));
  m.def("run", &run, py::arg("doc"), py::arg("overrides"), py::arg("algorithm"), py::arg("seed"),
        py::arg("record_runtime"), py::arg("out_dir"));
  m.def("sweep", &sweep_runs, py::arg("doc"), py::arg("overrides"), py::arg("counts"), py::arg("algorithms"),
        py::arg("seeds"), py::arg("threads"), py::arg("record_runtime"));
  m.def("check", &check, py::arg("doc"), py::arg("overrides"), py::arg("instances"), py::arg("users"),
        py::arg("seed"));
  m.def("solve", &solve, py::arg("doc"), py::arg("overrides"), py::arg("users"), py::arg("algorithm"));
  m.def("min_bandwidth", &min_bandwidth, py::arg("r_min"), py::arg("snr_linear"), py::arg("tolerance_hz") = 1e4,
        py::arg("max_bandwidth_hz") = 20e6);
  m.def("achievable_rate", &achievable_rate, py::arg("bandwidth_hz"), py::arg("snr_linear"));
}
