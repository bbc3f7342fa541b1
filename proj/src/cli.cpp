#include "flexsan/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "flexsan/check.hpp"
#include "flexsan/config.hpp"

namespace flexsan {

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON configuration file (defaults apply when omitted)");
  cmd->add_option("--out", args.out, "Output directory (default: $FLEXSAN_OUT, then output_dir from the config)");
  cmd->add_option("--seed", args.seed, "Replace the configured seed list with this single seed");
  cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set tago.sigma_light=0.9 (repeatable)")
      ->take_all()
      ->allow_extra_args(false);
}

RootConfig resolve(const CommonArgs& args) {
  const std::filesystem::path path(args.config);
  RootConfig cfg = load_config(args.config.empty() ? nullptr : &path, args.overrides);
  if (args.seed) cfg.seeds = {*args.seed};
  if (!args.out.empty()) {
    cfg.output_dir = args.out;
  } else if (const char* env = std::getenv("FLEXSAN_OUT"); env && *env) {
    cfg.output_dir = env;
  }
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

std::string summary_line(const RunSummary& s) {
  return std::string(to_string(s.algorithm)) + " scenario=" + s.scenario_id + " seed=" + std::to_string(s.seed) +
         " slots=" + std::to_string(s.metrics.size()) + " adm_rate=" + format_number(s.adm_rate.mean) +
         " min_adm_rate=" + format_number(s.adm_rate.min) + " gops=" + format_number(s.gops.mean) +
         " gops_util=" + format_number(s.gops_util.mean) + " bw_util=" + format_number(s.bw_util.mean) +
         " digest=" + s.config_digest;
}

int cmd_run(const CommonArgs& args, const std::string& algorithms, std::ostream& out) {
  const RootConfig cfg = resolve(args);
  const auto algs = algorithms.empty() ? std::vector<Algorithm>{cfg.algorithm} : parse_algorithm_list(algorithms);
  RunOptions opts;
  opts.record_runtime = cfg.record_runtime;
  for (Algorithm a : algs) {
    for (std::uint64_t seed : cfg.seeds) {
      RunSummary s = run_simulation(cfg.sim, a, seed, opts);
      write_outputs(s, cfg.output_dir / to_string(a) / ("seed-" + std::to_string(seed)));
      out << summary_line(s) << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::vector<int>& counts, const std::string& algorithms,
              unsigned threads, std::ostream& out) {
  const RootConfig cfg = resolve(args);
  const auto algs = parse_algorithm_list(algorithms);
  SweepOptions opts;
  opts.run.record_runtime = cfg.record_runtime;
  opts.threads = threads;
  auto runs = sweep(counts, algs, cfg.sim, cfg.seeds, opts);

  // Seed-averaged rows keyed by (count, algorithm) in sweep order.
  struct Acc {
    double adm = 0, gu = 0, bu = 0, gops = 0;
    int n = 0;
  };
  std::vector<std::pair<int, Algorithm>> keys;
  std::map<std::pair<int, int>, Acc> acc;
  std::size_t i = 0;
  for (int c : counts) {
    for (Algorithm a : algs) {
      keys.emplace_back(c, a);
      for (std::size_t k = 0; k < cfg.seeds.size(); ++k, ++i) {
        RunSummary& s = runs[i];
        write_outputs(s, cfg.output_dir / "runs" / ("n" + std::to_string(c)) / to_string(a) /
                             ("seed-" + std::to_string(s.seed)));
        auto& e = acc[{c, static_cast<int>(a)}];
        e.adm += s.adm_rate.mean;
        e.gu += s.gops_util.mean;
        e.bu += s.bw_util.mean;
        e.gops += s.gops.mean;
        ++e.n;
      }
    }
  }
  std::string csv = "count,algorithm,adm_rate,gops_util,bw_util,total_gops\n";
  for (const auto& [c, a] : keys) {
    const auto& e = acc[{c, static_cast<int>(a)}];
    const double n = e.n;
    csv += std::to_string(c) + ',' + to_string(a) + ',' + format_number(e.adm / n) + ',' + format_number(e.gu / n) +
           ',' + format_number(e.bu / n) + ',' + format_number(e.gops / n) + '\n';
    out << "n=" << c << ' ' << to_string(a) << " adm_rate=" << format_number(e.adm / n)
        << " gops_util=" << format_number(e.gu / n) << " bw_util=" << format_number(e.bu / n) << '\n';
  }
  const auto path = cfg.output_dir / "comparison.csv";
  write_text(path, csv);
  out << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_check(const CommonArgs& args, std::size_t instances, std::size_t users, std::ostream& out) {
  const RootConfig cfg = resolve(args);
  const auto report = run_check(cfg.sim, instances, users, cfg.seeds.front(), cfg.record_runtime);
  const auto path = cfg.output_dir / "check.csv";
  write_text(path, check_csv(report));

  std::map<long, std::size_t> histogram;
  for (const auto& r : report.rows) ++histogram[r.gap()];
  out << "admission gap (oracle - tago):";
  for (const auto& [gap, n] : histogram) out << ' ' << gap << ':' << n;
  out << '\n';
  std::vector<double> ratios;
  for (const auto& r : report.rows)
    if (auto c = r.cost_ratio()) ratios.push_back(*c);
  std::sort(ratios.begin(), ratios.end());
  if (!ratios.empty()) {
    out << "cost ratio (tago / oracle) over " << ratios.size() << " fully-admitted pairs: min "
        << format_number(ratios.front()) << " median " << format_number(ratios[ratios.size() / 2]) << " max "
        << format_number(ratios.back()) << '\n';
  }
  out << "gap <= " << report.thresholds.max_gap << ": " << report.within_gap() << '/' << report.rows.size()
      << (report.gap_ok() ? " ok" : " FAIL") << '\n';
  out << "cost ratio <= " << format_number(report.thresholds.max_cost_ratio) << ": " << report.within_cost() << '/'
      << report.full_pairs() << (report.cost_ok() ? " ok" : " FAIL") << '\n';
  out << "infeasible tago solutions: " << report.infeasible() << '\n';
  out << "wrote " << path.string() << '\n';
  return report.passed() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-slotted LEO access simulator with adaptive split orchestration"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  CommonArgs run_args, sweep_args, check_args;
  std::string run_algorithms;
  std::string sweep_algorithms = "tago,static-gnb,static-du";
  std::vector<int> counts{50, 100, 150, 200, 250};
  unsigned threads = 1;
  std::size_t instances = 100;
  std::size_t users = 0;

  auto* run = app.add_subcommand("run", "Simulate the configured scenario and write per-slot metrics");
  add_common(run, run_args);
  run->add_option("--algorithms", run_algorithms,
                  "Comma-separated algorithms (tago, static-gnb, static-du, greedy, oracle); default from config");

  auto* sw = app.add_subcommand("sweep", "Constant-load sweep over user counts and algorithms");
  add_common(sw, sweep_args);
  sw->add_option("--counts", counts, "Comma-separated user counts")->delimiter(',')->capture_default_str();
  sw->add_option("--algorithms", sweep_algorithms, "Comma-separated algorithms")->capture_default_str();
  sw->add_option("--threads", threads, "Concurrent runs")->capture_default_str()->check(CLI::Range(1U, 256U));

  auto* chk = app.add_subcommand("check", "Compare tago against the exact oracle on small random instances");
  add_common(chk, check_args);
  chk->add_option("--instances", instances, "Number of random instances")->capture_default_str();
  chk->add_option("--users", users, "Users per instance (0 draws 2..oracle.max_users)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (run->parsed()) return cmd_run(run_args, run_algorithms, out);
    if (sw->parsed()) return cmd_sweep(sweep_args, counts, sweep_algorithms, threads, out);
    if (chk->parsed()) return cmd_check(check_args, instances, users, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace flexsan
