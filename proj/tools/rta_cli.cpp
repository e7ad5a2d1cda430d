// Command-line driver for the inspection experiment: `run` simulates one
// episode and writes rta_log.csv + summary.json; `bench` times repeated
// episodes. Exit codes: 0 ran and stayed safe, 1 ran but violated a
// constraint, 2 configuration error, 3 runtime failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rta/config.hpp"
#include "rta/csv.hpp"
#include "rta/scenario.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string filter;
  std::uint64_t seed = 0;
  double duration = 0.0;
  double dt = 0.0;
  int deputies = 0;

  CLI::Option* filter_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* duration_opt = nullptr;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* deputies_opt = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "Configuration file (INI)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "Output directory (default: current directory)")
      ->envname("RTA_OUT_DIR");
  o.filter_opt = sub->add_option(
      "--filter", o.filter,
      "Filter kind: none, explicit-simplex, implicit-simplex, explicit-asif, implicit-asif");
  o.seed_opt = sub->add_option("--seed", o.seed, "RNG seed");
  o.duration_opt = sub->add_option("--duration", o.duration, "Simulated duration, s");
  o.dt_opt = sub->add_option("--dt", o.dt, "Step size, s");
  o.deputies_opt = sub->add_option("--deputies", o.deputies, "Number of deputies");
}

rta::InspectionConfig build_config(const CommonOpts& o) {
  rta::InspectionConfig cfg =
      o.config_path.empty() ? rta::default_config() : rta::load_config(o.config_path);
  if (o.filter_opt->count()) cfg.filter = rta::filter_kind_from_string(o.filter);
  if (o.seed_opt->count()) cfg.seed = o.seed;
  if (o.duration_opt->count()) cfg.duration = o.duration;
  if (o.dt_opt->count()) cfg.dt = o.dt;
  if (o.deputies_opt->count()) cfg.deputies = o.deputies;
  cfg.finalize();
  rta::validate_config(cfg);
  return cfg;
}

nlohmann::json summary_json(const rta::InspectionConfig& cfg, const rta::SimulationLog& log,
                            const rta::SummaryStats& s) {
  nlohmann::json j;
  j["filter"] = rta::to_string(cfg.filter);
  j["deputies"] = cfg.deputies;
  j["duration_s"] = cfg.duration;
  j["dt_s"] = cfg.dt;
  j["seed"] = cfg.seed;
  j["rows"] = s.rows;
  j["wall_clock_seconds"] = log.wall_clock_seconds;
  nlohmann::json mins;
  for (int k = 0; k < 7; ++k)
    mins["phi_" + std::to_string(k + 1)] = s.min_phi[static_cast<std::size_t>(k)];
  j["min_phi"] = mins;  // non-finite values (phi_2 with one deputy) serialize as null
  j["min_overall"] = s.min_overall;
  j["interventions"] = s.interventions;
  j["qp_relaxations"] = s.qp_relaxations;
  j["safe"] = s.safe();
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void print_summary(const rta::InspectionConfig& cfg, const rta::SimulationLog& log,
                   const rta::SummaryStats& s) {
  std::cout << "filter=" << rta::to_string(cfg.filter) << " deputies=" << cfg.deputies
            << " duration=" << cfg.duration << "s dt=" << cfg.dt << "s seed=" << cfg.seed
            << "\n";
  std::cout << "rows=" << s.rows << " wall=" << log.wall_clock_seconds
            << "s interventions=" << s.interventions << " qp_relaxations=" << s.qp_relaxations
            << "\n";
  std::cout << "min";
  for (int k = 0; k < 7; ++k)
    std::cout << " phi_" << (k + 1) << "=" << s.min_phi[static_cast<std::size_t>(k)];
  std::cout << "\n";
  std::cout << (s.safe() ? "SAFE" : "UNSAFE") << " (min constraint value " << s.min_overall
            << ")\n";
}

int do_run(const CommonOpts& o) {
  const rta::InspectionConfig cfg = build_config(o);
  rta::SimulationLog log;
  try {
    log = rta::run_simulation(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  const rta::SummaryStats s = rta::summarize(log);

  const std::filesystem::path out_dir(o.out_dir);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "rta_log.csv");
    if (!csv) {
      std::cerr << "error: cannot open " << (out_dir / "rta_log.csv") << " for writing\n";
      return 3;
    }
    rta::write_log_csv(csv, log);
  }
  write_text(out_dir / "summary.json", summary_json(cfg, log, s).dump(2) + "\n");
  print_summary(cfg, log, s);
  return s.safe() ? 0 : 1;
}

int do_bench(const CommonOpts& o, int repeats, bool same_seed) {
  const rta::InspectionConfig base = build_config(o);
  std::vector<double> times;
  nlohmann::json runs = nlohmann::json::array();
  bool all_safe = true;

  for (int r = 0; r < repeats; ++r) {
    rta::InspectionConfig cfg = base;
    if (!same_seed) cfg.seed = base.seed + static_cast<std::uint64_t>(r);
    rta::SimulationLog log;
    try {
      log = rta::run_simulation(cfg);
    } catch (const std::exception& e) {
      std::cerr << "error (repeat " << r << "): " << e.what() << "\n";
      return 3;
    }
    const rta::SummaryStats s = rta::summarize(log);
    times.push_back(log.wall_clock_seconds);
    all_safe = all_safe && s.safe();
    nlohmann::json entry;
    entry["seed"] = cfg.seed;
    entry["wall_clock_seconds"] = log.wall_clock_seconds;
    entry["min_overall"] = s.min_overall;
    entry["interventions"] = s.interventions;
    entry["safe"] = s.safe();
    runs.push_back(entry);
    std::cout << "repeat " << r << ": seed=" << cfg.seed << " wall=" << log.wall_clock_seconds
              << "s min=" << s.min_overall << (s.safe() ? " safe" : " UNSAFE") << "\n";
  }

  double sum = 0.0;
  for (double t : times) sum += t;
  const double mean = sum / static_cast<double>(times.size());
  const double lo = *std::min_element(times.begin(), times.end());
  const double hi = *std::max_element(times.begin(), times.end());

  nlohmann::json j;
  j["filter"] = rta::to_string(base.filter);
  j["deputies"] = base.deputies;
  j["duration_s"] = base.duration;
  j["repeats"] = repeats;
  j["mean_seconds"] = mean;
  j["min_seconds"] = lo;
  j["max_seconds"] = hi;
  j["runs"] = runs;

  const std::filesystem::path out_dir(o.out_dir);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "bench_summary.json", j.dump(2) + "\n");
  std::cout << "bench: repeats=" << repeats << " mean=" << mean << "s min=" << lo << "s max="
            << hi << "s\n";
  return all_safe ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run-time-assured multi-agent inspection simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "Simulate one episode and write logs");
  add_common(run, run_opts);

  CommonOpts bench_opts;
  int repeats = 5;
  bool same_seed = false;
  CLI::App* bench = app.add_subcommand("bench", "Time repeated episodes");
  add_common(bench, bench_opts);
  bench->add_option("--repeats", repeats, "Number of timed runs")->check(CLI::PositiveNumber);
  bench->add_flag("--same-seed", same_seed, "Reuse the base seed for every repeat");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return do_run(run_opts);
    return do_bench(bench_opts, repeats, same_seed);
  } catch (const rta::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
