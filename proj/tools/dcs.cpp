// dcs: run experiments, compare treatments, evaluate snapshots.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dcs/harness.hpp"

namespace fs = std::filesystem;
using namespace dcs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

// Writes to --out if given, else stdout.
template <typename F>
void emit(const std::string& out, F&& write) {
  if (out.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + out);
  write(os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curiosity-grid exploration lab"};
  app.require_subcommand(1);

  int workers = 0;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  app.add_option("--workers", workers, "Parallel runs (overrides the config)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory (run) or file (other commands)");
  app.add_option("--seed-override", seed_override, "Replace the master seed");
  // Global options may also follow the subcommand.
  app.fallthrough();

  auto* run = app.add_subcommand("run", "Run every treatment of an experiment config");
  std::string config_path;
  bool quiet = false;
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_flag("--quiet", quiet, "No per-run progress on stderr");

  auto* compare = app.add_subcommand("compare", "Mann-Whitney U per checkpoint between two treatment directories");
  std::string dir_a, dir_b;
  double alpha = 0.05;
  compare->add_option("dirA", dir_a)->required()->check(CLI::ExistingDirectory);
  compare->add_option("dirB", dir_b)->required()->check(CLI::ExistingDirectory);
  compare->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

  auto* eval = app.add_subcommand("eval-dist", "Score distribution of a snapshot over seeds");
  std::string snapshot, env_name;
  int n_seeds = 100;
  std::uint64_t layout_seed = 0, eval_seed = 0;
  int tile_size = kDefaultTileSize;
  std::vector<int> hidden = {128, 128};
  std::string reset_policy = "PerEpisode";
  eval->add_option("snapshot", snapshot)->required()->check(CLI::ExistingFile);
  eval->add_option("env", env_name, "Environment kind")->required();
  eval->add_option("n", n_seeds, "Number of seeds")->required()->check(CLI::NonNegativeNumber);
  eval->add_option("--layout-seed", layout_seed);
  eval->add_option("--tile-size", tile_size)->check(CLI::PositiveNumber);
  eval->add_option("--hidden", hidden)->delimiter(',');
  eval->add_option("--reset-policy", reset_policy);

  auto* coverage = app.add_subcommand("coverage", "Rooms and tile coverage per treatment");
  std::string coverage_dir;
  coverage->add_option("dir", coverage_dir, "Experiment output directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  auto* render = app.add_subcommand("render", "Print an environment's initial state");
  std::string render_env;
  render->add_option("env", render_env, "Environment kind")->required();
  render->add_option("--layout-seed", layout_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentPlan plan = load_config(config_path);
      if (workers > 0) plan.workers = workers;
      if (!out.empty()) plan.output_dir = out;
      if (seed_override) plan.master_seed = *seed_override;
      std::function<void(const RunProgress&)> progress;
      if (!quiet)
        progress = [&](const RunProgress& p) {
          std::fprintf(stderr, "%s run %d: %s (%.1fs)\n", p.label.c_str(), p.index,
                       p.aborted ? "aborted"
                       : p.final_score ? ("final " + format_double(*p.final_score)).c_str()
                                       : "final -",
                       p.seconds);
        };
      const ExperimentResult res = run_experiment(plan, progress);
      std::cout << "wrote " << res.output_dir.string() << "/report.txt\n";
      if (res.aborted_runs > 0) {
        std::cerr << res.aborted_runs << " run(s) aborted; see report.txt\n";
        return kExitAbort;
      }
      return kExitOk;
    }
    if (*compare) {
      const std::vector<RunLog> a = read_run_dir(dir_a), b = read_run_dir(dir_b);
      if (a.empty() || b.empty()) throw FormatError("no run_<i>.csv files found");
      const std::string la = fs::path(dir_a).lexically_normal().filename().string();
      const std::string lb = fs::path(dir_b).lexically_normal().filename().string();
      const auto bars = significance_bars(a, b, alpha);
      emit(out, [&](std::ostream& os) {
        write_comparison_header(os);
        write_comparison_rows(os, la, lb, bars);
      });
      return kExitOk;
    }
    if (*eval) {
      const EnvSpec spec = EnvSpec::defaults(parse_env_kind(env_name));
      TrainConfig cfg;
      cfg.layout_seed = layout_seed;
      cfg.tile_size = tile_size;
      cfg.hidden = hidden;
      cfg.reset_policy = parse_reset_policy(reset_policy);
      const std::uint64_t base = seed_override ? *seed_override : eval_seed;
      const EvalDistribution d = eval_distribution(snapshot, spec, n_seeds, cfg, base);
      emit(out, [&](std::ostream& os) { write_eval_csv(os, d); });
      return kExitOk;
    }
    if (*coverage) {
      const auto rows = coverage_report(fs::path(coverage_dir));
      emit(out, [&](std::ostream& os) { write_coverage_csv(os, rows); });
      return kExitOk;
    }
    if (*render) {
      Environment env = make_env(EnvSpec::defaults(parse_env_kind(render_env)), layout_seed);
      env.reset(0);
      std::cout << env.render_ascii();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RunAborted& e) {
    std::cerr << "run aborted: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
