#ifndef DCS_HARNESS_HPP_
#define DCS_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcs/agent.hpp"
#include "dcs/config.hpp"
#include "dcs/stats.hpp"

namespace dcs {

// Seed of run `index`; shared by every treatment of a plan.
std::uint64_t run_seed(std::uint64_t master_seed, int index);

struct RunSummary {
  int index = 0;
  RunLog log;  // checkpoints empty if aborted
  std::filesystem::path csv;
  std::filesystem::path snapshot;
};

struct TreatmentResult {
  std::string label;
  std::vector<RunSummary> runs;

  // Logs of the runs that completed.
  std::vector<RunLog> completed() const;
};

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::vector<TreatmentResult> treatments;
  int aborted_runs = 0;
};

struct RunProgress {
  std::string label;
  int index = 0;
  bool aborted = false;
  double seconds = 0.0;
  std::optional<double> final_score;
};

// Trains run_count seeded runs per treatment on up to plan.workers threads.
// Writes under plan.output_dir:
//   <label>/run_<i>.csv      checkpoints of run i
//   <label>/run_<i>.params   final parameters
//   <label>/runs.csv         per-run seed, status and totals
//   <label>/summary.csv      order statistics of mean_recent_score
//   comparison.csv           Mann-Whitney U per treatment pair and step
//   report.txt               resolved config and final-checkpoint table
// An aborted run is recorded in runs.csv and the report; the others proceed.
ExperimentResult run_experiment(const ExperimentPlan& plan,
                                const std::function<void(const RunProgress&)>& progress = {});

// Run CSV: step,mean_recent_score,median_score,intrinsic_per_episode,
// rooms_touched,tile_coverage; an empty field marks a missing value.
void write_run_csv(std::ostream& os, const RunLog& log);
RunLog read_run_csv(const std::filesystem::path& path);
// All run_<i>.csv files of a treatment directory, ordered by i.
std::vector<RunLog> read_run_dir(const std::filesystem::path& dir);

void write_summary_csv(std::ostream& os, const CurveSummary& summary);

// step,label_a,label_b,U,p,significant
void write_comparison_header(std::ostream& os);
void write_comparison_rows(std::ostream& os, const std::string& label_a,
                           const std::string& label_b,
                           const std::vector<SignificancePoint>& bars);

struct EvalDistribution {
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeOutcome> episodes;
};

// Rebuilds the network from a snapshot (hidden sizes from `config`, compass
// use inferred from the parameter count) and evaluates n_seeds episodes.
// Throws FormatError on a corrupt snapshot or one that fits no network shape.
EvalDistribution eval_distribution(const std::filesystem::path& snapshot, const EnvSpec& spec,
                                   int n_seeds, TrainConfig config, std::uint64_t base_seed = 0);

// seed,score,intrinsic rows, then a stat,score,intrinsic block with min, q1,
// median, q3 and max.
void write_eval_csv(std::ostream& os, const EvalDistribution& dist);

struct CoverageRow {
  std::string label;
  int runs = 0;
  double best_rooms = 0.0;
  double median_rooms = 0.0;
  double best_coverage = 0.0;
  double median_coverage = 0.0;
};

// Per treatment: final-checkpoint rooms_touched and tile_coverage over runs.
std::vector<CoverageRow> coverage_report(const std::vector<TreatmentResult>& treatments);
// Same from an experiment output directory (one subdirectory per treatment,
// sorted by name).
std::vector<CoverageRow> coverage_report(const std::filesystem::path& dir);
void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows);

}  // namespace dcs

#endif  // DCS_HARNESS_HPP_
