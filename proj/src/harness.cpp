#include "dcs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace dcs {
namespace fs = std::filesystem;
namespace {

constexpr const char* kRunHeader =
    "step,mean_recent_score,median_score,intrinsic_per_episode,rooms_touched,tile_coverage";

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == line.npos ? line.npos : comma - start));
    if (comma == line.npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_cell(const std::string& s, const fs::path& path, int line) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size())
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// Index from a file name of the form run_<i>.csv, or -1.
int run_index(const fs::path& p) {
  const std::string name = p.filename().string();
  if (name.size() < 9 || name.rfind("run_", 0) != 0 || p.extension() != ".csv") return -1;
  const std::string digits = name.substr(4, name.size() - 8);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) return -1;
  return std::stoi(digits);
}

CoverageRow coverage_of(const std::string& label, const std::vector<RunLog>& runs) {
  CoverageRow row;
  row.label = label;
  std::vector<double> rooms, tiles;
  for (const RunLog& r : runs) {
    if (r.checkpoints.empty()) continue;
    const Checkpoint& c = r.final();
    if (!c.rooms_touched || !c.tile_coverage) continue;
    rooms.push_back(*c.rooms_touched);
    tiles.push_back(*c.tile_coverage);
  }
  row.runs = static_cast<int>(rooms.size());
  if (!rooms.empty()) {
    row.best_rooms = *std::max_element(rooms.begin(), rooms.end());
    row.median_rooms = median(rooms);
    row.best_coverage = *std::max_element(tiles.begin(), tiles.end());
    row.median_coverage = median(tiles);
  }
  return row;
}

void write_report(const fs::path& path, const ExperimentPlan& plan, const ExperimentResult& res,
                  const std::vector<std::string>& skipped_pairs) {
  std::ofstream os = open_out(path);
  os << "experiment " << plan.name << "\n\n";
  os << "resolved configuration\n----\n" << echo_config(plan) << "----\n\n";
  os << "final checkpoint\n";
  os << "label,completed,aborted,median_score,q1_score,q3_score,median_rooms_touched,"
        "median_tile_coverage\n";
  for (const TreatmentResult& t : res.treatments) {
    const std::vector<RunLog> done = t.completed();
    std::vector<double> scores;
    for (const RunLog& r : done)
      if (r.final().mean_recent_score) scores.push_back(*r.final().mean_recent_score);
    const CoverageRow cov = coverage_of(t.label, done);
    os << t.label << ',' << done.size() << ',' << t.runs.size() - done.size() << ',';
    if (scores.empty()) {
      os << ",,";
    } else {
      os << format_double(quantile(scores, 0.5)) << ',' << format_double(quantile(scores, 0.25))
         << ',' << format_double(quantile(scores, 0.75));
    }
    os << ',';
    if (cov.runs > 0) os << format_double(cov.median_rooms) << ',' << format_double(cov.median_coverage);
    else os << ',';
    os << '\n';
  }
  bool any_abort = false;
  for (const TreatmentResult& t : res.treatments)
    for (const RunSummary& r : t.runs)
      if (r.log.aborted) {
        if (!any_abort) os << "\naborted runs\n";
        any_abort = true;
        os << t.label << " run " << r.index << ": " << r.log.abort_reason << '\n';
      }
  if (!skipped_pairs.empty()) {
    os << "\nnot compared (checkpoint grids differ)\n";
    for (const std::string& s : skipped_pairs) os << s << '\n';
  }
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master_seed, int index) {
  return mix_seed(master_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(index));
}

std::vector<RunLog> TreatmentResult::completed() const {
  std::vector<RunLog> out;
  for (const RunSummary& r : runs)
    if (!r.log.aborted) out.push_back(r.log);
  return out;
}

void write_run_csv(std::ostream& os, const RunLog& log) {
  os << kRunHeader << '\n';
  for (const Checkpoint& c : log.checkpoints)
    os << c.step << ',' << cell(c.mean_recent_score) << ',' << cell(c.median_score) << ','
       << cell(c.intrinsic_per_episode) << ',' << cell(c.rooms_touched) << ','
       << cell(c.tile_coverage) << '\n';
}

RunLog read_run_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kRunHeader)
    throw FormatError(path.string() + ": unexpected header");
  RunLog log;
  log.label = path.parent_path().filename().string();
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 6)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    Checkpoint c;
    const std::optional<double> step = parse_cell(f[0], path, line_no);
    if (!step) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty step");
    c.step = static_cast<long>(*step);
    c.mean_recent_score = parse_cell(f[1], path, line_no);
    c.median_score = parse_cell(f[2], path, line_no);
    c.intrinsic_per_episode = parse_cell(f[3], path, line_no);
    c.rooms_touched = parse_cell(f[4], path, line_no);
    c.tile_coverage = parse_cell(f[5], path, line_no);
    log.checkpoints.push_back(c);
  }
  if (log.checkpoints.empty()) throw FormatError(path.string() + ": no checkpoints");
  log.env_steps = log.checkpoints.back().step;
  return log;
}

std::vector<RunLog> read_run_dir(const fs::path& dir) {
  std::vector<std::pair<int, fs::path>> files;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    const int i = run_index(e.path());
    if (i >= 0 && e.is_regular_file()) files.emplace_back(i, e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunLog> out;
  for (const auto& [i, p] : files) out.push_back(read_run_csv(p));
  return out;
}

void write_summary_csv(std::ostream& os, const CurveSummary& summary) {
  os << "step,runs,min,q1,median,q3,max\n";
  for (const CurvePoint& p : summary.points)
    os << p.step << ',' << p.runs << ',' << cell(p.min) << ',' << cell(p.q1) << ','
       << cell(p.median) << ',' << cell(p.q3) << ',' << cell(p.max) << '\n';
}

void write_comparison_header(std::ostream& os) { os << "step,label_a,label_b,U,p,significant\n"; }

void write_comparison_rows(std::ostream& os, const std::string& label_a, const std::string& label_b,
                           const std::vector<SignificancePoint>& bars) {
  for (const SignificancePoint& b : bars) {
    os << b.step << ',' << label_a << ',' << label_b << ',';
    if (b.test) os << format_double(b.test->u) << ',' << format_double(b.test->p);
    else os << ',';
    os << ',' << (b.significant ? 1 : 0) << '\n';
  }
}

ExperimentResult run_experiment(const ExperimentPlan& plan,
                                const std::function<void(const RunProgress&)>& progress) {
  if (plan.treatments.empty()) throw ConfigError("no treatments to run");
  ExperimentResult res;
  res.output_dir = plan.output_dir;
  fs::create_directories(plan.output_dir);
  for (const Treatment& t : plan.treatments) {
    fs::create_directories(plan.output_dir / t.label);
    TreatmentResult tr;
    tr.label = t.label;
    tr.runs.resize(plan.run_count);
    res.treatments.push_back(std::move(tr));
  }

  const int jobs = static_cast<int>(plan.treatments.size()) * plan.run_count;
  std::atomic<int> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const int job = next.fetch_add(1);
      if (job >= jobs) return;
      const int ti = job / plan.run_count, ri = job % plan.run_count;
      const Treatment& t = plan.treatments[ti];
      RunSummary& out = res.treatments[ti].runs[ri];
      out.index = ri;
      out.csv = plan.output_dir / t.label / ("run_" + std::to_string(ri) + ".csv");
      out.snapshot = plan.output_dir / t.label / ("run_" + std::to_string(ri) + ".params");
      TrainConfig cfg = t.train;
      cfg.master_seed = run_seed(plan.master_seed, ri);
      const auto start = std::chrono::steady_clock::now();
      try {
        TrainResult r = train(t.env, cfg);
        r.log.label = t.label;
        out.log = std::move(r.log);
        std::ofstream os = open_out(out.csv);
        write_run_csv(os, out.log);
        save_params(out.snapshot, r.net.params());
      } catch (const RunAborted& e) {
        out.log = RunLog{};
        out.log.label = t.label;
        out.log.seed = cfg.master_seed;
        out.log.aborted = true;
        out.log.abort_reason = e.what();
        std::error_code ec;
        fs::remove(out.csv, ec);
        fs::remove(out.snapshot, ec);
      }
      if (progress) {
        RunProgress p{t.label, ri, out.log.aborted,
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count(),
                      out.log.aborted ? std::nullopt : out.log.final().mean_recent_score};
        std::lock_guard lock(mu);
        progress(p);
      }
    }
  };
  const int n_threads = std::max(1, std::min(plan.workers, jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  for (std::size_t ti = 0; ti < res.treatments.size(); ++ti) {
    const TreatmentResult& tr = res.treatments[ti];
    const fs::path dir = plan.output_dir / tr.label;
    std::ofstream runs = open_out(dir / "runs.csv");
    runs << "run,seed,status,env_steps,final_score,best_score,max_cumulative_intrinsic,"
            "total_tiles,reason\n";
    for (const RunSummary& r : tr.runs) {
      runs << r.index << ',' << r.log.seed << ',' << (r.log.aborted ? "aborted" : "ok") << ',';
      if (r.log.aborted) {
        ++res.aborted_runs;
        std::string reason = r.log.abort_reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        runs << ",,,,," << reason << '\n';
        continue;
      }
      runs << r.log.env_steps << ',' << cell(r.log.final().mean_recent_score) << ','
           << format_double(r.log.best_score()) << ',' << r.log.max_cumulative_intrinsic << ','
           << r.log.total_tiles << ",\n";
    }
    const std::vector<RunLog> done = tr.completed();
    std::ofstream summary = open_out(dir / "summary.csv");
    write_summary_csv(summary, summarize_curves(done));
  }

  std::vector<std::string> skipped;
  std::ofstream cmp = open_out(plan.output_dir / "comparison.csv");
  write_comparison_header(cmp);
  for (std::size_t a = 0; a < res.treatments.size(); ++a)
    for (std::size_t b = a + 1; b < res.treatments.size(); ++b) {
      const std::vector<RunLog> ra = res.treatments[a].completed();
      const std::vector<RunLog> rb = res.treatments[b].completed();
      try {
        write_comparison_rows(cmp, res.treatments[a].label, res.treatments[b].label,
                              significance_bars(ra, rb, plan.alpha));
      } catch (const UsageError&) {
        skipped.push_back(res.treatments[a].label + " vs " + res.treatments[b].label);
      }
    }
  cmp.close();
  {
    std::ofstream resolved = open_out(plan.output_dir / "resolved.toml");
    resolved << echo_config(plan);
  }
  write_report(plan.output_dir / "report.txt", plan, res, skipped);
  return res;
}

EvalDistribution eval_distribution(const fs::path& snapshot, const EnvSpec& spec, int n_seeds,
                                   TrainConfig config, std::uint64_t base_seed) {
  const std::vector<double> params = load_params(snapshot);
  bool matched = false;
  for (bool compass : {true, false}) {
    config.use_compass = compass;
    if (param_count(net_shape(spec, config)) == params.size()) {
      matched = true;
      break;
    }
  }
  if (!matched)
    throw FormatError("snapshot " + snapshot.string() + ": " + std::to_string(params.size()) +
                      " parameters fit no network for this environment");
  DenseNet net(net_shape(spec, config));
  std::copy(params.begin(), params.end(), net.params().begin());
  EvalDistribution d;
  d.episodes = evaluate(net, spec, n_seeds, config, base_seed);
  for (int i = 0; i < n_seeds; ++i) d.seeds.push_back(static_cast<std::uint64_t>(i));
  return d;
}

void write_eval_csv(std::ostream& os, const EvalDistribution& dist) {
  os << "seed,score,intrinsic\n";
  std::vector<double> scores, intrinsic;
  for (std::size_t i = 0; i < dist.episodes.size(); ++i) {
    os << dist.seeds[i] << ',' << format_double(dist.episodes[i].score) << ','
       << dist.episodes[i].intrinsic << '\n';
    scores.push_back(dist.episodes[i].score);
    intrinsic.push_back(static_cast<double>(dist.episodes[i].intrinsic));
  }
  os << "stat,score,intrinsic\n";
  const std::pair<const char*, double> stats[] = {
      {"min", 0.0}, {"q1", 0.25}, {"median", 0.5}, {"q3", 0.75}, {"max", 1.0}};
  for (const auto& [name, q] : stats) {
    os << name << ',';
    if (!scores.empty())
      os << format_double(quantile(scores, q)) << ',' << format_double(quantile(intrinsic, q));
    else
      os << ',';
    os << '\n';
  }
}

std::vector<CoverageRow> coverage_report(const std::vector<TreatmentResult>& treatments) {
  std::vector<CoverageRow> rows;
  for (const TreatmentResult& t : treatments) rows.push_back(coverage_of(t.label, t.completed()));
  return rows;
}

std::vector<CoverageRow> coverage_report(const fs::path& dir) {
  std::vector<fs::path> subdirs;
  for (const fs::directory_entry& e : fs::directory_iterator(dir))
    if (e.is_directory()) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<CoverageRow> rows;
  for (const fs::path& d : subdirs) {
    std::vector<RunLog> runs = read_run_dir(d);
    if (runs.empty()) continue;
    rows.push_back(coverage_of(d.filename().string(), runs));
  }
  return rows;
}

void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows) {
  os << "label,runs,best_rooms_touched,median_rooms_touched,best_tile_coverage,"
        "median_tile_coverage\n";
  for (const CoverageRow& r : rows)
    os << r.label << ',' << r.runs << ',' << format_double(r.best_rooms) << ','
       << format_double(r.median_rooms) << ',' << format_double(r.best_coverage) << ','
       << format_double(r.median_coverage) << '\n';
}

}  // namespace dcs
