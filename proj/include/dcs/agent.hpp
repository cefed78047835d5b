#ifndef DCS_AGENT_HPP_
#define DCS_AGENT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcs/curiosity.hpp"
#include "dcs/envsuite.hpp"
#include "dcs/nn.hpp"

namespace dcs {

enum class Baseline { kNone, kCountBonus };
std::string_view to_string(Baseline b);
Baseline parse_baseline(std::string_view name);

struct TrainConfig {
  int actor_count = 16;
  int n_step = 5;
  double gamma = 0.99;
  LossCoefficients coefficients;
  long total_env_steps = 150000;
  bool use_intrinsic = true;
  bool use_compass = true;
  ResetPolicy reset_policy = ResetPolicy::kPerEpisode;
  RewardMixer mixer;
  // CountBonus replaces the binary tile reward with 1/sqrt(N).
  Baseline baseline = Baseline::kNone;
  std::uint64_t master_seed = 1;
  long checkpoint_interval = 10000;
  int tile_size = kDefaultTileSize;
  std::uint64_t layout_seed = 0;
  std::vector<int> hidden = {128, 128};
  RmsPropConfig optimizer;

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// Network shape for an environment under a config.
NetShape net_shape(const EnvSpec& spec, const TrainConfig& config);

// Appends the compass plane of the grid's current room when use_compass is
// set; otherwise returns the observation unchanged.
Observation assemble_observation(const Observation& env_obs, const CuriosityGrid& grid,
                                 int room, bool use_compass);

// One actor's environment, curiosity grid and episode bookkeeping.
struct Actor {
  Actor(const EnvSpec& spec, const TrainConfig& config, int index);

  Environment env;
  CuriosityGrid grid;
  Rng rng;
  std::uint64_t seed;
  bool use_compass;
  std::uint64_t episodes_started = 0;
  Observation obs;  // assembled

  // Current episode.
  double score = 0.0;
  long intrinsic = 0;
  std::vector<std::uint8_t> episode_tiles;
  std::vector<std::uint8_t> episode_rooms;
  int episode_tile_count = 0;
  int episode_room_count = 0;

  // Most recent completed episode.
  bool finished_one = false;
  double last_score = 0.0;
  long last_intrinsic = 0;
  int last_rooms = 0;
  double last_coverage = 0.0;
  double best_score = 0.0;

  // Binary tile rewards over the actor's whole life.
  long cumulative_intrinsic = 0;

  void begin_episode();
};

// K x n transition block, indexed [actor * n_step + t].
struct RolloutBuffer {
  int actors = 0;
  int steps = 0;
  std::vector<std::vector<double>> observations;
  std::vector<DenseNet::Cache> caches;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> raw_rewards;
  std::vector<double> intrinsic;  // reward fed to the mixer
  std::vector<double> rewards;    // mixed
  std::vector<double> values;
  std::vector<std::uint8_t> terminals;
  std::vector<double> bootstrap;  // per actor
  std::vector<double> returns;
  std::vector<double> advantages;

  RolloutBuffer() = default;
  RolloutBuffer(int actors, int steps);
  std::size_t size() const { return actions.size(); }
  std::size_t index(int actor, int t) const {
    return static_cast<std::size_t>(actor) * steps + t;
  }
};

void collect_rollout(std::vector<Actor>& actors, const DenseNet& net, const TrainConfig& config,
                     RolloutBuffer& buffer);

// R_t = r_t + gamma * R_{t+1}, cut at terminals and seeded by the bootstrap
// value; advantage_t = R_t - V_t.
void compute_returns(RolloutBuffer& buffer, double gamma);

// One RMSprop step on the batch-mean A2C loss. Throws RunAborted on a
// non-finite loss or parameter.
LossStats a2c_update(DenseNet& net, RmsProp& optimizer, const RolloutBuffer& buffer,
                     const TrainConfig& config);

struct Checkpoint {
  long step = 0;
  std::optional<double> mean_recent_score;
  std::optional<double> median_score;
  std::optional<double> intrinsic_per_episode;
  std::optional<double> rooms_touched;
  std::optional<double> tile_coverage;

  bool operator==(const Checkpoint&) const = default;
};

struct RunLog {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<Checkpoint> checkpoints;
  // Largest per-actor lifetime total of binary tile rewards.
  long max_cumulative_intrinsic = 0;
  long total_tiles = 0;
  long env_steps = 0;
  bool aborted = false;
  std::string abort_reason;

  // Best mean_recent_score over checkpoints; 0 without data.
  double best_score() const;
  const Checkpoint& final() const { return checkpoints.back(); }
};

struct TrainHooks {
  std::function<void(const RolloutBuffer&)> on_rollout;
};

struct TrainResult {
  RunLog log;
  DenseNet net;
};

// Runs collect/update rounds until total_env_steps transitions have been
// taken. RunAborted propagates.
TrainResult train(const EnvSpec& spec, const TrainConfig& config, const TrainHooks& hooks = {});

struct EpisodeOutcome {
  double score = 0.0;
  long intrinsic = 0;
};

// n_seeds full episodes with sampled actions; episode i uses seeds derived
// from (base_seed, i).
std::vector<EpisodeOutcome> evaluate(const DenseNet& net, const EnvSpec& spec, int n_seeds,
                                     const TrainConfig& config, std::uint64_t base_seed);

}  // namespace dcs

#endif  // DCS_AGENT_HPP_
