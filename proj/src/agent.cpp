#include "dcs/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dcs {
namespace {

std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Checkpoint make_checkpoint(long step, const std::vector<Actor>& actors) {
  Checkpoint c;
  c.step = step;
  for (const Actor& a : actors)
    if (!a.finished_one) return c;
  double score = 0, intrinsic = 0, rooms = 0, coverage = 0;
  std::vector<double> scores;
  for (const Actor& a : actors) {
    score += a.last_score;
    intrinsic += static_cast<double>(a.last_intrinsic);
    rooms += a.last_rooms;
    coverage += a.last_coverage;
    scores.push_back(a.last_score);
  }
  const double n = static_cast<double>(actors.size());
  c.mean_recent_score = score / n;
  c.median_score = median_of(std::move(scores));
  c.intrinsic_per_episode = intrinsic / n;
  c.rooms_touched = rooms / n;
  c.tile_coverage = coverage / n;
  return c;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

std::string_view to_string(Baseline b) {
  return b == Baseline::kCountBonus ? "CountBonus" : "None";
}

Baseline parse_baseline(std::string_view name) {
  if (name == "None") return Baseline::kNone;
  if (name == "CountBonus") return Baseline::kCountBonus;
  throw ConfigError("baseline: unknown baseline '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (actor_count < 1) throw ConfigError("actor_count: must be >= 1");
  if (n_step < 1) throw ConfigError("n_step: must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma: must be in [0, 1]");
  if (!std::isfinite(coefficients.value) || coefficients.value < 0.0)
    throw ConfigError("value_loss_coefficient: must be finite and >= 0");
  if (!std::isfinite(coefficients.entropy) || coefficients.entropy < 0.0)
    throw ConfigError("entropy_coefficient: must be finite and >= 0");
  if (total_env_steps < 0) throw ConfigError("total_env_steps: must be >= 0");
  if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval: must be >= 1");
  if (tile_size < 1) throw ConfigError("tile_size: must be >= 1");
  if (!(mixer.beta >= 0.0 && mixer.beta <= 1.0)) throw ConfigError("beta: must be in [0, 1]");
  if (baseline == Baseline::kCountBonus && !use_intrinsic)
    throw ConfigError("baseline: CountBonus requires use_intrinsic = true");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden: layer sizes must be >= 1");
  if (!(optimizer.learning_rate > 0.0) || !std::isfinite(optimizer.learning_rate))
    throw ConfigError("learning_rate: must be positive");
  if (!(optimizer.decay >= 0.0 && optimizer.decay < 1.0))
    throw ConfigError("rms_decay: must be in [0, 1)");
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("rms_epsilon: must be positive");
  if (!(optimizer.max_grad_norm > 0.0)) throw ConfigError("max_grad_norm: must be positive");
}

NetShape net_shape(const EnvSpec& spec, const TrainConfig& config) {
  const int channels = kBaseChannels + (config.use_compass ? 1 : 0);
  return {channels * spec.room_width * spec.room_height, config.hidden, kNumActions};
}

Observation assemble_observation(const Observation& env_obs, const CuriosityGrid& grid,
                                 int room, bool use_compass) {
  if (!use_compass) return env_obs;
  Observation out = env_obs;
  const std::size_t plane = static_cast<std::size_t>(env_obs.width) * env_obs.height;
  out.data.resize(env_obs.data.size() + plane);
  grid.render_compass(room, env_obs.width, env_obs.height,
                      std::span<double>(out.data).subspan(env_obs.data.size(), plane));
  ++out.channels;
  return out;
}

Actor::Actor(const EnvSpec& spec, const TrainConfig& config, int index)
    : env(spec, config.layout_seed),
      grid(spec.room_count, spec.room_width, spec.room_height, config.tile_size),
      rng(mix_seed(config.master_seed, 0x100 + static_cast<std::uint64_t>(index))),
      seed(mix_seed(config.master_seed, 0x200 + static_cast<std::uint64_t>(index))),
      use_compass(config.use_compass),
      episode_tiles(static_cast<std::size_t>(grid.total_tiles()), 0),
      episode_rooms(static_cast<std::size_t>(spec.room_count), 0) {}

void Actor::begin_episode() {
  const Observation raw = env.reset(mix_seed(seed, episodes_started++));
  score = 0.0;
  intrinsic = 0;
  std::fill(episode_tiles.begin(), episode_tiles.end(), 0);
  std::fill(episode_rooms.begin(), episode_rooms.end(), 0);
  episode_tile_count = 0;
  episode_room_count = 0;
  obs = assemble_observation(raw, grid, env.position().room, use_compass);
}

RolloutBuffer::RolloutBuffer(int k, int n) : actors(k), steps(n) {
  const std::size_t size = static_cast<std::size_t>(k) * n;
  observations.resize(size);
  caches.resize(size);
  actions.resize(size);
  log_probs.resize(size);
  raw_rewards.resize(size);
  intrinsic.resize(size);
  rewards.resize(size);
  values.resize(size);
  terminals.resize(size);
  bootstrap.resize(k);
  returns.resize(size);
  advantages.resize(size);
}

void collect_rollout(std::vector<Actor>& actors, const DenseNet& net, const TrainConfig& config,
                     RolloutBuffer& buffer) {
  const int k_count = static_cast<int>(actors.size());
  if (buffer.actors != k_count || buffer.steps != config.n_step)
    buffer = RolloutBuffer(k_count, config.n_step);
  const int tile = config.tile_size;
  for (int k = 0; k < k_count; ++k) {
    Actor& a = actors[k];
    for (int t = 0; t < config.n_step; ++t) {
      const std::size_t i = buffer.index(k, t);
      buffer.observations[i] = a.obs.data;
      DenseNet::Cache& cache = buffer.caches[i];
      net.forward(a.obs.data, cache);
      const ActionSample s = sample_action(cache.logits, a.rng);
      buffer.actions[i] = s.action;
      buffer.log_probs[i] = s.log_prob;
      buffer.values[i] = cache.value;

      StepResult r = a.env.step(static_cast<Action>(s.action));
      const AgentPosition pos = r.position;
      const int fresh = a.grid.visit(pos);
      double fed = 0.0;
      if (config.baseline == Baseline::kCountBonus) {
        fed = a.grid.visit_count_bonus(pos);
      } else if (config.use_intrinsic) {
        fed = fresh;
      }
      a.intrinsic += fresh;
      a.cumulative_intrinsic += fresh;
      const TileIndex ti = tile_of(pos, tile);
      const std::size_t flat =
          (static_cast<std::size_t>(ti.room) * a.grid.tiles_y() + ti.tile_y) * a.grid.tiles_x() +
          ti.tile_x;
      if (!a.episode_tiles[flat]) {
        a.episode_tiles[flat] = 1;
        ++a.episode_tile_count;
      }
      if (!a.episode_rooms[pos.room]) {
        a.episode_rooms[pos.room] = 1;
        ++a.episode_room_count;
      }
      a.score += r.raw_reward;

      buffer.raw_rewards[i] = r.raw_reward;
      buffer.intrinsic[i] = fed;
      buffer.rewards[i] = mix(r.raw_reward, fed, config.mixer);
      buffer.terminals[i] = r.terminated ? 1 : 0;

      if (r.terminated) {
        a.grid.maybe_reset(config.reset_policy, GridEvent::kEpisodeEnded);
        a.finished_one = true;
        a.last_score = a.score;
        a.last_intrinsic = a.intrinsic;
        a.last_rooms = a.episode_room_count;
        a.last_coverage = static_cast<double>(a.episode_tile_count) / a.grid.total_tiles();
        a.best_score = std::max(a.best_score, a.score);
        a.begin_episode();
      } else {
        if (r.life_lost) a.grid.maybe_reset(config.reset_policy, GridEvent::kLifeLost);
        a.obs = assemble_observation(r.obs, a.grid, pos.room, config.use_compass);
      }
    }
    DenseNet::Cache tail;
    net.forward(a.obs.data, tail);
    buffer.bootstrap[k] = tail.value;
  }
}

void compute_returns(RolloutBuffer& buffer, double gamma) {
  for (int k = 0; k < buffer.actors; ++k) {
    double ret = buffer.bootstrap[k];
    for (int t = buffer.steps - 1; t >= 0; --t) {
      const std::size_t i = buffer.index(k, t);
      ret = buffer.rewards[i] + (buffer.terminals[i] ? 0.0 : gamma * ret);
      buffer.returns[i] = ret;
      buffer.advantages[i] = ret - buffer.values[i];
    }
  }
}

LossStats a2c_update(DenseNet& net, RmsProp& optimizer, const RolloutBuffer& buffer,
                     const TrainConfig& config) {
  std::vector<A2cTarget> targets(buffer.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    targets[i] = {buffer.actions[i], buffer.advantages[i], buffer.returns[i]};
  std::vector<double> grad(net.param_count(), 0.0);
  const LossStats stats = a2c_loss(net, buffer.caches, targets, config.coefficients, grad);
  if (!std::isfinite(stats.total) || !all_finite(grad)) {
    std::ostringstream os;
    os << "non-finite loss (total=" << stats.total << " policy=" << stats.policy
       << " value=" << stats.value << " entropy=" << stats.entropy << ")";
    throw RunAborted(os.str());
  }
  optimizer.update(net, grad);
  if (!all_finite(net.params()))
    throw RunAborted("non-finite parameter after update " + std::to_string(optimizer.steps()));
  return stats;
}

double RunLog::best_score() const {
  double best = 0.0;
  bool any = false;
  for (const Checkpoint& c : checkpoints) {
    if (!c.mean_recent_score) continue;
    best = any ? std::max(best, *c.mean_recent_score) : *c.mean_recent_score;
    any = true;
  }
  return best;
}

TrainResult train(const EnvSpec& spec, const TrainConfig& config, const TrainHooks& hooks) {
  spec.validate();
  config.validate();
  TrainResult result{{}, DenseNet::init(net_shape(spec, config), mix_seed(config.master_seed, 7))};
  DenseNet& net = result.net;
  RunLog& log = result.log;
  log.seed = config.master_seed;

  std::vector<Actor> actors;
  actors.reserve(config.actor_count);
  for (int k = 0; k < config.actor_count; ++k) {
    actors.emplace_back(spec, config, k);
    actors.back().begin_episode();
  }
  log.total_tiles = actors.front().grid.total_tiles();

  RmsProp optimizer(net.param_count(), config.optimizer);
  RolloutBuffer buffer(config.actor_count, config.n_step);
  const long per_round = static_cast<long>(config.actor_count) * config.n_step;
  long steps = 0;
  long next_checkpoint = config.checkpoint_interval;
  log.checkpoints.push_back(make_checkpoint(0, actors));
  while (steps < config.total_env_steps) {
    collect_rollout(actors, net, config, buffer);
    compute_returns(buffer, config.gamma);
    if (hooks.on_rollout) hooks.on_rollout(buffer);
    a2c_update(net, optimizer, buffer, config);
    steps += per_round;
    if (steps >= next_checkpoint) {
      log.checkpoints.push_back(make_checkpoint(steps, actors));
      next_checkpoint = (steps / config.checkpoint_interval + 1) * config.checkpoint_interval;
    }
  }
  if (log.checkpoints.back().step != steps) log.checkpoints.push_back(make_checkpoint(steps, actors));
  log.env_steps = steps;
  for (const Actor& a : actors)
    log.max_cumulative_intrinsic = std::max(log.max_cumulative_intrinsic, a.cumulative_intrinsic);
  return result;
}

std::vector<EpisodeOutcome> evaluate(const DenseNet& net, const EnvSpec& spec, int n_seeds,
                                     const TrainConfig& config, std::uint64_t base_seed) {
  spec.validate();
  if (net.shape().inputs != net_shape(spec, config).inputs)
    throw UsageError("evaluate: network input size does not match the environment");
  Environment env(spec, config.layout_seed);
  std::vector<EpisodeOutcome> out;
  out.reserve(std::max(n_seeds, 0));
  DenseNet::Cache cache;
  for (int i = 0; i < n_seeds; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    CuriosityGrid grid(spec.room_count, spec.room_width, spec.room_height, config.tile_size);
    Rng rng(mix_seed(base_seed, 2 * u + 1));
    Observation obs = assemble_observation(env.reset(mix_seed(base_seed, 2 * u)), grid,
                                           env.position().room, config.use_compass);
    EpisodeOutcome e;
    for (;;) {
      net.forward(obs.data, cache);
      const ActionSample s = sample_action(cache.logits, rng);
      StepResult r = env.step(static_cast<Action>(s.action));
      e.score += r.raw_reward;
      e.intrinsic += grid.visit(r.position);
      if (r.terminated) break;
      if (r.life_lost) grid.maybe_reset(config.reset_policy, GridEvent::kLifeLost);
      obs = assemble_observation(r.obs, grid, r.position.room, config.use_compass);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace dcs
