#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dcs/agent.hpp"
#include "dcs/common.hpp"

using namespace dcs;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.actor_count = 4;
  c.hidden = {16};
  c.total_env_steps = 2000;
  c.checkpoint_interval = 500;
  return c;
}

bool same_log(const RunLog& a, const RunLog& b) {
  return a.checkpoints == b.checkpoints && a.env_steps == b.env_steps &&
         a.max_cumulative_intrinsic == b.max_cumulative_intrinsic;
}

// Random actions under every mixer input; stands in for a trained policy.
double random_policy_mean_score(const EnvSpec& spec, int episodes, std::uint64_t seed) {
  Environment env = make_env(spec, 0);
  Rng rng(seed);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env.reset(e);
    StepResult r;
    do {
      r = env.step(static_cast<Action>(uniform_index(rng, kNumActions)));
      total += r.raw_reward;
    } while (!r.terminated);
  }
  return total / episodes;
}

}  // namespace

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.actor_count, 16);
  EXPECT_EQ(c.n_step, 5);
  EXPECT_EQ(c.gamma, 0.99);
  EXPECT_EQ(c.coefficients.value, 0.5);
  EXPECT_EQ(c.coefficients.entropy, 0.01);
  EXPECT_EQ(c.mixer.beta, 0.25);
  EXPECT_EQ(c.optimizer.learning_rate, 7e-4);
  EXPECT_EQ(c.optimizer.decay, 0.99);
  EXPECT_EQ(c.optimizer.epsilon, 1e-5);
  EXPECT_EQ(c.optimizer.max_grad_norm, 0.5);
  EXPECT_EQ(c.tile_size, 4);
  EXPECT_EQ(c.hidden, (std::vector<int>{128, 128}));
}

TEST(TrainConfig, InvalidFieldsNameTheField) {
  auto expect_field = [](TrainConfig c, const std::string& field) {
    try {
      c.validate();
      FAIL() << "no error for " << field;
    } catch (const ConfigError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(field, 0), 0u) << e.what();
    }
  };
  TrainConfig c;
  c.actor_count = 0;
  expect_field(c, "actor_count");
  c = {};
  c.gamma = 1.5;
  expect_field(c, "gamma");
  c = {};
  c.n_step = 0;
  expect_field(c, "n_step");
  c = {};
  c.mixer.beta = -0.1;
  expect_field(c, "beta");
  c = {};
  c.baseline = Baseline::kCountBonus;
  c.use_intrinsic = false;
  expect_field(c, "baseline");
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(AssembleObservation, CompassChannel) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kHallwayKeyDoor);
  Environment env = make_env(spec, 0);
  const Observation base = env.reset(0);
  const CuriosityGrid grid(1, spec.room_width, spec.room_height, 4);
  EXPECT_EQ(assemble_observation(base, grid, 0, false), base);
  const Observation with = assemble_observation(base, grid, 0, true);
  EXPECT_EQ(with.channels, base.channels + 1);
  for (int y = 0; y < with.height; ++y)
    for (int x = 0; x < with.width; ++x) EXPECT_EQ(with.at(base.channels, x, y), 0.0);
  EXPECT_EQ(net_shape(spec, TrainConfig{}).inputs, 7 * 40 * 9);
}

TEST(Rollout, SixteenByFiveHoldsEightyTransitions) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kHallwayKeyDoor);
  TrainConfig cfg;
  cfg.hidden = {8};
  std::vector<Actor> actors;
  for (int k = 0; k < cfg.actor_count; ++k) actors.emplace_back(spec, cfg, k).begin_episode();
  const DenseNet net = DenseNet::init(net_shape(spec, cfg), 1);
  RolloutBuffer buf;
  collect_rollout(actors, net, cfg, buf);
  EXPECT_EQ(buf.size(), 80u);
  EXPECT_EQ(buf.observations.size(), 80u);
  EXPECT_EQ(buf.bootstrap.size(), 16u);
}

TEST(Rollout, NoIntrinsicNoRewardMeansZeroMixed) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kHallwayKeyDoor);
  TrainConfig cfg = small_config();
  cfg.use_intrinsic = false;
  std::vector<Actor> actors;
  for (int k = 0; k < cfg.actor_count; ++k) actors.emplace_back(spec, cfg, k).begin_episode();
  const DenseNet net = DenseNet::init(net_shape(spec, cfg), 1);
  RolloutBuffer buf;
  for (int round = 0; round < 20; ++round) {
    collect_rollout(actors, net, cfg, buf);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      EXPECT_EQ(buf.intrinsic[i], 0.0);
      if (buf.raw_rewards[i] == 0.0) EXPECT_EQ(buf.rewards[i], 0.0);
    }
  }
}

TEST(Rollout, EpisodeEndResetsGridUnderPerEpisode) {
  EnvSpec spec = EnvSpec::defaults(EnvKind::kHallwayKeyDoor);
  spec.max_episode_steps = 7;
  TrainConfig cfg = small_config();
  cfg.n_step = 10;
  std::vector<Actor> actors;
  for (int k = 0; k < cfg.actor_count; ++k) actors.emplace_back(spec, cfg, k).begin_episode();
  const DenseNet net = DenseNet::init(net_shape(spec, cfg), 1);
  RolloutBuffer buf;
  collect_rollout(actors, net, cfg, buf);
  for (int k = 0; k < cfg.actor_count; ++k) {
    ASSERT_EQ(buf.terminals[buf.index(k, 6)], 1);
    // The step after the boundary starts a fresh grid, so its tile pays again.
    EXPECT_EQ(buf.intrinsic[buf.index(k, 7)], 1.0);
    // The first observation of the new episode has an empty compass.
    const auto& obs = buf.observations[buf.index(k, 7)];
    const std::size_t plane = static_cast<std::size_t>(spec.room_width) * spec.room_height;
    for (std::size_t j = obs.size() - plane; j < obs.size(); ++j) EXPECT_EQ(obs[j], 0.0);
  }
}

TEST(Returns, Examples) {
  RolloutBuffer b(1, 1);
  b.rewards = {1.0};
  b.values = {0.5};
  b.terminals = {0};
  b.bootstrap = {2.0};
  compute_returns(b, 0.99);
  EXPECT_DOUBLE_EQ(b.returns[0], 2.98);
  EXPECT_DOUBLE_EQ(b.advantages[0], 2.48);
  b.terminals = {1};
  compute_returns(b, 0.99);
  EXPECT_EQ(b.returns[0], 1.0);

  RolloutBuffer c(2, 3);
  c.rewards = {1, 2, 3, 4, 5, 6};
  c.values = {0, 0, 0, 0, 0, 0};
  c.terminals = {0, 1, 0, 0, 0, 0};
  c.bootstrap = {10, 10};
  compute_returns(c, 0.0);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(c.returns[i], c.rewards[i]);
  compute_returns(c, 0.5);
  EXPECT_DOUBLE_EQ(c.returns[2], 3 + 0.5 * 10);
  EXPECT_DOUBLE_EQ(c.returns[1], 2);
  EXPECT_DOUBLE_EQ(c.returns[0], 1 + 0.5 * 2);
  EXPECT_DOUBLE_EQ(c.returns[3], 4 + 0.5 * (5 + 0.5 * (6 + 0.5 * 10)));
}

TEST(Update, DecreasesLossForSmallStep) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kDenseCollect);
  TrainConfig cfg = small_config();
  cfg.optimizer.learning_rate = 1e-5;
  std::vector<Actor> actors;
  for (int k = 0; k < cfg.actor_count; ++k) actors.emplace_back(spec, cfg, k).begin_episode();
  DenseNet net = DenseNet::init(net_shape(spec, cfg), 3);
  RolloutBuffer buf;
  collect_rollout(actors, net, cfg, buf);
  compute_returns(buf, cfg.gamma);
  std::vector<A2cTarget> targets(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    targets[i] = {buf.actions[i], buf.advantages[i], buf.returns[i]};
  const double before =
      a2c_loss(net, std::span<const std::vector<double>>(buf.observations), targets,
               cfg.coefficients)
          .total;
  RmsProp opt(net.param_count(), cfg.optimizer);
  const LossStats stats = a2c_update(net, opt, buf, cfg);
  EXPECT_DOUBLE_EQ(stats.total, before);
  const double after =
      a2c_loss(net, std::span<const std::vector<double>>(buf.observations), targets,
               cfg.coefficients)
          .total;
  EXPECT_LT(after, before);
}

TEST(Update, OnlyEntropyDrivesWhenAdvantagesVanish) {
  DenseNet net = DenseNet::init(NetShape{3, {}, 3}, 5);
  net.params()[net.policy_head().biases] = 1.0;
  const std::vector<std::vector<double>> xs = {{1, 0, 1}, {0, 1, 0}};
  std::vector<A2cTarget> t(2);
  for (int i = 0; i < 2; ++i) {
    DenseNet::Cache c;
    net.forward(xs[i], c);
    t[i] = {i, 0.0, c.value};
  }
  std::vector<double> g(net.param_count(), 0.0);
  const LossStats s = a2c_loss(net, std::span<const std::vector<double>>(xs), t, {}, g);
  EXPECT_EQ(s.policy, 0.0);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_DOUBLE_EQ(s.total, -0.01 * s.entropy);
  for (std::size_t i = net.value_head().weights; i < net.param_count(); ++i)
    EXPECT_EQ(g[i], 0.0);
  double policy_grad = 0.0;
  for (std::size_t i = net.policy_head().weights; i < net.value_head().weights; ++i)
    policy_grad += std::abs(g[i]);
  EXPECT_GT(policy_grad, 0.0);
}

TEST(Train, ZeroStepsGivesInitialCheckpointOnly) {
  TrainConfig cfg = small_config();
  cfg.total_env_steps = 0;
  const TrainResult r = train(EnvSpec::defaults(EnvKind::kHallwayKeyDoor), cfg);
  ASSERT_EQ(r.log.checkpoints.size(), 1u);
  EXPECT_EQ(r.log.checkpoints[0].step, 0);
  EXPECT_FALSE(r.log.checkpoints[0].mean_recent_score.has_value());
}

TEST(Train, DeterministicAndStepAccounting) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kHallwayKeyDoor);
  const TrainConfig cfg = small_config();
  const TrainResult a = train(spec, cfg), b = train(spec, cfg);
  EXPECT_TRUE(same_log(a.log, b.log));
  EXPECT_TRUE(std::equal(a.net.params().begin(), a.net.params().end(), b.net.params().begin()));
  EXPECT_LE(std::abs(a.log.env_steps - cfg.total_env_steps), cfg.actor_count * cfg.n_step);
  for (std::size_t i = 1; i < a.log.checkpoints.size(); ++i)
    EXPECT_GT(a.log.checkpoints[i].step, a.log.checkpoints[i - 1].step);
  for (double p : a.net.params()) EXPECT_TRUE(std::isfinite(p));
  TrainConfig other = cfg;
  other.master_seed = 2;
  EXPECT_FALSE(same_log(train(spec, other).log, a.log));
}

// With beta = 1 the mixed stream is clip(raw) whether or not intrinsic
// rewards are computed, so the two runs coincide transition for transition.
TEST(Train, BetaOneMatchesIntrinsicDisabled) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kHallwayKeyDoor);
  TrainConfig on = small_config();
  on.mixer = RewardMixer::weighted(1.0);
  TrainConfig off = on;
  off.use_intrinsic = false;
  std::vector<double> ra, rb, raw;
  train(spec, on, {[&](const RolloutBuffer& b) {
          ra.insert(ra.end(), b.rewards.begin(), b.rewards.end());
          raw.insert(raw.end(), b.raw_rewards.begin(), b.raw_rewards.end());
        }});
  train(spec, off, {[&](const RolloutBuffer& b) {
          rb.insert(rb.end(), b.rewards.begin(), b.rewards.end());
        }});
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ASSERT_EQ(ra[i], rb[i]);
    ASSERT_EQ(ra[i], clip_reward(raw[i]));
  }
}

// Reported scores are episode sums of raw rewards, whatever the mixer does.
TEST(Train, ScoresAreRawEpisodeSums) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kDenseCollect);
  TrainConfig cfg = small_config();
  cfg.total_env_steps = 4000;
  cfg.checkpoint_interval = 100000;
  std::vector<double> running(cfg.actor_count, 0.0), last(cfg.actor_count, -1.0);
  const TrainResult r = train(spec, cfg, {[&](const RolloutBuffer& b) {
                                 for (int k = 0; k < b.actors; ++k)
                                   for (int t = 0; t < b.steps; ++t) {
                                     const std::size_t i = b.index(k, t);
                                     running[k] += b.raw_rewards[i];
                                     if (b.terminals[i]) {
                                       last[k] = running[k];
                                       running[k] = 0.0;
                                     }
                                   }
                               }});
  for (double v : last) ASSERT_GE(v, 0.0);
  const double mean = std::accumulate(last.begin(), last.end(), 0.0) / cfg.actor_count;
  EXPECT_DOUBLE_EQ(*r.log.final().mean_recent_score, mean);
}

TEST(Train, CountBonusFeedsInverseSquareRoot) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kDenseCollect);
  TrainConfig cfg = small_config();
  cfg.baseline = Baseline::kCountBonus;
  cfg.total_env_steps = 400;
  std::map<int, int> seen;
  bool checked = false;
  train(spec, cfg, {[&](const RolloutBuffer& b) {
          for (double v : b.intrinsic) {
            ASSERT_GT(v, 0.0);
            ASSERT_LE(v, 1.0);
            const double n = 1.0 / (v * v);
            ASSERT_NEAR(n, std::round(n), 1e-6);
            checked = true;
          }
        }});
  EXPECT_TRUE(checked);
}

TEST(Train, NeverResetIntrinsicBoundedByTiles) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kDenseCollect);
  TrainConfig cfg = small_config();
  cfg.reset_policy = ResetPolicy::kNever;
  cfg.total_env_steps = 6000;
  const TrainResult r = train(spec, cfg);
  EXPECT_GT(r.log.max_cumulative_intrinsic, 0);
  EXPECT_LE(r.log.max_cumulative_intrinsic, r.log.total_tiles);
  EXPECT_EQ(r.log.total_tiles, 5 * 4);
}

TEST(Evaluate, SeededAndSized) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kDenseCollect);
  TrainConfig cfg = small_config();
  const DenseNet net = DenseNet::init(net_shape(spec, cfg), 4);
  const auto a = evaluate(net, spec, 100, cfg, 9), b = evaluate(net, spec, 100, cfg, 9);
  ASSERT_EQ(a.size(), 100u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].intrinsic, b[i].intrinsic);
    EXPECT_LE(a[i].intrinsic, 20);
  }
}

TEST(Train, DenseCollectControlBeatsRandomPolicy) {
  const EnvSpec spec = EnvSpec::defaults(EnvKind::kDenseCollect);
  TrainConfig cfg;
  cfg.use_intrinsic = false;
  cfg.use_compass = false;
  cfg.mixer = RewardMixer::weighted(1.0);
  cfg.checkpoint_interval = 50000;
  const TrainResult r = train(spec, cfg);
  const double random_score = random_policy_mean_score(spec, 200, 77);
  EXPECT_GT(*r.log.final().mean_recent_score, random_score);
}
