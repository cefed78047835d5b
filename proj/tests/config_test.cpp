#include <gtest/gtest.h>

#include <string>

#include "dcs/common.hpp"
#include "dcs/config.hpp"

using namespace dcs;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

constexpr const char* kMinimal = R"([experiment]
name = "t"

[env]
kind = "HallwayKeyDoor"

[treatment.DeepCS]
)";

}  // namespace

TEST(Config, DefaultsResolve) {
  const ExperimentPlan p = parse_config(kMinimal);
  EXPECT_EQ(p.name, "t");
  EXPECT_EQ(p.run_count, 15);
  ASSERT_EQ(p.treatments.size(), 1u);
  const Treatment& t = p.treatments[0];
  EXPECT_EQ(t.label, "DeepCS");
  EXPECT_EQ(t.env, EnvSpec::defaults(EnvKind::kHallwayKeyDoor));
  EXPECT_EQ(t.train, TrainConfig{});
  EXPECT_EQ(t.train.mixer.beta, 0.25);
  // Omitted beta is echoed at its default.
  EXPECT_NE(echo_config(p).find("beta = 0.25\n"), std::string::npos);
}

TEST(Config, TreatmentOverrides) {
  const ExperimentPlan p = parse_config(R"(
# comment
[experiment]
run_count = 3
master_seed = 42

[env]
kind = "MultiRoomWorld"

[train]
total_env_steps = 5000
hidden = [32, 16]

[treatment.A]
room_count = 3
[treatment.B]
use_intrinsic = false  # trailing comment
beta = 1.0
kind = "DenseCollect"
reward_table.collectible = 5
)");
  EXPECT_EQ(p.run_count, 3);
  EXPECT_EQ(p.master_seed, 42u);
  ASSERT_EQ(p.treatments.size(), 2u);
  EXPECT_EQ(p.treatments[0].env.kind, EnvKind::kMultiRoomWorld);
  EXPECT_EQ(p.treatments[0].env.room_count, 3);
  EXPECT_EQ(p.treatments[0].train.hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(p.treatments[0].train.total_env_steps, 5000);
  const Treatment& b = p.treatments[1];
  EXPECT_FALSE(b.train.use_intrinsic);
  EXPECT_EQ(b.train.mixer.beta, 1.0);
  // A treatment switching kind takes that kind's defaults plus explicit keys.
  EXPECT_EQ(b.env.kind, EnvKind::kDenseCollect);
  EXPECT_EQ(b.env.oxygen_steps, 120);
  EXPECT_EQ(b.env.reward_table.collectible, 5.0);
  EXPECT_EQ(b.train.total_env_steps, 5000);
}

TEST(Config, EchoRoundTrips) {
  const ExperimentPlan p = parse_config(R"([experiment]
name = "round"
alpha = 0.01
[env]
kind = "CrossMaze"
hazard_density = 0.1
[treatment.x]
gamma = 0.95
mixer = "UntunedClip"
reset_policy = "PerLife"
[treatment.y]
baseline = "CountBonus"
learning_rate = 0.0003
)");
  const std::string echoed = echo_config(p);
  const ExperimentPlan q = parse_config(echoed);
  EXPECT_EQ(echo_config(q), echoed);
  ASSERT_EQ(q.treatments.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(q.treatments[i].env, p.treatments[i].env);
    EXPECT_EQ(q.treatments[i].train, p.treatments[i].train);
    EXPECT_EQ(q.treatments[i].label, p.treatments[i].label);
  }
  EXPECT_EQ(q.alpha, 0.01);
}

TEST(Config, EmptyTreatmentListIsError) {
  EXPECT_NE(error_of("[experiment]\nname = \"x\"\n").find("treatment"), std::string::npos);
}

TEST(Config, DuplicateLabelIsError) {
  const std::string e = error_of("[treatment.a]\n[treatment.a]\n");
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
  EXPECT_NE(e.find("duplicate"), std::string::npos) << e;
}

TEST(Config, ErrorsNameLineAndKey) {
  std::string e = error_of("[treatment.a]\nbogus = 1\n");
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
  EXPECT_NE(e.find("bogus"), std::string::npos) << e;

  e = error_of("[train]\nactor_count = \"many\"\n[treatment.a]\n");
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
  EXPECT_NE(e.find("actor_count"), std::string::npos) << e;

  e = error_of("[env]\nroom_width = 2\n[treatment.a]\n");
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
  EXPECT_NE(e.find("room_width"), std::string::npos) << e;

  e = error_of("[treatment.a]\n\nbeta = 1.5\n");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
  EXPECT_NE(e.find("beta"), std::string::npos) << e;

  e = error_of("[train]\ngamma = 0.9\ngamma = 0.8\n[treatment.a]\n");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;

  e = error_of("[experiment]\nrun_count = 0\n[treatment.a]\n");
  EXPECT_NE(e.find("run_count"), std::string::npos) << e;

  e = error_of("[mystery]\n[treatment.a]\n");
  EXPECT_NE(e.find("mystery"), std::string::npos) << e;
}

TEST(Config, FormatDoubleRoundTrips) {
  for (double v : {0.1, 0.25, 1.0 / 3.0, 7e-4, 1e-5, 123456.0, -2.5}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.25), "0.25");
}
