#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dcs/common.hpp"
#include "dcs/curiosity.hpp"

using namespace dcs;

TEST(TileOf, FloorDivision) {
  EXPECT_EQ(tile_of({20, 35, 2}, 16), (TileIndex{2, 1, 2}));
  EXPECT_EQ(tile_of({0, 0, 5}, 16), (TileIndex{5, 0, 0}));
  EXPECT_EQ(tile_of({0, 0, 5}, 3), (TileIndex{5, 0, 0}));
  EXPECT_EQ(tile_of({15, 15, 1}, 16), (TileIndex{1, 0, 0}));
  EXPECT_EQ(tile_of({16, 15, 1}, 16), (TileIndex{1, 1, 0}));
}

TEST(CuriosityGrid, TilesRoundUp) {
  const CuriosityGrid g(6, 24, 18, 4);
  EXPECT_EQ(g.tiles_x(), 6);
  EXPECT_EQ(g.tiles_y(), 5);
  EXPECT_EQ(g.total_tiles(), 180);
}

TEST(CuriosityGrid, VisitFiresOncePerTile) {
  CuriosityGrid g(1, 8, 8, 4);
  EXPECT_EQ(g.visit({1, 1, 0}), 1);
  EXPECT_EQ(g.visit({1, 1, 0}), 0);
  EXPECT_EQ(g.visit({3, 2, 0}), 0);  // same tile
  EXPECT_EQ(g.visit({4, 2, 0}), 1);
}

TEST(CuriosityGrid, ResetMakesTilesInterestingAgain) {
  CuriosityGrid g(2, 8, 8, 4);
  EXPECT_EQ(g.visit({1, 1, 1}), 1);
  g.reset();
  EXPECT_EQ(g.coverage().fraction_visited, 0.0);
  EXPECT_EQ(g.coverage().rooms_touched, 0);
  EXPECT_EQ(g.count({1, 0, 0}), 1u);
  EXPECT_EQ(g.visit({1, 1, 1}), 1);
  EXPECT_EQ(g.count({1, 0, 0}), 2u);
}

TEST(CuriosityGrid, ResetIsIdempotent) {
  CuriosityGrid a(1, 8, 8, 4), b(1, 8, 8, 4);
  for (CuriosityGrid* g : {&a, &b}) {
    g->visit({0, 0, 0});
    g->visit({5, 5, 0});
  }
  a.reset();
  b.reset();
  b.reset();
  EXPECT_EQ(a.snapshot(), b.snapshot());
  EXPECT_EQ(a.coverage().fraction_visited, b.coverage().fraction_visited);
  EXPECT_EQ(a.count({0, 1, 1}), b.count({0, 1, 1}));
}

TEST(CuriosityGrid, ResetPolicyTable) {
  struct Case {
    ResetPolicy policy;
    GridEvent event;
    bool resets;
  };
  const Case cases[] = {
      {ResetPolicy::kPerEpisode, GridEvent::kLifeLost, false},
      {ResetPolicy::kPerEpisode, GridEvent::kEpisodeEnded, true},
      {ResetPolicy::kPerLife, GridEvent::kLifeLost, true},
      {ResetPolicy::kPerLife, GridEvent::kEpisodeEnded, true},
      {ResetPolicy::kNever, GridEvent::kLifeLost, false},
      {ResetPolicy::kNever, GridEvent::kEpisodeEnded, false},
  };
  for (const Case& c : cases) {
    CuriosityGrid g(1, 8, 8, 4);
    g.visit({0, 0, 0});
    EXPECT_EQ(g.maybe_reset(c.policy, c.event), c.resets);
    EXPECT_EQ(g.visited({0, 0, 0}), !c.resets);
  }
}

TEST(CuriosityGrid, ParsesPolicyNames) {
  for (ResetPolicy p : {ResetPolicy::kPerEpisode, ResetPolicy::kPerLife, ResetPolicy::kNever})
    EXPECT_EQ(parse_reset_policy(to_string(p)), p);
  EXPECT_THROW(parse_reset_policy("Sometimes"), ConfigError);
}

TEST(CuriosityGrid, CountBonus) {
  CuriosityGrid g(1, 8, 8, 4);
  g.visit({0, 0, 0});
  EXPECT_EQ(g.visit_count_bonus({0, 0, 0}), 1.0);
  g.visit({0, 0, 0});
  g.visit({0, 0, 0});
  g.reset();
  g.visit({0, 0, 0});
  EXPECT_EQ(g.visit_count_bonus({0, 0, 0}), 0.5);
  double prev = 2.0;
  for (int i = 0; i < 10; ++i) {
    g.visit({0, 0, 0});
    const double b = g.visit_count_bonus({0, 0, 0});
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(CuriosityGrid, CompassPlanes) {
  CuriosityGrid g(1, 8, 8, 4);
  for (double v : g.render_compass(0, 8, 8)) EXPECT_EQ(v, 0.0);
  g.visit({1, 2, 0});
  const auto plane = g.render_compass(0, 8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      EXPECT_EQ(plane[y * 8 + x], (x < 4 && y < 4) ? 1.0 : 0.0) << x << "," << y;

  CuriosityGrid whole(1, 8, 6, 8);
  whole.visit({7, 5, 0});
  for (double v : whole.render_compass(0, 8, 6)) EXPECT_EQ(v, 1.0);
}

TEST(CuriosityGrid, CompassShowsOnlyTheRequestedRoom) {
  CuriosityGrid g(2, 8, 8, 4);
  g.visit({0, 0, 1});
  for (double v : g.render_compass(0, 8, 8)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.render_compass(1, 8, 8)[0], 1.0);
}

TEST(CuriosityGrid, Coverage) {
  CuriosityGrid g(6, 8, 8, 4);
  EXPECT_EQ(g.coverage().fraction_visited, 0.0);
  EXPECT_EQ(g.coverage().rooms_touched, 0);
  for (int y = 0; y < 8; y += 4)
    for (int x = 0; x < 8; x += 4) g.visit({x, y, 3});
  EXPECT_DOUBLE_EQ(g.coverage().fraction_visited, 1.0 / 6.0);
  EXPECT_EQ(g.coverage().rooms_touched, 1);
}

TEST(CuriosityGrid, SnapshotHex) {
  // 3 x 2 tiles: visiting tiles 0 and 5 gives nibbles 0b0001 and 0b0010.
  CuriosityGrid g(2, 12, 8, 4);
  g.visit({0, 0, 1});
  g.visit({11, 7, 1});
  const auto snap = g.snapshot();
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap[0].first, 1);
  EXPECT_EQ(snap[0].second, "12");
}

TEST(Mixer, Examples) {
  EXPECT_EQ(clip_reward(100.0), 1.0);
  EXPECT_EQ(clip_reward(0.0), 0.0);
  EXPECT_EQ(clip_reward(-3.0), -1.0);
  const RewardMixer w = RewardMixer::weighted(0.25);
  EXPECT_EQ(w.beta, 0.25);
  EXPECT_EQ(RewardMixer{}.beta, 0.25);
  EXPECT_EQ(mix(100.0, 1.0, w), 1.0);
  EXPECT_EQ(mix(0.0, 1.0, w), 0.75);
  EXPECT_EQ(mix(100.0, 1.0, RewardMixer::untuned()), 1.0);
  EXPECT_EQ(mix(0.0, 0.0, w), 0.0);
  EXPECT_EQ(mix(0.0, 0.0, RewardMixer::untuned()), 0.0);
}

TEST(MixerProperty, Endpoints) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double raw = (uniform01(rng) - 0.5) * 400.0;
    const double in = static_cast<double>(uniform_index(rng, 2));
    EXPECT_EQ(mix(raw, in, RewardMixer::weighted(1.0)), clip_reward(raw));
    EXPECT_EQ(mix(raw, in, RewardMixer::weighted(0.0)), in);
    const double u = mix(raw, in, RewardMixer::untuned());
    EXPECT_GE(u, -1.0);
    EXPECT_LE(u, 1.0);
  }
}

// Random walks over a multi-room grid: uniqueness between resets, the
// visited/count link, monotone coverage and count persistence.
TEST(CuriosityProperty, RandomWalks) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const int rooms = 1 + static_cast<int>(uniform_index(rng, 4));
    const int w = 4 + static_cast<int>(uniform_index(rng, 20));
    const int h = 4 + static_cast<int>(uniform_index(rng, 20));
    const int tau = 1 + static_cast<int>(uniform_index(rng, 6));
    CuriosityGrid g(rooms, w, h, tau);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(g.total_tiles()), 0);
    long since_reset = 0, lifetime = 0;
    double prev_cov = 0.0;
    for (int step = 0; step < 3000; ++step) {
      if (uniform_index(rng, 500) == 0) {
        g.reset();
        since_reset = 0;
        prev_cov = 0.0;
      }
      const AgentPosition p{static_cast<int>(uniform_index(rng, w)),
                            static_cast<int>(uniform_index(rng, h)),
                            static_cast<int>(uniform_index(rng, rooms))};
      const int r = g.visit(p);
      since_reset += r;
      lifetime += r;
      ASSERT_LE(since_reset, g.total_tiles());
      const double cov = g.coverage().fraction_visited;
      ASSERT_GE(cov, prev_cov);
      prev_cov = cov;
      ASSERT_DOUBLE_EQ(cov, static_cast<double>(since_reset) / g.total_tiles());
      for (int room = 0; room < rooms; ++room)
        for (int ty = 0; ty < g.tiles_y(); ++ty)
          for (int tx = 0; tx < g.tiles_x(); ++tx) {
            const TileIndex t{room, tx, ty};
            const std::size_t i =
                (static_cast<std::size_t>(room) * g.tiles_y() + ty) * g.tiles_x() + tx;
            ASSERT_GE(g.count(t), counts[i]);
            counts[i] = g.count(t);
            if (g.visited(t)) ASSERT_GE(g.count(t), 1u);
          }
    }
    EXPECT_GE(lifetime, since_reset);
  }
}

TEST(CuriosityProperty, CompassFaithful) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    const int w = 4 + static_cast<int>(uniform_index(rng, 30));
    const int h = 4 + static_cast<int>(uniform_index(rng, 30));
    const int tau = 1 + static_cast<int>(uniform_index(rng, 8));
    CuriosityGrid g(1, w, h, tau);
    for (int i = 0; i < 15; ++i)
      g.visit({static_cast<int>(uniform_index(rng, w)), static_cast<int>(uniform_index(rng, h)), 0});
    const int ow = 1 + static_cast<int>(uniform_index(rng, 40));
    const int oh = 1 + static_cast<int>(uniform_index(rng, 40));
    const auto plane = g.render_compass(0, ow, oh);
    for (int py = 0; py < oh; ++py)
      for (int px = 0; px < ow; ++px) {
        const int cx = px * w / ow, cy = py * h / oh;
        const bool v = g.visited(tile_of({cx, cy, 0}, tau));
        ASSERT_EQ(plane[py * ow + px], v ? 1.0 : 0.0);
      }
  }
}
