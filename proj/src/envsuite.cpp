#include "dcs/envsuite.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dcs/common.hpp"

namespace dcs {
namespace {

constexpr std::array<std::pair<EnvKind, std::string_view>, 4> kKindNames = {{
    {EnvKind::kMultiRoomWorld, "MultiRoomWorld"},
    {EnvKind::kHallwayKeyDoor, "HallwayKeyDoor"},
    {EnvKind::kCrossMaze, "CrossMaze"},
    {EnvKind::kDenseCollect, "DenseCollect"},
}};

// Item intensities on the item channel.
double item_intensity(ItemKind kind) {
  switch (kind) {
    case ItemKind::kKey: return 1.0;
    case ItemKind::kArmToken: return 0.8;
    case ItemKind::kTreasure: return 0.6;
    case ItemKind::kVault: return 0.4;
    case ItemKind::kCollectible: return 0.5;
  }
  return 1.0;
}

class LayoutBuilder {
 public:
  LayoutBuilder(int width, int height, int rooms) {
    layout_.width = width;
    layout_.height = height;
    layout_.room_count = rooms;
    layout_.walls.assign(rooms, std::vector<std::uint8_t>(
                                    static_cast<std::size_t>(width) * height, 0));
    layout_.exits.resize(rooms);
    for (int r = 0; r < rooms; ++r) box(r);
  }

  void box(int room) {
    const int w = layout_.width, h = layout_.height;
    for (int x = 0; x < w; ++x) {
      set_wall(room, x, 0, true);
      set_wall(room, x, h - 1, true);
    }
    for (int y = 0; y < h; ++y) {
      set_wall(room, 0, y, true);
      set_wall(room, w - 1, y, true);
    }
  }

  void set_wall(int room, int x, int y, bool wall) {
    layout_.walls[room][static_cast<std::size_t>(y) * layout_.width + x] = wall;
  }

  void fill_walls(int room) {
    std::fill(layout_.walls[room].begin(), layout_.walls[room].end(), 1);
  }

  // Opens border cell (x, y) of `room` as a passage into (to_room, to_x, to_y).
  void passage(int room, int x, int y, int to_room, int to_x, int to_y) {
    set_wall(room, x, y, false);
    int dx = 0, dy = 0;
    if (x == 0) dx = -1;
    else if (x == layout_.width - 1) dx = 1;
    else if (y == 0) dy = -1;
    else dy = 1;
    layout_.exits[room].push_back({x, y, dx, dy, to_room, to_x, to_y});
  }

  void link(int room_a, int ax, int ay, int room_b, int bx, int by) {
    passage(room_a, ax, ay, room_b, bx, by);
    passage(room_b, bx, by, room_a, ax, ay);
  }

  void item(ItemKind kind, int room, int x, int y) {
    layout_.items.push_back({kind, room, x, y});
  }

  void door(int room, int x, int y, bool ends_episode) {
    set_wall(room, x, y, false);
    layout_.doors.push_back({room, x, y, ends_episode});
  }

  void hazard(int room, std::vector<std::pair<int, int>> path, int phase) {
    layout_.hazards.push_back({room, std::move(path), phase});
  }

  Layout& get() { return layout_; }

 private:
  Layout layout_;
};

int hazard_count(double density, int span) {
  return static_cast<int>(std::lround(density * span));
}

// Spreads n column positions over [lo, hi], jittered by +-1, skipping the
// closed interval [avoid_lo, avoid_hi].
std::vector<int> spread_columns(int n, int lo, int hi, int avoid_lo, int avoid_hi,
                                Rng& rng) {
  std::vector<int> out;
  std::set<int> used;
  for (int i = 0; i < n; ++i) {
    const double frac = (i + 0.5) / n;
    int x = lo + static_cast<int>(std::lround(frac * (hi - lo)));
    x += static_cast<int>(uniform_index(rng, 3)) - 1;
    x = std::clamp(x, lo, hi);
    if (x >= avoid_lo && x <= avoid_hi) {
      x = (x - avoid_lo < avoid_hi - x) ? avoid_lo - 1 : avoid_hi + 1;
      x = std::clamp(x, lo, hi);
    }
    while (used.count(x) && x < hi) ++x;
    if (used.count(x)) continue;
    used.insert(x);
    out.push_back(x);
  }
  return out;
}

std::vector<std::pair<int, int>> vertical_path(int x, int y0, int y1) {
  std::vector<std::pair<int, int>> p;
  for (int y = y0; y <= y1; ++y) p.emplace_back(x, y);
  return p;
}

std::vector<std::pair<int, int>> horizontal_path(int y, int x0, int x1) {
  std::vector<std::pair<int, int>> p;
  for (int x = x0; x <= x1; ++x) p.emplace_back(x, y);
  return p;
}

int patrol_period(std::size_t len) {
  return len > 1 ? static_cast<int>(2 * (len - 1)) : 1;
}

Layout build_hallway(const EnvSpec& spec, Rng& rng) {
  const int w = spec.room_width, h = spec.room_height;
  LayoutBuilder b(w, h, 1);
  const int mid = h / 2;
  // One-cell corridor along the middle row from the spawn at its west end to
  // the door closing its east end, with the key on the last corridor cell.
  // Hazards patrol dead-end shafts below the corridor; the corridor itself is safe.
  const int west = std::min(3, w / 2 - 1), east = std::max(w - 4, w / 2 + 1);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x)
      if (y != mid || x < west || x > east) b.set_wall(0, x, y, true);
  Layout& l = b.get();
  l.spawn = {west, mid, 0};
  b.item(ItemKind::kKey, 0, east, mid);
  b.door(0, east + 1, mid, /*ends_episode=*/true);
  const int n = hazard_count(spec.hazard_density, w - 2);
  if (n > 0 && mid + 1 <= h - 2 && west + 2 <= east - 1)
    for (int x : spread_columns(n, west + 2, east - 1, -1, -1, rng)) {
      for (int y = mid + 1; y <= h - 2; ++y) b.set_wall(0, x, y, false);
      auto path = vertical_path(x, mid + 1, h - 2);
      b.hazard(0, path, static_cast<int>(uniform_index(rng, patrol_period(path.size()))));
    }
  return std::move(l);
}

Layout build_cross(const EnvSpec& spec, Rng& rng) {
  const int w = spec.room_width, h = spec.room_height;
  LayoutBuilder b(w, h, 1);
  b.fill_walls(0);
  const int cx = w / 2, cy = h / 2;
  for (int x = 1; x < w - 1; ++x)
    for (int y = cy - 1; y <= cy + 1; ++y) b.set_wall(0, x, y, false);
  for (int y = 1; y < h - 1; ++y)
    for (int x = cx - 1; x <= cx + 1; ++x) b.set_wall(0, x, y, false);
  Layout& l = b.get();
  l.spawn = {cx, cy, 0};
  b.item(ItemKind::kVault, 0, cx, cy);
  b.item(ItemKind::kArmToken, 0, 1, cy);
  b.item(ItemKind::kArmToken, 0, w - 2, cy);
  b.item(ItemKind::kArmToken, 0, cx, 1);
  b.item(ItemKind::kArmToken, 0, cx, h - 2);
  // Hazards sweep across an arm's width at a seeded distance from the center.
  const int arm_x = cx - 2, arm_y = cy - 2;
  const int n = hazard_count(spec.hazard_density, 2 * (arm_x + arm_y));
  for (int i = 0; i < n; ++i) {
    const int arm = i % 4;
    const int reach = (arm < 2 ? arm_x : arm_y);
    if (reach < 5) continue;
    const int d = 3 + static_cast<int>(uniform_index(rng, reach - 4));
    std::vector<std::pair<int, int>> path;
    switch (arm) {
      case 0: path = vertical_path(cx - 1 - d, cy - 1, cy + 1); break;
      case 1: path = vertical_path(cx + 1 + d, cy - 1, cy + 1); break;
      case 2: path = horizontal_path(cy - 1 - d, cx - 1, cx + 1); break;
      default: path = horizontal_path(cy + 1 + d, cx - 1, cx + 1); break;
    }
    b.hazard(0, path, static_cast<int>(uniform_index(rng, patrol_period(path.size()))));
  }
  return std::move(l);
}

Layout build_dense(const EnvSpec& spec, Rng& rng) {
  const int w = spec.room_width, h = spec.room_height;
  LayoutBuilder b(w, h, 1);
  Layout& l = b.get();
  l.surface_row = 1;
  l.spawn = {w / 2, 2, 0};
  // Sparse scatter near the surface, dense clusters in the lower corners.
  for (int y = 2; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      if (x == l.spawn.x && y == l.spawn.y) continue;
      const bool low = y >= h - 1 - (h - 3) / 3;
      const bool side = x <= (w - 2) / 4 || x >= w - 1 - (w - 2) / 4;
      const double p = (low && side) ? 0.6 : 0.06;
      if (uniform01(rng) < p) b.item(ItemKind::kCollectible, 0, x, y);
    }
  }
  const int n = hazard_count(spec.hazard_density, h - 4);
  for (int i = 0; i < n; ++i) {
    const int y = 3 + static_cast<int>(std::lround((i + 0.5) / n * (h - 5)));
    auto path = horizontal_path(std::min(y, h - 2), 1, w - 2);
    b.hazard(0, path, static_cast<int>(uniform_index(rng, patrol_period(path.size()))));
  }
  return std::move(l);
}

Layout build_multiroom(const EnvSpec& spec, Rng& rng) {
  const int w = spec.room_width, h = spec.room_height;
  const int count = spec.room_count;
  LayoutBuilder b(w, h, count);
  Layout& l = b.get();

  // Pyramid rows: row r holds r + 1 rooms; the last row may be partial.
  std::vector<std::pair<int, int>> where;  // room -> (row, index)
  std::vector<std::vector<int>> rows;
  for (int r = 0, id = 0; id < count; ++r) {
    rows.emplace_back();
    for (int i = 0; i <= r && id < count; ++i, ++id) {
      rows[r].push_back(id);
      where.emplace_back(r, i);
    }
  }
  auto room_at = [&](int r, int i) -> int {
    if (r < 0 || r >= static_cast<int>(rows.size())) return -1;
    if (i < 0 || i >= static_cast<int>(rows[r].size())) return -1;
    return rows[r][i];
  };

  const int mid_y = h / 2;
  const int left_x = w / 4, right_x = w - 1 - w / 4;
  const int last_row = static_cast<int>(rows.size()) - 1;
  for (int id = 0; id < count; ++id) {
    const auto [r, i] = where[id];
    if (int east = room_at(r, i + 1); east >= 0) {
      b.link(id, w - 1, mid_y - 1, east, 0, mid_y - 1);
      b.link(id, w - 1, mid_y, east, 0, mid_y);
    }
    // Lower neighbors sit half a room to either side.
    if (int sw = room_at(r + 1, i); sw >= 0) {
      b.link(id, left_x - 1, h - 1, sw, right_x - 1, 0);
      b.link(id, left_x, h - 1, sw, right_x, 0);
    }
    if (int se = room_at(r + 1, i + 1); se >= 0) {
      b.link(id, right_x - 1, h - 1, se, left_x - 1, 0);
      b.link(id, right_x, h - 1, se, left_x, 0);
    }
  }

  l.spawn = {w / 2, 2, 0};
  // Middle-row rooms hold a key each and lock their downward passages; the
  // treasure sits in the bottom row (or the last room for shallow pyramids).
  for (int id = 0; id < count; ++id) {
    const auto [r, i] = where[id];
    if (r == 0) continue;
    if (r < last_row) {
      const bool west = (i % 2 == 0);
      b.item(ItemKind::kKey, id, west ? 1 : w - 2, h - 2);
      for (const RoomExit& e : std::vector<RoomExit>(l.exits[id])) {
        if (e.dy == 1) b.door(id, e.x, e.y, /*ends_episode=*/false);
      }
    } else {
      b.item(ItemKind::kTreasure, id, w / 2, h / 2);
    }
  }
  if (rows.size() == 1) b.item(ItemKind::kTreasure, 0, w - 2, h - 2);
  if (rows.size() == 2) b.item(ItemKind::kTreasure, count - 1, w / 2, h / 2);

  const int n = hazard_count(spec.hazard_density, w - 2);
  for (int id = 1; id < count; ++id) {
    for (int x : spread_columns(n, 3, w - 4, left_x - 1, left_x, rng)) {
      if (x >= right_x - 1 && x <= right_x) continue;
      auto path = vertical_path(x, 2, h - 3);
      b.hazard(id, path, static_cast<int>(uniform_index(rng, patrol_period(path.size()))));
    }
  }
  return std::move(l);
}

}  // namespace

std::string_view to_string(EnvKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

EnvKind parse_env_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ConfigError("kind: unknown environment '" + std::string(name) + "'");
}

EnvSpec EnvSpec::defaults(EnvKind kind) {
  EnvSpec s;
  s.kind = kind;
  switch (kind) {
    case EnvKind::kMultiRoomWorld:
      s.room_width = 24;
      s.room_height = 18;
      s.room_count = 6;
      s.lives = 3;
      s.max_episode_steps = 600;
      s.hazard_density = 0.05;
      break;
    case EnvKind::kHallwayKeyDoor:
      s.room_width = 40;
      s.room_height = 9;
      s.room_count = 1;
      s.lives = 3;
      s.max_episode_steps = 150;
      s.hazard_density = 0.1;
      break;
    case EnvKind::kCrossMaze:
      // Arms of 15 cells, 3 wide, around a 3x3 vault chamber.
      s.room_width = 35;
      s.room_height = 35;
      s.room_count = 1;
      s.lives = 3;
      s.max_episode_steps = 400;
      s.hazard_density = 0.05;
      break;
    case EnvKind::kDenseCollect:
      s.room_width = 20;
      s.room_height = 16;
      s.room_count = 1;
      s.lives = 3;
      s.max_episode_steps = 500;
      s.hazard_density = 0.2;
      s.oxygen_steps = 120;
      break;
  }
  return s;
}

void EnvSpec::validate() const {
  if (room_width < 4) throw ConfigError("room_width: must be >= 4");
  if (room_height < 4) throw ConfigError("room_height: must be >= 4");
  if (room_count < 1) throw ConfigError("room_count: must be >= 1");
  if (kind != EnvKind::kMultiRoomWorld && room_count != 1)
    throw ConfigError("room_count: only MultiRoomWorld supports more than one room");
  if (kind == EnvKind::kCrossMaze && (room_width < 7 || room_height < 7))
    throw ConfigError("room_width: CrossMaze needs rooms of at least 7x7");
  if (kind == EnvKind::kDenseCollect && room_height < 5)
    throw ConfigError("room_height: DenseCollect needs at least 5 rows");
  if (lives < 1) throw ConfigError("lives: must be >= 1");
  if (max_episode_steps < 1) throw ConfigError("max_episode_steps: must be >= 1");
  if (!(hazard_density >= 0.0 && hazard_density <= 1.0))
    throw ConfigError("hazard_density: must lie in [0, 1]");
  if (oxygen_steps < 0) throw ConfigError("oxygen_steps: must be >= 0");
  const std::pair<const char*, double> rewards[] = {
      {"reward_table.key", reward_table.key},
      {"reward_table.door", reward_table.door},
      {"reward_table.treasure", reward_table.treasure},
      {"reward_table.arm_token", reward_table.arm_token},
      {"reward_table.vault", reward_table.vault},
      {"reward_table.collectible", reward_table.collectible},
  };
  for (const auto& [name, v] : rewards)
    if (!std::isfinite(v)) throw ConfigError(std::string(name) + ": must be finite");
}

Environment::Environment(EnvSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
  Rng rng(mix_seed(seed, 0x1a7));
  switch (spec_.kind) {
    case EnvKind::kMultiRoomWorld: layout_ = build_multiroom(spec_, rng); break;
    case EnvKind::kHallwayKeyDoor: layout_ = build_hallway(spec_, rng); break;
    case EnvKind::kCrossMaze: layout_ = build_cross(spec_, rng); break;
    case EnvKind::kDenseCollect: layout_ = build_dense(spec_, rng); break;
  }
  const std::size_t cells = static_cast<std::size_t>(layout_.width) * layout_.height;
  item_index_.assign(layout_.room_count, std::vector<int>(cells, -1));
  door_index_.assign(layout_.room_count, std::vector<int>(cells, -1));
  for (std::size_t i = 0; i < layout_.items.size(); ++i) {
    const Item& it = layout_.items[i];
    item_index_[it.room][static_cast<std::size_t>(it.y) * layout_.width + it.x] =
        static_cast<int>(i);
    if (it.kind == ItemKind::kArmToken) ++total_tokens_;
  }
  for (std::size_t i = 0; i < layout_.doors.size(); ++i) {
    const auto& d = layout_.doors[i];
    door_index_[d.room][static_cast<std::size_t>(d.y) * layout_.width + d.x] =
        static_cast<int>(i);
  }
}

Environment make_env(const EnvSpec& spec, std::uint64_t seed) {
  return Environment(spec, seed);
}

int Environment::item_at(int room, int x, int y) const {
  const int i = item_index_[room][static_cast<std::size_t>(y) * layout_.width + x];
  return (i >= 0 && item_present_[i]) ? i : -1;
}

int Environment::door_at(int room, int x, int y) const {
  return door_index_[room][static_cast<std::size_t>(y) * layout_.width + x];
}

std::pair<int, int> Environment::hazard_cell(std::size_t i, long t) const {
  const Hazard& hz = layout_.hazards[i];
  const std::size_t len = hz.path.size();
  const long period = patrol_period(len);
  long k = (t + hz.phase + hazard_offset_[i]) % period;
  if (k >= static_cast<long>(len)) k = period - k;
  return hz.path[static_cast<std::size_t>(k)];
}

std::vector<std::pair<int, int>> Environment::hazard_cells(int room) const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < layout_.hazards.size(); ++i)
    if (layout_.hazards[i].room == room) out.push_back(hazard_cell(i, clock_));
  return out;
}

bool Environment::hazard_hits(int room, int x, int y, int prev_x, int prev_y) const {
  for (std::size_t i = 0; i < layout_.hazards.size(); ++i) {
    if (layout_.hazards[i].room != room) continue;
    const auto now = hazard_cell(i, clock_);
    if (now.first == x && now.second == y) return true;
    // Swapping cells with a hazard also counts as contact.
    const auto before = hazard_cell(i, clock_ - 1);
    if (before.first == x && before.second == y && now.first == prev_x &&
        now.second == prev_y)
      return true;
  }
  return false;
}

void Environment::respawn() {
  agent_ = entry_;
  if (spec_.oxygen_steps > 0) oxygen_ = spec_.oxygen_steps;
}

Observation Environment::reset(std::uint64_t episode_seed) {
  Rng rng(mix_seed(seed_ ^ 0x5eedULL, episode_seed));
  hazard_offset_.assign(layout_.hazards.size(), 0);
  for (std::size_t i = 0; i < layout_.hazards.size(); ++i)
    hazard_offset_[i] = static_cast<int>(
        uniform_index(rng, patrol_period(layout_.hazards[i].path.size())));
  item_present_.assign(layout_.items.size(), true);
  door_open_.assign(layout_.doors.size(), false);
  agent_ = layout_.spawn;
  entry_ = layout_.spawn;
  clock_ = 0;
  steps_ = 0;
  lives_ = spec_.lives;
  oxygen_ = spec_.oxygen_steps;
  keys_ = 0;
  tokens_ = 0;
  needs_reset_ = false;
  return observe();
}

StepResult Environment::step(Action action) {
  if (needs_reset_) throw UsageError("step: episode terminated; call reset first");
  const AgentPosition prev = agent_;
  const RewardTable& rt = spec_.reward_table;
  StepResult res;
  bool completed = false;

  int dx = 0, dy = 0;
  switch (action) {
    case Action::kUp: dy = -1; break;
    case Action::kDown: dy = 1; break;
    case Action::kLeft: dx = -1; break;
    case Action::kRight: dx = 1; break;
    case Action::kStay: break;
    case Action::kInteract: {
      if (int it = item_at(agent_.room, agent_.x, agent_.y); it >= 0) {
        switch (layout_.items[it].kind) {
          case ItemKind::kKey:
            item_present_[it] = false;
            ++keys_;
            res.raw_reward += rt.key;
            break;
          case ItemKind::kArmToken:
            item_present_[it] = false;
            ++tokens_;
            res.raw_reward += rt.arm_token;
            break;
          case ItemKind::kVault:
            if (total_tokens_ > 0 && tokens_ >= total_tokens_) {
              item_present_[it] = false;
              tokens_ = 0;
              res.raw_reward += rt.vault;
              completed = true;
            }
            break;
          default:
            break;
        }
      } else if (keys_ > 0) {
        static constexpr int kNx[4] = {0, 0, -1, 1};
        static constexpr int kNy[4] = {-1, 1, 0, 0};
        for (int k = 0; k < 4; ++k) {
          const int nx = agent_.x + kNx[k], ny = agent_.y + kNy[k];
          if (nx < 0 || ny < 0 || nx >= layout_.width || ny >= layout_.height) continue;
          const int d = door_at(agent_.room, nx, ny);
          if (d < 0 || door_open_[d]) continue;
          door_open_[d] = true;
          --keys_;
          res.raw_reward += rt.door;
          if (layout_.doors[d].ends_episode) completed = true;
          break;
        }
      }
      break;
    }
  }

  if (dx != 0 || dy != 0) {
    const int nx = agent_.x + dx, ny = agent_.y + dy;
    if (nx < 0 || ny < 0 || nx >= layout_.width || ny >= layout_.height) {
      for (const RoomExit& e : layout_.exits[agent_.room]) {
        if (e.x == agent_.x && e.y == agent_.y && e.dx == dx && e.dy == dy) {
          agent_ = {e.to_x, e.to_y, e.to_room};
          entry_ = agent_;
          break;
        }
      }
    } else if (!layout_.is_wall(agent_.room, nx, ny)) {
      const int d = door_at(agent_.room, nx, ny);
      if (d < 0 || door_open_[d]) {
        agent_.x = nx;
        agent_.y = ny;
      }
    }
    if (int it = item_at(agent_.room, agent_.x, agent_.y); it >= 0) {
      const ItemKind kind = layout_.items[it].kind;
      if (kind == ItemKind::kTreasure || kind == ItemKind::kCollectible) {
        item_present_[it] = false;
        res.raw_reward += kind == ItemKind::kTreasure ? rt.treasure : rt.collectible;
      }
    }
  }

  ++steps_;
  ++clock_;

  bool lost = false;
  if (agent_.room == prev.room) {
    lost = hazard_hits(agent_.room, agent_.x, agent_.y, prev.x, prev.y);
  } else {
    lost = hazard_hits(agent_.room, agent_.x, agent_.y, -1, -1);
  }
  if (spec_.oxygen_steps > 0 && !lost) {
    if (agent_.y == layout_.surface_row) {
      oxygen_ = spec_.oxygen_steps;
    } else if (--oxygen_ <= 0) {
      lost = true;
    }
  }
  if (lost && !completed) {
    res.life_lost = true;
    if (--lives_ > 0) respawn();
  }

  res.terminated = completed || lives_ <= 0 || steps_ >= spec_.max_episode_steps;
  needs_reset_ = res.terminated;
  res.position = agent_;
  res.obs = observe();
  return res;
}

Observation Environment::observe() const {
  const int w = layout_.width, h = layout_.height, room = agent_.room;
  Observation obs{kBaseChannels, w, h,
                  std::vector<double>(static_cast<std::size_t>(kBaseChannels) * w * h, 0.0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (layout_.is_wall(room, x, y)) obs.at(kWallChannel, x, y) = 1.0;
  for (const auto& [x, y] : hazard_cells(room)) obs.at(kHazardChannel, x, y) = 1.0;
  for (std::size_t i = 0; i < layout_.items.size(); ++i) {
    const Item& it = layout_.items[i];
    if (it.room == room && item_present_[i])
      obs.at(kItemChannel, it.x, it.y) = item_intensity(it.kind);
  }
  for (const RoomExit& e : layout_.exits[room]) obs.at(kDoorChannel, e.x, e.y) = 0.5;
  for (std::size_t i = 0; i < layout_.doors.size(); ++i) {
    const auto& d = layout_.doors[i];
    if (d.room == room) obs.at(kDoorChannel, d.x, d.y) = door_open_[i] ? 0.5 : 1.0;
  }
  if (layout_.surface_row >= 0)
    for (int x = 1; x < w - 1; ++x) obs.at(kDoorChannel, x, layout_.surface_row) = 0.25;
  obs.at(kAgentChannel, agent_.x, agent_.y) = 1.0;
  // Meter: oxygen bar along the top row, inventory along the bottom row.
  if (spec_.oxygen_steps > 0) {
    const int filled = static_cast<int>(
        std::ceil(static_cast<double>(oxygen_) * w / spec_.oxygen_steps));
    for (int x = 0; x < std::min(filled, w); ++x) obs.at(kMeterChannel, x, 0) = 1.0;
  }
  for (int k = 0; k < std::min(keys_, w / 2); ++k) obs.at(kMeterChannel, k, h - 1) = 1.0;
  for (int k = 0; k < std::min(tokens_, w / 2); ++k)
    obs.at(kMeterChannel, w - 1 - k, h - 1) = 1.0;
  return obs;
}

std::vector<std::vector<int>> Environment::room_adjacency() const {
  std::vector<std::vector<int>> adj(layout_.room_count);
  for (int r = 0; r < layout_.room_count; ++r) {
    std::set<int> s;
    for (const RoomExit& e : layout_.exits[r]) s.insert(e.to_room);
    adj[r].assign(s.begin(), s.end());
  }
  return adj;
}

std::string Environment::render_ascii() const {
  const int w = layout_.width, h = layout_.height, room = agent_.room;
  std::vector<std::string> rows(h, std::string(w, '.'));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (layout_.is_wall(room, x, y)) rows[y][x] = '#';
      else if (y == layout_.surface_row) rows[y][x] = '~';
    }
  for (std::size_t i = 0; i < layout_.doors.size(); ++i) {
    const auto& d = layout_.doors[i];
    if (d.room == room) rows[d.y][d.x] = door_open_.empty() || !door_open_[i] ? 'D' : '/';
  }
  for (std::size_t i = 0; i < layout_.items.size(); ++i) {
    const Item& it = layout_.items[i];
    if (it.room != room || (!item_present_.empty() && !item_present_[i])) continue;
    char c = '?';
    switch (it.kind) {
      case ItemKind::kKey: c = 'k'; break;
      case ItemKind::kArmToken: c = 't'; break;
      case ItemKind::kTreasure: c = '$'; break;
      case ItemKind::kCollectible: c = 'c'; break;
      case ItemKind::kVault: c = 'V'; break;
    }
    rows[it.y][it.x] = c;
  }
  if (!hazard_offset_.empty())
    for (const auto& [x, y] : hazard_cells(room)) rows[y][x] = 'x';
  rows[agent_.y][agent_.x] = '@';
  std::ostringstream os;
  os << to_string(spec_.kind) << " room " << room << " step " << steps_ << " lives "
     << lives_ << " keys " << keys_;
  if (spec_.oxygen_steps > 0) os << " oxygen " << oxygen_;
  os << '\n';
  for (const auto& r : rows) os << r << '\n';
  return os.str();
}

}  // namespace dcs
