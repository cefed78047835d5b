#ifndef DCS_ENVSUITE_HPP_
#define DCS_ENVSUITE_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dcs {

enum class EnvKind { kMultiRoomWorld, kHallwayKeyDoor, kCrossMaze, kDenseCollect };

std::string_view to_string(EnvKind kind);
// Accepts the canonical names ("HallwayKeyDoor", ...). Throws ConfigError.
EnvKind parse_env_kind(std::string_view name);

enum class Action : int { kUp = 0, kDown, kLeft, kRight, kStay, kInteract };
inline constexpr int kNumActions = 6;

// Raw points per event. Reported scores are sums of these, never clipped.
struct RewardTable {
  double key = 100.0;
  double door = 300.0;
  double treasure = 1000.0;
  double arm_token = 50.0;
  double vault = 1000.0;
  double collectible = 10.0;

  bool operator==(const RewardTable&) const = default;
};

struct EnvSpec {
  EnvKind kind = EnvKind::kHallwayKeyDoor;
  int room_width = 40;
  int room_height = 9;
  int room_count = 1;
  int lives = 3;
  int max_episode_steps = 150;
  double hazard_density = 0.05;
  // Steps of air per dive; 0 disables the oxygen meter. Only DenseCollect
  // uses it by default.
  int oxygen_steps = 0;
  RewardTable reward_table;

  static EnvSpec defaults(EnvKind kind);

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const EnvSpec&) const = default;
};

struct AgentPosition {
  int x = 0;
  int y = 0;
  int room = 0;

  bool operator==(const AgentPosition&) const = default;
};

// Channel planes of width x height values in [0, 1], stored plane-major:
// data[(c * height + y) * width + x].
struct Observation {
  int channels = 0;
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int c, int x, int y) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double& at(int c, int x, int y) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const Observation&) const = default;
};

// Base observation channels emitted by every environment.
enum Channel : int {
  kWallChannel = 0,
  kHazardChannel,
  kItemChannel,
  kDoorChannel,
  kAgentChannel,
  kMeterChannel,
};
inline constexpr int kBaseChannels = 6;

struct StepResult {
  Observation obs;
  double raw_reward = 0.0;
  bool terminated = false;
  bool life_lost = false;
  AgentPosition position;
};

enum class ItemKind : std::uint8_t { kKey, kArmToken, kTreasure, kCollectible, kVault };

struct Item {
  ItemKind kind;
  int room;
  int x;
  int y;
};

// A passage through a room's border. Moving from (x, y) in direction
// (dx, dy) lands on (to_x, to_y) of room to_room.
struct RoomExit {
  int x, y, dx, dy;
  int to_room, to_x, to_y;
};

struct Hazard {
  int room;
  std::vector<std::pair<int, int>> path;  // ping-pong patrol
  int phase = 0;
};

struct Layout {
  int width = 0;
  int height = 0;
  int room_count = 0;
  std::vector<std::vector<std::uint8_t>> walls;  // per room, width*height
  std::vector<std::vector<RoomExit>> exits;      // per room
  std::vector<Item> items;
  struct Door {
    int room, x, y;
    bool ends_episode;
  };
  std::vector<Door> doors;
  std::vector<Hazard> hazards;
  AgentPosition spawn;
  int surface_row = -1;  // oxygen refill row, -1 if none

  bool is_wall(int room, int x, int y) const {
    return walls[room][static_cast<std::size_t>(y) * width + x] != 0;
  }
};

// Deterministic, seedable gridworld. Single owner; not thread-safe, but
// distinct instances share no state.
class Environment {
 public:
  Environment(EnvSpec spec, std::uint64_t seed);

  // Starts a fresh episode. episode_seed shifts hazard patrol phases only;
  // the layout (and therefore the spawn cell) is fixed by the construction
  // seed.
  Observation reset(std::uint64_t episode_seed);

  // Throws UsageError if the episode has terminated or was never reset.
  StepResult step(Action action);

  AgentPosition position() const { return agent_; }
  std::string render_ascii() const;

  const EnvSpec& spec() const { return spec_; }
  const Layout& layout() const { return layout_; }
  std::uint64_t seed() const { return seed_; }
  bool needs_reset() const { return needs_reset_; }
  int episode_steps() const { return steps_; }
  int lives_left() const { return lives_; }
  int oxygen() const { return oxygen_; }
  int keys_held() const { return keys_; }
  int tokens_held() const { return tokens_; }

  // Rooms reachable in one move through a border passage (locked doors
  // included), sorted.
  std::vector<std::vector<int>> room_adjacency() const;
  // Current hazard cells in the given room.
  std::vector<std::pair<int, int>> hazard_cells(int room) const;
  // Observation of the current state (what reset/step return).
  Observation observe() const;

 private:
  std::pair<int, int> hazard_cell(std::size_t i, long t) const;
  bool hazard_hits(int room, int x, int y, int prev_x, int prev_y) const;
  int item_at(int room, int x, int y) const;
  int door_at(int room, int x, int y) const;
  void respawn();

  EnvSpec spec_;
  std::uint64_t seed_;
  Layout layout_;
  // Per room, per cell: index into layout_.items / layout_.doors or -1.
  std::vector<std::vector<int>> item_index_;
  std::vector<std::vector<int>> door_index_;
  int total_tokens_ = 0;

  // Episode state.
  bool needs_reset_ = true;
  AgentPosition agent_;
  AgentPosition entry_;
  std::vector<bool> item_present_;
  std::vector<bool> door_open_;
  std::vector<int> hazard_offset_;
  long clock_ = 0;
  int steps_ = 0;
  int lives_ = 0;
  int oxygen_ = 0;
  int keys_ = 0;
  int tokens_ = 0;
};

// Validates the spec (ConfigError naming the field) and builds the layout.
Environment make_env(const EnvSpec& spec, std::uint64_t seed);

}  // namespace dcs

#endif  // DCS_ENVSUITE_HPP_
