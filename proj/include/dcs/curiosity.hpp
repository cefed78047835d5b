#ifndef DCS_CURIOSITY_HPP_
#define DCS_CURIOSITY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcs/envsuite.hpp"

namespace dcs {

// Default tile side, in cells.
inline constexpr int kDefaultTileSize = 4;

struct TileIndex {
  int room = 0;
  int tile_x = 0;
  int tile_y = 0;

  bool operator==(const TileIndex&) const = default;
};

TileIndex tile_of(const AgentPosition& pos, int tile_size);

// When the curiosity grid is cleared.
enum class ResetPolicy { kPerEpisode, kPerLife, kNever };
enum class GridEvent { kLifeLost, kEpisodeEnded };

std::string_view to_string(ResetPolicy policy);
ResetPolicy parse_reset_policy(std::string_view name);

struct Coverage {
  double fraction_visited = 0.0;
  int rooms_touched = 0;
};

// Per-room visited bitsets over tile_size x tile_size tiles, plus visit
// counts that survive resets (used by the count-bonus baseline).
//
// visited(t) <=> the tile was entered since the last reset. count(t) is the
// number of entries over the grid's whole lifetime.
class CuriosityGrid {
 public:
  CuriosityGrid(int room_count, int room_width, int room_height, int tile_size);

  // Marks the tile under `pos`. Returns 1 if the tile had not been visited
  // since the last reset, else 0.
  int visit(const AgentPosition& pos);

  // 1 / sqrt(N) for the tile under `pos`, where N counts every visit()
  // so far (including the current one). Reads only; never resets.
  double visit_count_bonus(const AgentPosition& pos) const;

  void reset();
  // Applies the reset policy to an event. Returns true if the grid was reset.
  bool maybe_reset(ResetPolicy policy, GridEvent event);

  // Nearest-neighbour upsample of the room's visited map onto an
  // out_width x out_height plane: 1 = visited, 0 = unvisited.
  void render_compass(int room, int out_width, int out_height,
                      std::span<double> out) const;
  std::vector<double> render_compass(int room, int out_width, int out_height) const;

  Coverage coverage() const;

  bool visited(const TileIndex& t) const { return visited_[flat(t)] != 0; }
  std::uint64_t count(const TileIndex& t) const { return counts_[flat(t)]; }

  int tile_size() const { return tile_size_; }
  int tiles_x() const { return tiles_x_; }
  int tiles_y() const { return tiles_y_; }
  int room_count() const { return room_count_; }
  int room_width() const { return room_width_; }
  int room_height() const { return room_height_; }
  int total_tiles() const { return room_count_ * tiles_x_ * tiles_y_; }

  // (room, hex string of the visited bitset, tile-major within the room,
  // bit i of the LSB-first nibble stream = tile i) for every touched room.
  std::vector<std::pair<int, std::string>> snapshot() const;

 private:
  std::size_t flat(const TileIndex& t) const {
    return (static_cast<std::size_t>(t.room) * tiles_y_ + t.tile_y) * tiles_x_ + t.tile_x;
  }

  int room_count_, room_width_, room_height_, tile_size_;
  int tiles_x_, tiles_y_;
  std::vector<std::uint8_t> visited_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint8_t> room_touched_;
  int visited_total_ = 0;
  int rooms_touched_ = 0;
};

double clip_reward(double r);

// Weighted: beta * clip(raw) + (1 - beta) * intrinsic.
// UntunedClip: clip(clip(raw) + intrinsic).
struct RewardMixer {
  enum class Mode { kWeighted, kUntunedClip };
  Mode mode = Mode::kWeighted;
  double beta = 0.25;

  static RewardMixer weighted(double beta) { return {Mode::kWeighted, beta}; }
  static RewardMixer untuned() { return {Mode::kUntunedClip, 0.0}; }

  bool operator==(const RewardMixer&) const = default;
};

double mix(double raw_reward, double intrinsic, const RewardMixer& mixer);

}  // namespace dcs

#endif  // DCS_CURIOSITY_HPP_
