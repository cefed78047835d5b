#include "dcs/curiosity.hpp"

#include <algorithm>
#include <cmath>

#include "dcs/common.hpp"

namespace dcs {

TileIndex tile_of(const AgentPosition& pos, int tile_size) {
  return {pos.room, pos.x / tile_size, pos.y / tile_size};
}

std::string_view to_string(ResetPolicy policy) {
  switch (policy) {
    case ResetPolicy::kPerEpisode: return "PerEpisode";
    case ResetPolicy::kPerLife: return "PerLife";
    case ResetPolicy::kNever: return "Never";
  }
  return "?";
}

ResetPolicy parse_reset_policy(std::string_view name) {
  if (name == "PerEpisode") return ResetPolicy::kPerEpisode;
  if (name == "PerLife") return ResetPolicy::kPerLife;
  if (name == "Never") return ResetPolicy::kNever;
  throw ConfigError("reset_policy: unknown policy '" + std::string(name) + "'");
}

CuriosityGrid::CuriosityGrid(int room_count, int room_width, int room_height,
                             int tile_size)
    : room_count_(room_count),
      room_width_(room_width),
      room_height_(room_height),
      tile_size_(tile_size) {
  if (tile_size < 1) throw UsageError("CuriosityGrid: tile_size must be >= 1");
  if (room_count < 1 || room_width < 1 || room_height < 1)
    throw UsageError("CuriosityGrid: empty room geometry");
  tiles_x_ = (room_width + tile_size - 1) / tile_size;
  tiles_y_ = (room_height + tile_size - 1) / tile_size;
  visited_.assign(static_cast<std::size_t>(total_tiles()), 0);
  counts_.assign(static_cast<std::size_t>(total_tiles()), 0);
  room_touched_.assign(static_cast<std::size_t>(room_count), 0);
}

int CuriosityGrid::visit(const AgentPosition& pos) {
  const std::size_t i = flat(tile_of(pos, tile_size_));
  ++counts_[i];
  if (!room_touched_[pos.room]) {
    room_touched_[pos.room] = 1;
    ++rooms_touched_;
  }
  if (visited_[i]) return 0;
  visited_[i] = 1;
  ++visited_total_;
  return 1;
}

double CuriosityGrid::visit_count_bonus(const AgentPosition& pos) const {
  const std::uint64_t n = counts_[flat(tile_of(pos, tile_size_))];
  return 1.0 / std::sqrt(static_cast<double>(std::max<std::uint64_t>(n, 1)));
}

void CuriosityGrid::reset() {
  std::fill(visited_.begin(), visited_.end(), 0);
  std::fill(room_touched_.begin(), room_touched_.end(), 0);
  visited_total_ = 0;
  rooms_touched_ = 0;
}

bool CuriosityGrid::maybe_reset(ResetPolicy policy, GridEvent event) {
  bool do_reset = false;
  switch (policy) {
    case ResetPolicy::kPerEpisode: do_reset = event == GridEvent::kEpisodeEnded; break;
    case ResetPolicy::kPerLife: do_reset = true; break;
    case ResetPolicy::kNever: break;
  }
  if (do_reset) reset();
  return do_reset;
}

void CuriosityGrid::render_compass(int room, int out_width, int out_height,
                                   std::span<double> out) const {
  if (room < 0 || room >= room_count_) throw UsageError("render_compass: bad room");
  if (out.size() != static_cast<std::size_t>(out_width) * out_height)
    throw UsageError("render_compass: output plane has the wrong size");
  for (int py = 0; py < out_height; ++py) {
    const int cy = static_cast<int>(static_cast<long>(py) * room_height_ / out_height);
    const int ty = cy / tile_size_;
    for (int px = 0; px < out_width; ++px) {
      const int cx = static_cast<int>(static_cast<long>(px) * room_width_ / out_width);
      out[static_cast<std::size_t>(py) * out_width + px] =
          visited_[flat({room, cx / tile_size_, ty})] ? 1.0 : 0.0;
    }
  }
}

std::vector<double> CuriosityGrid::render_compass(int room, int out_width,
                                                  int out_height) const {
  std::vector<double> plane(static_cast<std::size_t>(out_width) * out_height);
  render_compass(room, out_width, out_height, plane);
  return plane;
}

Coverage CuriosityGrid::coverage() const {
  return {static_cast<double>(visited_total_) / total_tiles(), rooms_touched_};
}

std::vector<std::pair<int, std::string>> CuriosityGrid::snapshot() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::vector<std::pair<int, std::string>> out;
  const int per_room = tiles_x_ * tiles_y_;
  for (int r = 0; r < room_count_; ++r) {
    if (!room_touched_[r]) continue;
    std::string hex;
    for (int base = 0; base < per_room; base += 4) {
      int nibble = 0;
      for (int b = 0; b < 4 && base + b < per_room; ++b)
        if (visited_[static_cast<std::size_t>(r) * per_room + base + b]) nibble |= 1 << b;
      hex.push_back(kHex[nibble]);
    }
    out.emplace_back(r, std::move(hex));
  }
  return out;
}

double clip_reward(double r) { return std::clamp(r, -1.0, 1.0); }

double mix(double raw_reward, double intrinsic, const RewardMixer& mixer) {
  const double r = clip_reward(raw_reward);
  switch (mixer.mode) {
    case RewardMixer::Mode::kWeighted:
      return mixer.beta * r + (1.0 - mixer.beta) * intrinsic;
    case RewardMixer::Mode::kUntunedClip:
      return clip_reward(r + intrinsic);
  }
  return r;
}

}  // namespace dcs
