#ifndef DCS_TEST_UTIL_HPP_
#define DCS_TEST_UTIL_HPP_

#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dcs/envsuite.hpp"

namespace dcs::test {

// Shortest wall-avoiding move sequence between two cells of one room,
// ignoring hazards and locked doors.
inline std::vector<Action> path_to(const Layout& l, int room, int x0, int y0, int x1, int y1) {
  const int w = l.width, h = l.height;
  std::vector<int> prev(static_cast<std::size_t>(w) * h, -1);
  std::vector<Action> how(prev.size(), Action::kStay);
  std::deque<int> q{y0 * w + x0};
  prev[y0 * w + x0] = y0 * w + x0;
  static constexpr int kDx[4] = {0, 0, -1, 1};
  static constexpr int kDy[4] = {-1, 1, 0, 0};
  while (!q.empty()) {
    const int c = q.front();
    q.pop_front();
    const int x = c % w, y = c / w;
    if (x == x1 && y == y1) break;
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || l.is_wall(room, nx, ny)) continue;
      const int n = ny * w + nx;
      if (prev[n] >= 0) continue;
      prev[n] = c;
      how[n] = static_cast<Action>(k);
      q.push_back(n);
    }
  }
  std::vector<Action> out;
  int c = y1 * w + x1;
  if (prev[c] < 0) return out;
  while (c != y0 * w + x0) {
    out.push_back(how[c]);
    c = prev[c];
  }
  return {out.rbegin(), out.rend()};
}

inline EnvSpec no_hazards(EnvKind kind) {
  EnvSpec s = EnvSpec::defaults(kind);
  s.hazard_density = 0.0;
  return s;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dcs_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace dcs::test

#endif  // DCS_TEST_UTIL_HPP_
