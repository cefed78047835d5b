#ifndef DCS_CONFIG_HPP_
#define DCS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dcs/agent.hpp"
#include "dcs/envsuite.hpp"

namespace dcs {

struct Treatment {
  std::string label;
  EnvSpec env;
  TrainConfig train;
};

struct ExperimentPlan {
  std::string name = "experiment";
  int run_count = 15;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  int workers = 1;
  double alpha = 0.05;
  std::vector<Treatment> treatments;
};

// Parses the experiment config: a TOML subset with the sections
// [experiment], [env], [train] and [treatment.<label>]. Treatment sections
// override any env or train key for that treatment only; env defaults follow
// the resolved `kind`. Throws ConfigError whose message names the line and
// key at fault.
ExperimentPlan parse_config(std::string_view text);
ExperimentPlan load_config(const std::filesystem::path& path);

// The fully resolved plan as config text; parse_config(echo_config(p))
// reproduces p.
std::string echo_config(const ExperimentPlan& plan);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace dcs

#endif  // DCS_CONFIG_HPP_
