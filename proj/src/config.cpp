#include "dcs/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dcs {
namespace {

struct Value {
  enum class Type { kString, kInt, kFloat, kBool, kIntArray };
  Type type = Type::kString;
  std::string s;
  long long i = 0;
  double f = 0.0;
  bool b = false;
  std::vector<long long> arr;
  int line = 0;
};

struct Entry {
  std::string key;
  Value value;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

[[noreturn]] void fail(int line, std::string_view key, std::string_view msg) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!key.empty()) out += "key '" + std::string(key) + "': ";
  out += msg;
  throw ConfigError(out);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool bare_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '-';
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  bool part_start = true;
  for (char c : k) {
    if (c == '.') {
      if (part_start) return false;
      part_start = true;
    } else if (bare_key_char(c)) {
      part_start = false;
    } else {
      return false;
    }
  }
  return !part_start;
}

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

bool parse_integer(std::string_view t, long long& out) {
  std::string digits;
  for (char c : t)
    if (c != '_') digits.push_back(c);
  if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
  if (digits.empty()) return false;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  return ec == std::errc() && p == digits.data() + digits.size();
}

bool parse_float(std::string_view t, double& out) {
  std::string s;
  for (char c : t)
    if (c != '_') s.push_back(c);
  if (!s.empty() && s.front() == '+') s.erase(0, 1);
  if (s == "inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (s == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (s == "nan" || s == "-nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

Value parse_value(std::string_view t, int line, std::string_view key) {
  Value v;
  v.line = line;
  if (t.empty()) fail(line, key, "missing value");
  if (t.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < t.size() && t[i] != '"'; ++i) {
      if (t[i] == '\\') {
        if (++i >= t.size()) break;
        switch (t[i]) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(line, key, "unsupported escape in string");
        }
      } else {
        out.push_back(t[i]);
      }
    }
    if (i != t.size() - 1) fail(line, key, "unterminated string or trailing text");
    v.s = std::move(out);
    return v;
  }
  if (t.front() == '\'') {
    if (t.size() < 2 || t.back() != '\'' || t.substr(1, t.size() - 2).find('\'') != t.npos)
      fail(line, key, "unterminated literal string");
    v.s = std::string(t.substr(1, t.size() - 2));
    return v;
  }
  if (t.front() == '[') {
    if (t.back() != ']') fail(line, key, "unterminated array");
    v.type = Value::Type::kIntArray;
    std::string_view body = trim(t.substr(1, t.size() - 2));
    while (!body.empty()) {
      const std::size_t comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      long long x = 0;
      if (!parse_integer(item, x)) fail(line, key, "arrays may only hold integers");
      v.arr.push_back(x);
      if (comma == body.npos) break;
      body = trim(body.substr(comma + 1));
    }
    return v;
  }
  if (t == "true" || t == "false") {
    v.type = Value::Type::kBool;
    v.b = t == "true";
    return v;
  }
  long long i = 0;
  if (parse_integer(t, i)) {
    v.type = Value::Type::kInt;
    v.i = i;
    v.f = static_cast<double>(i);
    return v;
  }
  double f = 0.0;
  if (parse_float(t, f)) {
    v.type = Value::Type::kFloat;
    v.f = f;
    return v;
  }
  fail(line, key, "cannot parse value '" + std::string(t) + "'");
}

std::vector<Section> tokenize(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == text.npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3 || line[1] == '[')
        fail(line_no, {}, "malformed section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!valid_key(name)) fail(line_no, {}, "malformed section name '" + name + "'");
      for (const Section& s : sections)
        if (s.name == name) fail(line_no, {}, "duplicate section [" + name + "]");
      sections.push_back({name, line_no, {}});
    } else {
      const std::size_t eq = line.find('=');
      if (eq == line.npos) fail(line_no, {}, "expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      if (!valid_key(key)) fail(line_no, key, "malformed key");
      if (sections.empty()) fail(line_no, key, "key outside of any section");
      Section& s = sections.back();
      for (const Entry& e : s.entries)
        if (e.key == key) fail(line_no, key, "duplicate key");
      s.entries.push_back({key, parse_value(trim(line.substr(eq + 1)), line_no, key)});
    }
    if (end == text.size()) break;
  }
  return sections;
}

// Typed accessors.
long long as_int(const Entry& e) {
  if (e.value.type != Value::Type::kInt) fail(e.value.line, e.key, "expected an integer");
  return e.value.i;
}
int as_int32(const Entry& e) {
  const long long v = as_int(e);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    fail(e.value.line, e.key, "integer out of range");
  return static_cast<int>(v);
}
std::uint64_t as_seed(const Entry& e) {
  const long long v = as_int(e);
  if (v < 0) fail(e.value.line, e.key, "seeds must be non-negative");
  return static_cast<std::uint64_t>(v);
}
double as_float(const Entry& e) {
  if (e.value.type != Value::Type::kFloat && e.value.type != Value::Type::kInt)
    fail(e.value.line, e.key, "expected a number");
  return e.value.f;
}
bool as_bool(const Entry& e) {
  if (e.value.type != Value::Type::kBool) fail(e.value.line, e.key, "expected true or false");
  return e.value.b;
}
const std::string& as_string(const Entry& e) {
  if (e.value.type != Value::Type::kString) fail(e.value.line, e.key, "expected a string");
  return e.value.s;
}

using Setter = std::function<void(Treatment&, const Entry&)>;

// Keys valid in [env] (and treatment sections), `kind` excluded: it selects
// the defaults before the other keys apply.
const std::map<std::string, Setter, std::less<>>& env_keys() {
  static const std::map<std::string, Setter, std::less<>> keys = {
      {"room_width", [](Treatment& t, const Entry& e) { t.env.room_width = as_int32(e); }},
      {"room_height", [](Treatment& t, const Entry& e) { t.env.room_height = as_int32(e); }},
      {"room_count", [](Treatment& t, const Entry& e) { t.env.room_count = as_int32(e); }},
      {"lives", [](Treatment& t, const Entry& e) { t.env.lives = as_int32(e); }},
      {"max_episode_steps",
       [](Treatment& t, const Entry& e) { t.env.max_episode_steps = as_int32(e); }},
      {"hazard_density", [](Treatment& t, const Entry& e) { t.env.hazard_density = as_float(e); }},
      {"oxygen_steps", [](Treatment& t, const Entry& e) { t.env.oxygen_steps = as_int32(e); }},
      {"layout_seed", [](Treatment& t, const Entry& e) { t.train.layout_seed = as_seed(e); }},
      {"reward_table.key",
       [](Treatment& t, const Entry& e) { t.env.reward_table.key = as_float(e); }},
      {"reward_table.door",
       [](Treatment& t, const Entry& e) { t.env.reward_table.door = as_float(e); }},
      {"reward_table.treasure",
       [](Treatment& t, const Entry& e) { t.env.reward_table.treasure = as_float(e); }},
      {"reward_table.arm_token",
       [](Treatment& t, const Entry& e) { t.env.reward_table.arm_token = as_float(e); }},
      {"reward_table.vault",
       [](Treatment& t, const Entry& e) { t.env.reward_table.vault = as_float(e); }},
      {"reward_table.collectible",
       [](Treatment& t, const Entry& e) { t.env.reward_table.collectible = as_float(e); }},
  };
  return keys;
}

const std::map<std::string, Setter, std::less<>>& train_keys() {
  static const std::map<std::string, Setter, std::less<>> keys = {
      {"actor_count", [](Treatment& t, const Entry& e) { t.train.actor_count = as_int32(e); }},
      {"n_step", [](Treatment& t, const Entry& e) { t.train.n_step = as_int32(e); }},
      {"gamma", [](Treatment& t, const Entry& e) { t.train.gamma = as_float(e); }},
      {"value_loss_coefficient",
       [](Treatment& t, const Entry& e) { t.train.coefficients.value = as_float(e); }},
      {"entropy_coefficient",
       [](Treatment& t, const Entry& e) { t.train.coefficients.entropy = as_float(e); }},
      {"total_env_steps",
       [](Treatment& t, const Entry& e) { t.train.total_env_steps = as_int(e); }},
      {"use_intrinsic", [](Treatment& t, const Entry& e) { t.train.use_intrinsic = as_bool(e); }},
      {"use_compass", [](Treatment& t, const Entry& e) { t.train.use_compass = as_bool(e); }},
      {"reset_policy",
       [](Treatment& t, const Entry& e) {
         try {
           t.train.reset_policy = parse_reset_policy(as_string(e));
         } catch (const ConfigError&) {
           fail(e.value.line, e.key, "expected PerEpisode, PerLife or Never");
         }
       }},
      {"mixer",
       [](Treatment& t, const Entry& e) {
         const std::string& m = as_string(e);
         if (m == "Weighted") t.train.mixer.mode = RewardMixer::Mode::kWeighted;
         else if (m == "UntunedClip") t.train.mixer.mode = RewardMixer::Mode::kUntunedClip;
         else fail(e.value.line, e.key, "expected Weighted or UntunedClip");
       }},
      {"beta", [](Treatment& t, const Entry& e) { t.train.mixer.beta = as_float(e); }},
      {"baseline",
       [](Treatment& t, const Entry& e) {
         try {
           t.train.baseline = parse_baseline(as_string(e));
         } catch (const ConfigError&) {
           fail(e.value.line, e.key, "expected None or CountBonus");
         }
       }},
      {"checkpoint_interval",
       [](Treatment& t, const Entry& e) { t.train.checkpoint_interval = as_int(e); }},
      {"tile_size", [](Treatment& t, const Entry& e) { t.train.tile_size = as_int32(e); }},
      {"hidden",
       [](Treatment& t, const Entry& e) {
         if (e.value.type != Value::Type::kIntArray)
           fail(e.value.line, e.key, "expected an array of integers");
         t.train.hidden.clear();
         for (long long h : e.value.arr) {
           if (h < 1 || h > 1 << 20) fail(e.value.line, e.key, "layer sizes must be positive");
           t.train.hidden.push_back(static_cast<int>(h));
         }
       }},
      {"learning_rate",
       [](Treatment& t, const Entry& e) { t.train.optimizer.learning_rate = as_float(e); }},
      {"rms_decay", [](Treatment& t, const Entry& e) { t.train.optimizer.decay = as_float(e); }},
      {"rms_epsilon",
       [](Treatment& t, const Entry& e) { t.train.optimizer.epsilon = as_float(e); }},
      {"max_grad_norm",
       [](Treatment& t, const Entry& e) { t.train.optimizer.max_grad_norm = as_float(e); }},
  };
  return keys;
}

bool is_env_key(std::string_view k) { return k == "kind" || env_keys().count(k); }
bool is_train_key(std::string_view k) { return train_keys().count(k) != 0; }

void check_keys(const Section& s, bool env_ok, bool train_ok) {
  for (const Entry& e : s.entries) {
    if ((env_ok && is_env_key(e.key)) || (train_ok && is_train_key(e.key))) continue;
    fail(e.value.line, e.key, "unknown key in [" + s.name + "]");
  }
}

Treatment resolve(const std::string& label, const Section* env, const Section* train,
                  const Section* own) {
  // Later sources win.
  std::vector<const Entry*> merged;
  auto absorb = [&](const Section* s) {
    if (!s) return;
    for (const Entry& e : s->entries) {
      bool replaced = false;
      for (const Entry*& m : merged)
        if (m->key == e.key) {
          m = &e;
          replaced = true;
        }
      if (!replaced) merged.push_back(&e);
    }
  };
  absorb(env);
  absorb(train);
  absorb(own);

  Treatment t;
  t.label = label;
  EnvKind kind = EnvKind::kHallwayKeyDoor;
  for (const Entry* e : merged)
    if (e->key == "kind") {
      try {
        kind = parse_env_kind(as_string(*e));
      } catch (const ConfigError&) {
        fail(e->value.line, e->key,
             "expected MultiRoomWorld, HallwayKeyDoor, CrossMaze or DenseCollect");
      }
    }
  t.env = EnvSpec::defaults(kind);
  for (const Entry* e : merged) {
    if (e->key == "kind") continue;
    if (auto it = env_keys().find(e->key); it != env_keys().end()) it->second(t, *e);
    else train_keys().at(e->key)(t, *e);
  }
  try {
    t.env.validate();
    t.train.validate();
  } catch (const ConfigError& err) {
    const std::string msg = err.what();
    const std::size_t colon = msg.find(':');
    const std::string field = colon == msg.npos ? std::string() : msg.substr(0, colon);
    int line = 0;
    for (const Entry* e : merged)
      if (e->key == field) line = e->value.line;
    const std::string rest = colon == msg.npos ? msg : std::string(trim(msg.substr(colon + 1)));
    fail(line, field, rest + " (treatment " + label + ")");
  }
  return t;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string toml_float(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eEn") == s.npos) s += ".0";
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, p) : std::string("nan");
}

ExperimentPlan parse_config(std::string_view text) {
  const std::vector<Section> sections = tokenize(text);
  ExperimentPlan plan;
  const Section* env = nullptr;
  const Section* train = nullptr;
  std::vector<const Section*> treatments;
  for (const Section& s : sections) {
    if (s.name == "experiment") {
      for (const Entry& e : s.entries) {
        if (e.key == "name") plan.name = as_string(e);
        else if (e.key == "run_count") plan.run_count = as_int32(e);
        else if (e.key == "master_seed") plan.master_seed = as_seed(e);
        else if (e.key == "output_dir") plan.output_dir = as_string(e);
        else if (e.key == "workers") plan.workers = as_int32(e);
        else if (e.key == "alpha") plan.alpha = as_float(e);
        else fail(e.value.line, e.key, "unknown key in [experiment]");
        if (e.key == "run_count" && plan.run_count < 1)
          fail(e.value.line, e.key, "must be >= 1");
        if (e.key == "workers" && plan.workers < 1) fail(e.value.line, e.key, "must be >= 1");
        if (e.key == "alpha" && !(plan.alpha >= 0.0 && plan.alpha <= 1.0))
          fail(e.value.line, e.key, "must be in [0, 1]");
      }
    } else if (s.name == "env") {
      check_keys(s, true, false);
      env = &s;
    } else if (s.name == "train") {
      check_keys(s, false, true);
      train = &s;
    } else if (s.name.rfind("treatment.", 0) == 0 &&
               s.name.find('.', 10) == std::string::npos) {
      check_keys(s, true, true);
      treatments.push_back(&s);
    } else {
      fail(s.line, {}, "unknown section [" + s.name + "]");
    }
  }
  if (treatments.empty()) throw ConfigError("no [treatment.<label>] sections; at least one is required");
  for (const Section* s : treatments)
    plan.treatments.push_back(resolve(s->name.substr(10), env, train, s));
  return plan;
}

ExperimentPlan load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str());
}

std::string echo_config(const ExperimentPlan& plan) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << quote(plan.name) << "\n"
     << "run_count = " << plan.run_count << "\n"
     << "master_seed = " << plan.master_seed << "\n"
     << "output_dir = " << quote(plan.output_dir.generic_string()) << "\n"
     << "workers = " << plan.workers << "\n"
     << "alpha = " << toml_float(plan.alpha) << "\n";
  for (const Treatment& t : plan.treatments) {
    const EnvSpec& e = t.env;
    const TrainConfig& c = t.train;
    os << "\n[treatment." << t.label << "]\n"
       << "kind = " << quote(to_string(e.kind)) << "\n"
       << "room_width = " << e.room_width << "\n"
       << "room_height = " << e.room_height << "\n"
       << "room_count = " << e.room_count << "\n"
       << "lives = " << e.lives << "\n"
       << "max_episode_steps = " << e.max_episode_steps << "\n"
       << "hazard_density = " << toml_float(e.hazard_density) << "\n"
       << "oxygen_steps = " << e.oxygen_steps << "\n"
       << "layout_seed = " << c.layout_seed << "\n"
       << "reward_table.key = " << toml_float(e.reward_table.key) << "\n"
       << "reward_table.door = " << toml_float(e.reward_table.door) << "\n"
       << "reward_table.treasure = " << toml_float(e.reward_table.treasure) << "\n"
       << "reward_table.arm_token = " << toml_float(e.reward_table.arm_token) << "\n"
       << "reward_table.vault = " << toml_float(e.reward_table.vault) << "\n"
       << "reward_table.collectible = " << toml_float(e.reward_table.collectible) << "\n"
       << "actor_count = " << c.actor_count << "\n"
       << "n_step = " << c.n_step << "\n"
       << "gamma = " << toml_float(c.gamma) << "\n"
       << "value_loss_coefficient = " << toml_float(c.coefficients.value) << "\n"
       << "entropy_coefficient = " << toml_float(c.coefficients.entropy) << "\n"
       << "total_env_steps = " << c.total_env_steps << "\n"
       << "use_intrinsic = " << (c.use_intrinsic ? "true" : "false") << "\n"
       << "use_compass = " << (c.use_compass ? "true" : "false") << "\n"
       << "reset_policy = " << quote(to_string(c.reset_policy)) << "\n"
       << "mixer = "
       << quote(c.mixer.mode == RewardMixer::Mode::kWeighted ? "Weighted" : "UntunedClip") << "\n"
       << "beta = " << toml_float(c.mixer.beta) << "\n"
       << "baseline = " << quote(to_string(c.baseline)) << "\n"
       << "checkpoint_interval = " << c.checkpoint_interval << "\n"
       << "tile_size = " << c.tile_size << "\n"
       << "hidden = [";
    for (std::size_t i = 0; i < c.hidden.size(); ++i) os << (i ? ", " : "") << c.hidden[i];
    os << "]\n"
       << "learning_rate = " << toml_float(c.optimizer.learning_rate) << "\n"
       << "rms_decay = " << toml_float(c.optimizer.decay) << "\n"
       << "rms_epsilon = " << toml_float(c.optimizer.epsilon) << "\n"
       << "max_grad_norm = " << toml_float(c.optimizer.max_grad_norm) << "\n";
  }
  return os.str();
}

}  // namespace dcs
