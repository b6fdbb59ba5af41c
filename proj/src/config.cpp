#include "dppn/config.hpp"

#include <cerrno>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "dppn/error.hpp"

namespace dppn {

namespace {

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

int to_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long parsed = std::strtol(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0' ||
      parsed < INT_MIN || parsed > INT_MAX)
    throw ConfigError("config key '" + key + "': invalid integer '" + v + "'");
  return static_cast<int>(parsed);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0' || v.find('-') == 0)
    throw ConfigError("config key '" + key + "': invalid integer '" + v + "'");
  return parsed;
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double parsed = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': invalid number '" + v + "'");
  return parsed;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': invalid boolean '" + v + "'");
}

std::string from_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

#define STRING_FIELD(name, member)                                  \
  Field{name, [](RunConfig& c, const std::string& v) { c.member = v; }, \
        [](const RunConfig& c) { return c.member; }}
#define INT_FIELD(name, member)                                       \
  Field{name,                                                         \
        [](RunConfig& c, const std::string& v) {                      \
          c.member = to_int(name, v);                                 \
        },                                                            \
        [](const RunConfig& c) { return std::to_string(c.member); }}
#define DOUBLE_FIELD(name, member)                                    \
  Field{name,                                                         \
        [](RunConfig& c, const std::string& v) {                      \
          c.member = to_double(name, v);                              \
        },                                                            \
        [](const RunConfig& c) { return from_double(c.member); }}
#define BOOL_FIELD(name, member)                                      \
  Field{name,                                                         \
        [](RunConfig& c, const std::string& v) {                      \
          c.member = to_bool(name, v);                                \
        },                                                            \
        [](const RunConfig& c) {                                      \
          return std::string(c.member ? "true" : "false");            \
        }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      STRING_FIELD("task", task),
      STRING_FIELD("mode", mode),
      STRING_FIELD("profile", profile),
      STRING_FIELD("loss", loss),
      INT_FIELD("pop", pop),
      INT_FIELD("tournaments", tournaments),
      INT_FIELD("steps", steps),
      INT_FIELD("minibatch", minibatch),
      DOUBLE_FIELD("crossover-prob", crossover_prob),
      DOUBLE_FIELD("cauchy", cauchy),
      DOUBLE_FIELD("noise", noise),
      DOUBLE_FIELD("lr", lr),
      DOUBLE_FIELD("bloat", bloat),
      INT_FIELD("workers", workers),
      Field{"seed",
            [](RunConfig& c, const std::string& v) {
              c.seed = to_u64("seed", v);
            },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      STRING_FIELD("mnist-dir", mnist_dir),
      STRING_FIELD("omniglot-dir", omniglot_dir),
      STRING_FIELD("out", out),
      INT_FIELD("fitness-images", fitness_images),
      INT_FIELD("recon-index", recon_index),
      INT_FIELD("baseline-hidden", baseline_hidden),
      BOOL_FIELD("synthetic", synthetic),
      BOOL_FIELD("memoize", memoize),
      BOOL_FIELD("carry-adam", carry_adam),
      INT_FIELD("init-hidden", init_hidden),
      BOOL_FIELD("linear-input", linear_input),
      INT_FIELD("grid-every", grid_every),
      INT_FIELD("train-limit", train_limit),
  };
  return table;
}

#undef STRING_FIELD
#undef INT_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD

std::string trimmed(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void apply_profile(RunConfig& cfg, std::string_view profile) {
  if (profile == "paper") {
    cfg.pop = 50;
    cfg.tournaments = 1000;
    cfg.steps = 1000;
    cfg.minibatch = 32;
    cfg.fitness_images = 1000;
    cfg.train_limit = 0;
  } else if (profile == "demo") {
    cfg.pop = 8;
    cfg.tournaments = 50;
    cfg.steps = 60;
    cfg.minibatch = 16;
    cfg.fitness_images = 200;
    cfg.train_limit = 2000;
  } else {
    throw ConfigError("unknown profile: " + std::string(profile));
  }
  cfg.profile = std::string(profile);
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string entry = trimmed(line);
    if (entry.empty()) continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value, got '" + entry + "'");
    const std::string key = trimmed(entry.substr(0, eq));
    const std::string value = trimmed(entry.substr(eq + 1));
    bool known = false;
    for (const Field& f : fields()) {
      if (key == f.key) {
        f.set(cfg, value);
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

std::string config_echo(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

EvoConfig evo_config_from(const RunConfig& cfg) {
  EvoConfig evo;
  evo.population_size = cfg.pop;
  evo.tournaments = cfg.tournaments;
  evo.crossover_prob = cfg.crossover_prob;
  evo.cauchy_coeff = cfg.cauchy;
  evo.inheritance = inheritance_from_name(cfg.mode);
  evo.bloat_coeff = cfg.bloat;
  evo.memoize_fitness = cfg.memoize;
  evo.carry_adam = cfg.carry_adam;
  evo.init_hidden = cfg.init_hidden;
  evo.linear_input = cfg.linear_input;
  return evo;
}

}  // namespace dppn
