#pragma once

#include <cstdint>
#include <string>

#include "dppn/evolution.hpp"

namespace dppn {

// Everything a run needs, loadable from key=value text and echoed back in a
// form that parses to the same config.  Precedence is applied by the caller:
// defaults, then profile, then config file, then explicit flags.
struct RunConfig {
  std::string task = "recon";        // recon | conv | fc
  std::string mode = "lamarckian";   // lamarckian | baldwinian | darwinian
  std::string profile = "paper";     // paper | demo
  std::string loss = "mse";          // mse | bce
  int pop = 50;
  int tournaments = 1000;
  int steps = 1000;
  int minibatch = 32;
  double crossover_prob = 0.2;
  double cauchy = 0.0001;
  double noise = 0.1;
  double lr = 0.001;
  double bloat = 0.0;
  int workers = 1;
  std::uint64_t seed = 1;
  std::string mnist_dir;
  std::string omniglot_dir;
  std::string out = "runs/latest";
  int fitness_images = 1000;
  int recon_index = 0;     // dataset image reconstructed by the recon task
  int baseline_hidden = 0; // > 0 trains the direct baseline instead
  bool synthetic = false;  // skip dataset discovery, use generated digits
  bool memoize = false;
  bool carry_adam = false;
  int init_hidden = 0;     // 0 = minimal initial genomes
  bool linear_input = false;
  int grid_every = 10;     // reconstruction progress-grid cadence
  int train_limit = 0;     // cap on training images, 0 = all
};

// Sets the fields a profile pins (population, tournaments, steps, batch and
// sample sizes).  "paper" restores full-scale values, "demo" is desk scale.
void apply_profile(RunConfig& cfg, std::string_view profile);

// key=value lines; '#' starts a comment; blank lines ignored.  Unknown keys
// and malformed values raise ConfigError naming the offender.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::string& path);

// Full dump; apply_config_text(defaults, config_echo(cfg)) == cfg.
std::string config_echo(const RunConfig& cfg);

EvoConfig evo_config_from(const RunConfig& cfg);

}  // namespace dppn
