#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dppn/data_io.hpp"
#include "dppn/genome.hpp"
#include "dppn/rng.hpp"
#include "dppn/task.hpp"

namespace dppn {

enum class InheritanceMode { Lamarckian, Baldwinian, Darwinian };

const char* inheritance_name(InheritanceMode m);
InheritanceMode inheritance_from_name(std::string_view name);

struct EvoConfig {
  int population_size = 50;
  int tournaments = 1000;
  double crossover_prob = 0.2;
  double p_add_node = 0.3;
  double p_add_edge = 0.5;
  double p_remove_edge = 0.5;
  double cauchy_coeff = 0.0001;
  InheritanceMode inheritance = InheritanceMode::Lamarckian;
  double bloat_coeff = 0.0;       // selection penalty per node + edge
  double n_mod_mut_prob = 0.1;    // chance to nudge n_mod by +-1
  bool memoize_fitness = false;   // reuse a slot's report until replaced
  bool carry_adam = false;        // inherit resized optimizer moments
  int init_hidden = 0;            // 0 = minimal genomes, else fully connected
  bool linear_input = false;
};

struct Population {
  std::vector<Genome> members;
  std::vector<std::optional<FitnessReport>> reports;
  std::vector<std::optional<AdamState>> inherited_adam;
  int size() const { return static_cast<int>(members.size()); }
};

Population init_population(const EvoConfig& cfg, const Task& task, Rng& rng);

// Tournament replacement: add-node, add-edge, remove-edge coins in that
// order, then the Cauchy weight perturbation, then the n_mod nudge
// (clamped to [2, 28]).
Genome mutate_offspring(const Genome& g, const EvoConfig& cfg, Rng& rng);

// Selection score; the raw fitness is what gets reported.
double fitness_with_bloat(const FitnessReport& rep, double coeff);

struct RunResult {
  FitnessReport best;
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  RunMetrics history;
  double wall_seconds = 0.0;
};

// Called after every tournament with the 1-based tournament index, the
// population, and the best report so far.
using TournamentObserver =
    std::function<void(int, const Population&, const FitnessReport&)>;

// Serial microbial run: each tournament evaluates two distinct random slots,
// keeps the winner untouched, and overwrites the loser with
// Mutate(Crossover(winner, loser)) (crossover with probability
// crossover_prob).  Deterministic for a fixed config and seed.
RunResult run_evolution(const EvoConfig& cfg, const Task& task,
                        std::uint64_t seed,
                        const TournamentObserver& observer = {});

// Asynchronous variant: workers evaluate slots concurrently and completed
// evaluations are paired into tournaments as they arrive; results for slots
// replaced mid-flight are discarded.  n_workers <= 1 falls back to the
// serial run.  Thread scheduling makes multi-worker runs nondeterministic.
RunResult run_async(const EvoConfig& cfg, const Task& task, int n_workers,
                    std::uint64_t seed,
                    const TournamentObserver& observer = {});

}  // namespace dppn
