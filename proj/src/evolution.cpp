#include "dppn/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "dppn/error.hpp"
#include "dppn/variation.hpp"

namespace dppn {

const char* inheritance_name(InheritanceMode m) {
  switch (m) {
    case InheritanceMode::Lamarckian: return "lamarckian";
    case InheritanceMode::Baldwinian: return "baldwinian";
    case InheritanceMode::Darwinian: return "darwinian";
  }
  throw ValidationError("unknown inheritance mode");
}

InheritanceMode inheritance_from_name(std::string_view name) {
  if (name == "lamarckian") return InheritanceMode::Lamarckian;
  if (name == "baldwinian") return InheritanceMode::Baldwinian;
  if (name == "darwinian") return InheritanceMode::Darwinian;
  throw ConfigError("unknown inheritance mode: " + std::string(name));
}

namespace {

void check_config(const EvoConfig& cfg) {
  if (cfg.population_size < 2)
    throw ValidationError("population size must be at least 2");
  if (cfg.tournaments < 0)
    throw ValidationError("tournament count must be non-negative");
  for (const double p : {cfg.crossover_prob, cfg.p_add_node, cfg.p_add_edge,
                         cfg.p_remove_edge, cfg.n_mod_mut_prob})
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError("probabilities must lie in [0, 1]");
}

}  // namespace

Population init_population(const EvoConfig& cfg, const Task& task, Rng& rng) {
  check_config(cfg);
  const int in = task.dppn_input_dim();
  const int out = task.dppn_output_dim();
  Population pop;
  pop.members.reserve(cfg.population_size);
  for (int i = 0; i < cfg.population_size; ++i)
    pop.members.push_back(
        cfg.init_hidden > 0
            ? new_fully_connected(in, out, cfg.init_hidden, rng,
                                  cfg.linear_input)
            : new_minimal(in, out, rng, cfg.linear_input));
  pop.reports.resize(cfg.population_size);
  pop.inherited_adam.resize(cfg.population_size);
  return pop;
}

Genome mutate_offspring(const Genome& g, const EvoConfig& cfg, Rng& rng) {
  Genome out = g;
  if (rng.bernoulli(cfg.p_add_node)) out = mutate_add_node(out, rng);
  if (rng.bernoulli(cfg.p_add_edge)) out = mutate_add_edge(out, rng);
  if (rng.bernoulli(cfg.p_remove_edge)) out = mutate_remove_edge(out, rng);
  out = mutate_weights_cauchy(out, cfg.cauchy_coeff, rng);
  if (rng.bernoulli(cfg.n_mod_mut_prob)) {
    const int delta = rng.bernoulli(0.5) ? 1 : -1;
    out.n_mod = std::clamp(out.n_mod + delta, 2, 28);
  }
  return out;
}

double fitness_with_bloat(const FitnessReport& rep, double coeff) {
  return rep.fitness - coeff * (rep.n_nodes + rep.n_edges);
}

namespace {

const Genome& inherited_genome(const FitnessReport& rep, InheritanceMode m) {
  return m == InheritanceMode::Lamarckian ? rep.trained : rep.pre_learning;
}

FitnessReport evaluate_member(const Genome& g, const EvoConfig& cfg,
                              const Task& task, Rng& eval_rng,
                              const AdamState* carried) {
  if (cfg.inheritance == InheritanceMode::Darwinian) {
    Task t = task;
    t.learn_steps = 0;
    return get_fitness(g, t, eval_rng, carried);
  }
  return get_fitness(g, task, eval_rng, carried);
}

// Offspring replacing the loser slot, plus the optimizer state it inherits.
struct Replacement {
  Genome genome;
  std::optional<AdamState> adam;
};

Replacement make_offspring(const FitnessReport& winner,
                           const FitnessReport& loser, const EvoConfig& cfg,
                           Rng& rng) {
  const Genome& winner_src = inherited_genome(winner, cfg.inheritance);
  Genome child = rng.bernoulli(cfg.crossover_prob)
                     ? crossover_merge(winner_src,
                                       inherited_genome(loser, cfg.inheritance),
                                       rng)
                     : winner_src;
  child = mutate_offspring(child, cfg, rng);
  Replacement rep{std::move(child), std::nullopt};
  if (cfg.carry_adam)
    rep.adam = adam_resize(winner.adam,
                           param_index_map(winner_src, rep.genome));
  return rep;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

struct BestTracker {
  std::optional<FitnessReport> best;

  void offer(const FitnessReport& rep) {
    if (!best || rep.fitness > best->fitness) best = rep;
  }
};

double final_test_loss(const FitnessReport& best, const Task& task) {
  if (task.variant == TaskVariant::ImageRecon)
    return evaluate_loss(best.trained, task, Eigen::MatrixXd());
  if (!task.test || task.test->count() == 0)
    return std::numeric_limits<double>::quiet_NaN();
  const int n = std::min(1000, task.test->count());
  return evaluate_loss(best.trained, task, dataset_rows(*task.test, 0, n));
}

}  // namespace

RunResult run_evolution(const EvoConfig& cfg, const Task& task,
                        std::uint64_t seed,
                        const TournamentObserver& observer) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  Population pop = init_population(cfg, task, rng);
  BestTracker best;
  RunMetrics history;
  history.rows.reserve(cfg.tournaments);

  auto evaluate_slot = [&](int s) -> const FitnessReport& {
    if (!(cfg.memoize_fitness && pop.reports[s])) {
      Rng eval_rng(rng.raw());
      const AdamState* carried =
          pop.inherited_adam[s] ? &*pop.inherited_adam[s] : nullptr;
      pop.reports[s] =
          evaluate_member(pop.members[s], cfg, task, eval_rng, carried);
      best.offer(*pop.reports[s]);
    }
    return *pop.reports[s];
  };

  for (int t = 1; t <= cfg.tournaments; ++t) {
    const int i = static_cast<int>(rng.index(pop.size()));
    int j = static_cast<int>(rng.index(pop.size() - 1));
    if (j >= i) ++j;
    const FitnessReport& rep_i = evaluate_slot(i);
    const FitnessReport& rep_j = evaluate_slot(j);
    const bool i_wins = fitness_with_bloat(rep_i, cfg.bloat_coeff) >=
                        fitness_with_bloat(rep_j, cfg.bloat_coeff);
    const int winner = i_wins ? i : j;
    const int loser = i_wins ? j : i;
    const FitnessReport& win_rep = i_wins ? rep_i : rep_j;
    const FitnessReport& lose_rep = i_wins ? rep_j : rep_i;

    MetricsRow row;
    row.tournament = t;
    row.winner_slot = winner;
    row.loser_slot = loser;
    row.winner_fitness = win_rep.fitness;
    row.loser_fitness = lose_rep.fitness;
    row.best_fitness = best.best->fitness;
    row.best_param_count = best.best->params;
    row.wall_ms = elapsed_ms(t0);

    Replacement repl = make_offspring(win_rep, lose_rep, cfg, rng);
    pop.members[loser] = std::move(repl.genome);
    pop.reports[loser].reset();
    pop.inherited_adam[loser] = std::move(repl.adam);

    history.rows.push_back(row);
    if (observer) observer(t, pop, *best.best);
  }

  if (cfg.tournaments == 0)
    for (int s = 0; s < pop.size(); ++s) evaluate_slot(s);

  RunResult result;
  result.best = *best.best;
  result.test_loss = final_test_loss(result.best, task);
  result.history = std::move(history);
  result.wall_seconds = elapsed_ms(t0) / 1000.0;
  return result;
}

namespace {

// Shared state for the asynchronous run.  Slot stamps detect evaluations
// that raced with a replacement; such results are discarded.
struct AsyncState {
  std::mutex mu;
  Population pop;
  std::vector<std::uint64_t> stamps;
  std::vector<bool> in_flight;
  std::deque<int> ready;  // slots whose evaluation completed, in order
  Rng rng;
  BestTracker best;
  RunMetrics history;
  int tournaments_done = 0;
  std::exception_ptr failure;

  AsyncState(std::uint64_t seed) : rng(seed) {}
};

}  // namespace

RunResult run_async(const EvoConfig& cfg, const Task& task, int n_workers,
                    std::uint64_t seed, const TournamentObserver& observer) {
  if (n_workers < 1) throw ValidationError("worker count must be positive");
  if (n_workers == 1 || cfg.tournaments == 0)
    return run_evolution(cfg, task, seed, observer);

  const auto t0 = std::chrono::steady_clock::now();
  AsyncState st(seed);
  st.pop = init_population(cfg, task, st.rng);
  st.stamps.assign(st.pop.size(), 0);
  st.in_flight.assign(st.pop.size(), false);

  auto worker = [&]() {
    for (;;) {
      int slot = -1;
      std::uint64_t stamp = 0;
      Genome genome;
      std::uint64_t eval_seed = 0;
      std::optional<AdamState> carried;
      {
        std::lock_guard<std::mutex> lock(st.mu);
        if (st.failure || st.tournaments_done >= cfg.tournaments) return;
        std::vector<int> idle;
        for (int s = 0; s < st.pop.size(); ++s)
          if (!st.in_flight[s]) idle.push_back(s);
        if (!idle.empty()) {
          slot = idle[st.rng.index(idle.size())];
          st.in_flight[slot] = true;
          stamp = st.stamps[slot];
          genome = st.pop.members[slot];
          eval_seed = st.rng.raw();
          carried = st.pop.inherited_adam[slot];
        }
      }
      if (slot < 0) {
        std::this_thread::yield();
        continue;
      }

      std::optional<FitnessReport> report;
      try {
        Rng eval_rng(eval_seed);
        report = evaluate_member(genome, cfg, task, eval_rng,
                                 carried ? &*carried : nullptr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(st.mu);
        st.in_flight[slot] = false;
        if (!st.failure) st.failure = std::current_exception();
        return;
      }

      std::lock_guard<std::mutex> lock(st.mu);
      st.in_flight[slot] = false;
      if (st.failure) return;
      if (st.stamps[slot] != stamp) continue;  // replaced mid-flight
      st.pop.reports[slot] = std::move(report);
      st.best.offer(*st.pop.reports[slot]);
      st.ready.push_back(slot);

      // Pair completed evaluations into tournaments as they arrive.
      for (;;) {
        if (st.tournaments_done >= cfg.tournaments) break;
        // Drop entries whose slot was replaced after completing.
        std::erase_if(st.ready,
                      [&](int s) { return !st.pop.reports[s].has_value(); });
        if (st.ready.size() < 2) break;
        const int a = st.ready.front();
        std::size_t k = 1;
        while (k < st.ready.size() && st.ready[k] == a) ++k;
        if (k == st.ready.size()) {
          st.ready.resize(1);  // only duplicates of one slot are waiting
          break;
        }
        const int b = st.ready[k];
        st.ready.erase(st.ready.begin() + static_cast<long>(k));
        st.ready.pop_front();
        const FitnessReport rep_a = *st.pop.reports[a];
        const FitnessReport rep_b = *st.pop.reports[b];
        const bool a_wins = fitness_with_bloat(rep_a, cfg.bloat_coeff) >=
                            fitness_with_bloat(rep_b, cfg.bloat_coeff);
        const int winner = a_wins ? a : b;
        const int loser = a_wins ? b : a;
        const FitnessReport& win_rep = a_wins ? rep_a : rep_b;
        const FitnessReport& lose_rep = a_wins ? rep_b : rep_a;

        const int t = ++st.tournaments_done;
        MetricsRow row;
        row.tournament = t;
        row.winner_slot = winner;
        row.loser_slot = loser;
        row.winner_fitness = win_rep.fitness;
        row.loser_fitness = lose_rep.fitness;
        row.best_fitness = st.best.best->fitness;
        row.best_param_count = st.best.best->params;
        row.wall_ms = elapsed_ms(t0);

        Replacement repl = make_offspring(win_rep, lose_rep, cfg, st.rng);
        st.pop.members[loser] = std::move(repl.genome);
        st.pop.reports[loser].reset();
        st.pop.inherited_adam[loser] = std::move(repl.adam);
        ++st.stamps[loser];

        st.history.rows.push_back(row);
        if (observer) observer(t, st.pop, *st.best.best);
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (st.failure) std::rethrow_exception(st.failure);

  RunResult result;
  result.best = *st.best.best;
  result.test_loss = final_test_loss(result.best, task);
  result.history = std::move(st.history);
  result.wall_seconds = elapsed_ms(t0) / 1000.0;
  return result;
}

}  // namespace dppn
