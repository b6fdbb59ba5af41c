#pragma once

#include "dppn/genome.hpp"
#include "dppn/rng.hpp"

namespace dppn {

// Initial-weight distribution shared by genome construction and all
// variation operators that introduce new weights.
double random_weight(Rng& rng);
Transfer random_transfer(Rng& rng);

// Input, output, and two random hidden nodes wired input->hidden->output.
// With linear_input the input node carries a trainable square linear layer
// (initialized to the identity map).
Genome new_minimal(int input_dim, int output_dim, Rng& rng,
                   bool linear_input = false);

// Hidden nodes in a fixed order with every ordered pair connected: the
// upper-right triangle of the (input, hidden..., output) connection matrix,
// input->output edge included.
Genome new_fully_connected(int input_dim, int output_dim, int n_hidden,
                           Rng& rng, bool linear_input = false);

// A fresh hidden node with random transfer wired between a random upstream
// node (non-output) and a random strictly-downstream node (non-input).
Genome mutate_add_node(const Genome& g, Rng& rng);

// One new edge between an unconnected ordered pair respecting topological
// order; unchanged if the graph is saturated.
Genome mutate_add_edge(const Genome& g, Rng& rng);

// One uniformly random edge removed (orphaned hidden nodes pruned);
// unchanged if the genome has fewer than two edges.
Genome mutate_remove_edge(const Genome& g, Rng& rng);

// w <- w + coefficient * standard Cauchy sample, for every trainable
// parameter including input linear-layer entries.
Genome mutate_weights_cauchy(const Genome& g, double coefficient, Rng& rng);

// Merge: all hidden units of both parents keep their internal edges and
// weights; parent B's input/output nodes are discarded; A's input node is
// connected to every B hidden unit and every B hidden unit to A's output,
// all with random weights.  Throws ValidationError on dimension mismatch.
Genome crossover_merge(const Genome& parent_a, const Genome& parent_b,
                       Rng& rng);

}  // namespace dppn
