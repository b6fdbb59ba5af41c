#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "dppn/data_io.hpp"
#include "dppn/genome.hpp"
#include "dppn/rng.hpp"
#include "dppn/variation.hpp"

namespace dppn::test {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return 1e9;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

// Valid genome grown from a minimal one by random topology ops, with fresh
// uniform weights and random transfers everywhere (output node included).
inline Genome random_genome(int input_dim, int output_dim, int max_nodes,
                            Rng& rng, bool allow_linear = true) {
  Genome g = new_minimal(input_dim, output_dim, rng,
                         allow_linear && rng.bernoulli(0.3));
  const int ops = rng.int_range(0, 8);
  for (int k = 0; k < ops; ++k) {
    switch (rng.index(3)) {
      case 0:
        if (static_cast<int>(g.nodes.size()) < max_nodes)
          g = mutate_add_node(g, rng);
        break;
      case 1: g = mutate_add_edge(g, rng); break;
      default: g = mutate_remove_edge(g, rng); break;
    }
  }
  for (auto& e : g.edges) e.weight = rng.uniform(-1.5, 1.5);
  for (auto& n : g.nodes) {
    if (n.kind != NodeKind::Input) n.transfer = random_transfer(rng);
    if (n.linear) {
      for (Eigen::Index i = 0; i < n.linear->weights.size(); ++i)
        n.linear->weights.data()[i] = rng.uniform(-0.8, 0.8);
      for (Eigen::Index i = 0; i < n.linear->bias.size(); ++i)
        n.linear->bias[i] = rng.uniform(-0.5, 0.5);
    }
  }
  return validated(g);
}

// Structured toy images (bright rectangles on black) that a tiny
// autoencoder can actually learn from, at any side length.
inline ImageDataset rect_dataset(int side, int n, std::uint64_t seed) {
  ImageDataset data;
  data.side = side;
  data.source = "rects";
  data.pixels.resize(static_cast<std::size_t>(n) * side * side, 0);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    std::uint8_t* img = data.pixels.data() +
                        static_cast<std::size_t>(i) * side * side;
    const int n_rects = rng.int_range(1, 2);
    for (int r = 0; r < n_rects; ++r) {
      const int x0 = rng.int_range(0, side - 2);
      const int y0 = rng.int_range(0, side - 2);
      const int x1 = std::min(side - 1, x0 + rng.int_range(1, side / 2));
      const int y1 = std::min(side - 1, y0 + rng.int_range(1, side / 2));
      const std::uint8_t value =
          static_cast<std::uint8_t>(rng.int_range(160, 255));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) img[y * side + x] = value;
    }
  }
  return data;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("dppn_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline bool same_weights(const Genome& a, const Genome& b) {
  const Eigen::VectorXd wa = weight_vector(a);
  const Eigen::VectorXd wb = weight_vector(b);
  return wa.size() == wb.size() && wa == wb;
}

}  // namespace dppn::test
