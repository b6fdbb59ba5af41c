#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dppn/genome.hpp"

namespace dppn {

struct ImageDataset {
  int side = 28;
  std::vector<std::uint8_t> pixels;  // N * side * side, row-major per image
  std::string source;
  int count() const {
    return side == 0 ? 0 : static_cast<int>(pixels.size()) / (side * side);
  }
};

// Rows `first .. first+count-1` as a count x side^2 matrix normalized to
// [0, 1] (raw bytes / 255).
Eigen::MatrixXd dataset_rows(const ImageDataset& data, int first, int count);
Eigen::MatrixXd dataset_rows(const ImageDataset& data,
                             const std::vector<int>& indices);

// IDX image files (big-endian magic 0x00000803).  Images other than
// 28x28 are rejected unless resize_to_28 is set, in which case they are
// area-average resampled.
ImageDataset load_idx(const std::string& path, bool resize_to_28 = false);
void write_idx(const ImageDataset& data, const std::string& path);

// Directory of grayscale PGM images (P5 or P2), each area-average resampled
// to 28x28, flipped if needed so ink is high, then binarized at 0.5.
ImageDataset load_image_dir(const std::string& path);

// Binary PGM (P5), maxval 255.  Pixel values are clamped to [0, 255].
void write_pgm(const Eigen::MatrixXd& image, const std::string& path);

// Tiles same-sized images left-to-right, top-to-bottom.
void write_grid_pgm(const std::vector<Eigen::MatrixXd>& images, int cols,
                    const std::string& path);

// Plain-text genome format, versioned header "DPPN1"; one edge per line,
// weights at full decimal precision so load(save(g)) is bit-exact.  Loaded
// genomes are validated.
void save_genome(const Genome& g, const std::string& path);
Genome load_genome(const std::string& path);

struct MetricsRow {
  int tournament = 0;
  int winner_slot = 0;
  int loser_slot = 0;
  double winner_fitness = 0.0;
  double loser_fitness = 0.0;
  double best_fitness = 0.0;  // best evaluation seen so far in the run
  int best_param_count = 0;
  // In-memory only: wall time is excluded from the CSV so that reruns with
  // the same seed serialize bit-identically.
  double wall_ms = 0.0;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
};

void write_metrics_csv(const RunMetrics& metrics, const std::string& path);
RunMetrics parse_metrics_csv(const std::string& path);

// %.17g formatting shared by every writer that must round-trip doubles.
std::string format_double(double v);

}  // namespace dppn
