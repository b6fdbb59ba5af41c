#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dppn/adam.hpp"
#include "dppn/data_io.hpp"
#include "dppn/genome.hpp"
#include "dppn/rng.hpp"
#include "dppn/substrate.hpp"

namespace dppn {

enum class TaskVariant { ImageRecon, ConvDenoise, FcDenoise };

const char* task_name(TaskVariant v);
TaskVariant task_from_name(std::string_view name);

struct Task {
  TaskVariant variant = TaskVariant::ImageRecon;
  LossKind loss = LossKind::Mse;
  int learn_steps = 1000;
  int minibatch = 32;
  int fitness_images = 1000;  // held evaluation sample for denoise fitness
  double noise_fraction = 0.1;
  double lr = 0.001;  // Adam step size for the DPPN weights

  // image_reconstruction
  Eigen::VectorXd target_image;  // side^2 values in [0, 1]
  int image_side = 28;

  // denoise variants: shared read-only data, a per-run fixed fitness sample,
  // and a per-run noise seed so competing fitness values are comparable
  const ImageDataset* train = nullptr;
  const ImageDataset* test = nullptr;
  std::vector<int> fitness_indices;
  std::uint64_t fitness_noise_seed = 0;

  // substrate geometry (defaults are paper scale; tests shrink them)
  int vis_side = 28;
  int hid_side = 10;
  int conv_kernel = 7;
  int conv_stride = 2;
  int conv_pad = 3;
  int conv_channels = 2;

  // DPPN dimensions the task expects
  int dppn_input_dim() const;
  int dppn_output_dim() const;
};

Task make_recon_task(const Eigen::VectorXd& image, int side);

// Draws the fixed fitness sample and the run's fitness-noise seed from rng.
Task make_conv_task(const ImageDataset& train, const ImageDataset& test,
                    Rng& rng, int fitness_images = 1000);
Task make_fc_task(const ImageDataset& train, const ImageDataset& test,
                  Rng& rng, int fitness_images = 1000);

// 784 rows of (x, y, sqrt(x^2+y^2), 1, x/N, y/N, (px mod N)/N, (py mod N)/N):
// x, y on [-1, 1]; the modular pair is computed on integer pixel indices and
// then divided by N to lie in [0, 1).  Targets are the pixel values.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> image_recon_batch(
    const Eigen::VectorXd& image, int side, int n_mod);

// Sets round(fraction * pixels) distinct uniformly chosen pixels per image
// to zero.
Eigen::MatrixXd inject_dropout_noise(const Eigen::MatrixXd& batch,
                                     double fraction, Rng& rng);

struct FitnessReport {
  double fitness = -std::numeric_limits<double>::infinity();
  Genome trained;       // post-learning weights
  Genome pre_learning;  // weights as inherited
  std::vector<double> learn_curve;  // per-step training loss
  int params = 0;
  int n_nodes = 0;
  int n_edges = 0;
  AdamState adam;  // final optimizer state (for optional carry-over)
};

// Algorithm-style evaluation: learn_steps rounds of forward -> parameter
// copy -> minibatch loss -> chained gradients -> Adam, then fitness =
// -(loss on the held evaluation set), or on the whole image for
// reconstruction.  A non-finite evaluation yields fitness = -inf.
FitnessReport get_fitness(const Genome& d, const Task& task, Rng& rng,
                          const AdamState* init_adam = nullptr);

// Loss without learning on the given (normalized, clean) images; dropout
// noise is drawn from a fixed internal seed so repeated calls agree.
double evaluate_loss(const Genome& d, const Task& task,
                     const Eigen::MatrixXd& images);

// DPPN output on the task's coordinate batch, reshaped as an image
// (reconstruction task only) — used for progress grids.
Eigen::MatrixXd recon_image(const Genome& d, const Task& task);

// Noisy inputs and substrate reconstructions for the given clean images,
// with the same fixed noise draw as evaluate_loss.  Denoise tasks only.
struct DenoisePreview {
  Eigen::MatrixXd noisy;
  Eigen::MatrixXd recon;
};
DenoisePreview denoise_preview(const Genome& d, const Task& task,
                               const Eigen::MatrixXd& images);

// Conventional direct training of the fully connected autoencoder (Xavier
// init, Adam on the raw parameters) — the comparison baseline.  test_loss
// uses the same fixed noise draw as evaluate_loss.
struct DirectResult {
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  int params = 0;
  std::vector<double> curve;
  FCAutoencoder net;
};
DirectResult train_direct_fc(const ImageDataset& train,
                             const ImageDataset& test, int hid_side,
                             int steps, int minibatch, double noise_fraction,
                             LossKind loss, double lr, std::uint64_t seed);

}  // namespace dppn
