#include "dppn/task.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>

#include "dppn/engine.hpp"
#include "dppn/error.hpp"

namespace dppn {

namespace {

constexpr std::uint64_t kEvalNoiseSeed = 0x7a5e9d0c2b18f3a6ULL;

}  // namespace

const char* task_name(TaskVariant v) {
  switch (v) {
    case TaskVariant::ImageRecon: return "recon";
    case TaskVariant::ConvDenoise: return "conv";
    case TaskVariant::FcDenoise: return "fc";
  }
  throw ValidationError("unknown task variant");
}

TaskVariant task_from_name(std::string_view name) {
  if (name == "recon") return TaskVariant::ImageRecon;
  if (name == "conv") return TaskVariant::ConvDenoise;
  if (name == "fc") return TaskVariant::FcDenoise;
  throw ConfigError("unknown task name: " + std::string(name));
}

int Task::dppn_input_dim() const {
  switch (variant) {
    case TaskVariant::ImageRecon: return 8;
    case TaskVariant::ConvDenoise: return 4;
    case TaskVariant::FcDenoise: return 8;
  }
  throw ValidationError("unknown task variant");
}

int Task::dppn_output_dim() const {
  switch (variant) {
    case TaskVariant::ImageRecon: return 1;
    case TaskVariant::ConvDenoise: return 2 * conv_channels + 2;
    case TaskVariant::FcDenoise: return 2;
  }
  throw ValidationError("unknown task variant");
}

Task make_recon_task(const Eigen::VectorXd& image, int side) {
  if (side < 1 || image.size() != static_cast<Eigen::Index>(side) * side)
    throw ValidationError("reconstruction image does not match its side");
  Task t;
  t.variant = TaskVariant::ImageRecon;
  t.target_image = image;
  t.image_side = side;
  return t;
}

namespace {

// Distinct uniform sample of k indices from [0, n) by partial Fisher-Yates.
std::vector<int> sample_indices(int n, int k, Rng& rng) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  k = std::min(k, n);
  for (int i = 0; i < k; ++i)
    std::swap(pool[i], pool[i + static_cast<int>(rng.index(n - i))]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Task make_denoise_task(TaskVariant variant, const ImageDataset& train,
                       const ImageDataset& test, Rng& rng,
                       int fitness_images) {
  if (train.count() == 0) throw ValidationError("empty training dataset");
  if (fitness_images < 1)
    throw ValidationError("fitness_images must be positive");
  Task t;
  t.variant = variant;
  t.train = &train;
  t.test = &test;
  t.vis_side = train.side;
  t.fitness_images = fitness_images;
  t.fitness_indices = sample_indices(train.count(), t.fitness_images, rng);
  t.fitness_noise_seed = rng.raw();
  return t;
}

}  // namespace

Task make_conv_task(const ImageDataset& train, const ImageDataset& test,
                    Rng& rng, int fitness_images) {
  return make_denoise_task(TaskVariant::ConvDenoise, train, test, rng,
                           fitness_images);
}

Task make_fc_task(const ImageDataset& train, const ImageDataset& test,
                  Rng& rng, int fitness_images) {
  return make_denoise_task(TaskVariant::FcDenoise, train, test, rng,
                           fitness_images);
}

namespace {

double centered_coord(int i, int side) {
  return side > 1 ? -1.0 + 2.0 * i / (side - 1) : 0.0;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::VectorXd> image_recon_batch(
    const Eigen::VectorXd& image, int side, int n_mod) {
  if (image.size() != static_cast<Eigen::Index>(side) * side)
    throw ValidationError("reconstruction image does not match its side");
  if (n_mod < 1) throw ValidationError("n_mod must be positive");
  Eigen::MatrixXd coords(side * side, 8);
  for (int py = 0; py < side; ++py) {
    for (int px = 0; px < side; ++px) {
      const int row = py * side + px;
      const double x = centered_coord(px, side);
      const double y = centered_coord(py, side);
      coords(row, 0) = x;
      coords(row, 1) = y;
      coords(row, 2) = std::sqrt(x * x + y * y);
      coords(row, 3) = 1.0;
      coords(row, 4) = x / n_mod;
      coords(row, 5) = y / n_mod;
      coords(row, 6) = static_cast<double>(px % n_mod) / n_mod;
      coords(row, 7) = static_cast<double>(py % n_mod) / n_mod;
    }
  }
  return {std::move(coords), image};
}

Eigen::MatrixXd inject_dropout_noise(const Eigen::MatrixXd& batch,
                                     double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ValidationError("noise fraction must lie in [0, 1]");
  Eigen::MatrixXd noisy = batch;
  const int pixels = static_cast<int>(batch.cols());
  const int drop = static_cast<int>(std::llround(fraction * pixels));
  if (drop == 0) return noisy;
  std::vector<int> pool(pixels);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < drop; ++i) {
      std::swap(pool[i], pool[i + static_cast<int>(rng.index(pixels - i))]);
      noisy(r, pool[i]) = 0.0;
    }
  }
  return noisy;
}

namespace {

// One substrate pass: install params, run on noisy, return loss against
// clean; when p_grad is set, also the loss gradient in parameter space.
using SubstratePass =
    std::function<double(const Eigen::MatrixXd& clean,
                         const Eigen::MatrixXd& noisy,
                         const Eigen::VectorXd& params,
                         Eigen::VectorXd* p_grad)>;

struct DenoiseContext {
  ParamLayout layout;
  SubstratePass pass;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd& noisy,
                                const Eigen::VectorXd& params)>
      run;
};

DenoiseContext make_context(const Task& task) {
  DenoiseContext ctx;
  if (task.variant == TaskVariant::FcDenoise) {
    ctx.layout = fc_layout(task.vis_side, task.hid_side);
    auto net = std::make_shared<FCAutoencoder>(
        fc_autoencoder(task.vis_side, task.hid_side));
    const LossKind loss = task.loss;
    ctx.pass = [net, loss](const Eigen::MatrixXd& clean,
                           const Eigen::MatrixXd& noisy,
                           const Eigen::VectorXd& params,
                           Eigen::VectorXd* p_grad) {
      fc_set_params(*net, params);
      auto [recon, tape] = fc_forward(*net, noisy);
      const double value = loss_value(loss, clean, recon);
      if (p_grad)
        *p_grad = fc_param_grad(*net, tape, loss_grad(loss, clean, recon));
      return value;
    };
    ctx.run = [net](const Eigen::MatrixXd& noisy,
                    const Eigen::VectorXd& params) {
      fc_set_params(*net, params);
      return fc_forward(*net, noisy).first;
    };
  } else {
    ctx.layout = conv_layout(task.conv_kernel, task.conv_channels);
    auto net = std::make_shared<ConvAutoencoder>(
        conv_autoencoder(task.vis_side, task.conv_kernel, task.conv_stride,
                         task.conv_pad, task.conv_channels));
    const LossKind loss = task.loss;
    ctx.pass = [net, loss](const Eigen::MatrixXd& clean,
                           const Eigen::MatrixXd& noisy,
                           const Eigen::VectorXd& params,
                           Eigen::VectorXd* p_grad) {
      conv_set_params(*net, params);
      auto [recon, tape] = conv_forward(*net, noisy);
      const double value = loss_value(loss, clean, recon);
      if (p_grad)
        *p_grad = conv_param_grad(*net, tape, loss_grad(loss, clean, recon));
      return value;
    };
    ctx.run = [net](const Eigen::MatrixXd& noisy,
                    const Eigen::VectorXd& params) {
      conv_set_params(*net, params);
      return conv_forward(*net, noisy).first;
    };
  }
  return ctx;
}

void check_dims(const Genome& d, const Task& task) {
  if (d.input_dim != task.dppn_input_dim() ||
      d.output_dim != task.dppn_output_dim())
    throw ValidationError("genome dimensions do not match the task");
}

double require_finite(double value) {
  if (!std::isfinite(value)) throw EvalError("non-finite training loss");
  return value;
}

}  // namespace

FitnessReport get_fitness(const Genome& d, const Task& task, Rng& rng,
                          const AdamState* init_adam) {
  check_dims(d, task);
  FitnessReport rep;
  rep.pre_learning = d;
  Genome g = d;

  const int n_params = param_count(g);
  AdamState adam = init_adam ? *init_adam : adam_init(n_params, task.lr);
  if (adam.m.size() != n_params)
    throw ValidationError("carried Adam state does not match the genome");

  try {
    Eigen::VectorXd w = weight_vector(g);
    if (task.variant == TaskVariant::ImageRecon) {
      auto [coords, target] = image_recon_batch(task.target_image,
                                                task.image_side, g.n_mod);
      const Eigen::MatrixXd target_col = target;
      for (int step = 0; step < task.learn_steps; ++step) {
        auto [out, tape] = forward(g, coords);
        rep.learn_curve.push_back(
            require_finite(loss_value(task.loss, target_col, out)));
        Eigen::VectorXd grad =
            backward(g, tape, loss_grad(task.loss, target_col, out));
        adam_step(adam, w, grad);
        set_weight_vector(g, w);
      }
      auto [out, tape] = forward(g, coords);
      rep.fitness = -require_finite(loss_value(task.loss, target_col, out));
    } else {
      if (!task.train) throw ValidationError("denoise task has no dataset");
      DenoiseContext ctx = make_context(task);
      for (int step = 0; step < task.learn_steps; ++step) {
        std::vector<int> idx(task.minibatch);
        for (int& v : idx) v = static_cast<int>(rng.index(task.train->count()));
        const Eigen::MatrixXd clean = dataset_rows(*task.train, idx);
        const Eigen::MatrixXd noisy =
            inject_dropout_noise(clean, task.noise_fraction, rng);
        auto [out, tape] = forward(g, ctx.layout.coords);
        Eigen::VectorXd p_grad;
        rep.learn_curve.push_back(require_finite(
            ctx.pass(clean, noisy, gather_params(ctx.layout, out), &p_grad)));
        Eigen::VectorXd grad =
            backward(g, tape, scatter_param_grad(ctx.layout, p_grad));
        adam_step(adam, w, grad);
        set_weight_vector(g, w);
      }
      const Eigen::MatrixXd clean =
          dataset_rows(*task.train, task.fitness_indices);
      Rng noise_rng(task.fitness_noise_seed);
      const Eigen::MatrixXd noisy =
          inject_dropout_noise(clean, task.noise_fraction, noise_rng);
      auto [out, tape] = forward(g, ctx.layout.coords);
      rep.fitness = -require_finite(
          ctx.pass(clean, noisy, gather_params(ctx.layout, out), nullptr));
    }
  } catch (const EvalError&) {
    rep.fitness = -std::numeric_limits<double>::infinity();
  }

  rep.trained = std::move(g);
  rep.params = n_params;
  rep.n_nodes = static_cast<int>(rep.trained.nodes.size());
  rep.n_edges = static_cast<int>(rep.trained.edges.size());
  rep.adam = std::move(adam);
  return rep;
}

double evaluate_loss(const Genome& d, const Task& task,
                     const Eigen::MatrixXd& images) {
  check_dims(d, task);
  if (task.variant == TaskVariant::ImageRecon) {
    auto [coords, target] = image_recon_batch(task.target_image,
                                              task.image_side, d.n_mod);
    const Eigen::MatrixXd target_col = target;
    auto [out, tape] = forward(d, coords);
    return loss_value(task.loss, target_col, out);
  }
  DenoiseContext ctx = make_context(task);
  Rng noise_rng(kEvalNoiseSeed);
  const Eigen::MatrixXd noisy =
      inject_dropout_noise(images, task.noise_fraction, noise_rng);
  auto [out, tape] = forward(d, ctx.layout.coords);
  return ctx.pass(images, noisy, gather_params(ctx.layout, out), nullptr);
}

Eigen::MatrixXd recon_image(const Genome& d, const Task& task) {
  if (task.variant != TaskVariant::ImageRecon)
    throw ValidationError("recon_image requires the reconstruction task");
  auto [coords, target] = image_recon_batch(task.target_image,
                                            task.image_side, d.n_mod);
  auto [out, tape] = forward(d, coords);
  Eigen::MatrixXd img(task.image_side, task.image_side);
  for (int py = 0; py < task.image_side; ++py)
    for (int px = 0; px < task.image_side; ++px)
      img(py, px) = out(py * task.image_side + px, 0);
  return img;
}

DenoisePreview denoise_preview(const Genome& d, const Task& task,
                               const Eigen::MatrixXd& images) {
  if (task.variant == TaskVariant::ImageRecon)
    throw ValidationError("denoise_preview requires a denoise task");
  check_dims(d, task);
  DenoiseContext ctx = make_context(task);
  Rng noise_rng(kEvalNoiseSeed);
  DenoisePreview preview;
  preview.noisy = inject_dropout_noise(images, task.noise_fraction, noise_rng);
  auto [out, tape] = forward(d, ctx.layout.coords);
  preview.recon = ctx.run(preview.noisy, gather_params(ctx.layout, out));
  return preview;
}

DirectResult train_direct_fc(const ImageDataset& train,
                             const ImageDataset& test, int hid_side,
                             int steps, int minibatch, double noise_fraction,
                             LossKind loss, double lr, std::uint64_t seed) {
  if (train.count() == 0) throw ValidationError("empty training dataset");
  DirectResult result;
  result.net = fc_autoencoder(train.side, hid_side);
  result.params = fc_param_count(train.side, hid_side);

  // Xavier-uniform weights, zero biases.
  Rng rng(seed);
  const int vis = train.side * train.side;
  const int hid = hid_side * hid_side;
  const double r = std::sqrt(6.0 / (vis + hid));
  for (Eigen::Index i = 0; i < result.net.w_enc.size(); ++i)
    result.net.w_enc.data()[i] = rng.uniform(-r, r);
  for (Eigen::Index i = 0; i < result.net.w_dec.size(); ++i)
    result.net.w_dec.data()[i] = rng.uniform(-r, r);

  Eigen::VectorXd p = fc_get_params(result.net);
  AdamState adam = adam_init(static_cast<int>(p.size()), lr);
  result.curve.reserve(steps);
  for (int step = 0; step < steps; ++step) {
    std::vector<int> idx(minibatch);
    for (int& v : idx) v = static_cast<int>(rng.index(train.count()));
    const Eigen::MatrixXd clean = dataset_rows(train, idx);
    const Eigen::MatrixXd noisy =
        inject_dropout_noise(clean, noise_fraction, rng);
    fc_set_params(result.net, p);
    auto [recon, tape] = fc_forward(result.net, noisy);
    result.curve.push_back(require_finite(loss_value(loss, clean, recon)));
    Eigen::VectorXd grad =
        fc_param_grad(result.net, tape, loss_grad(loss, clean, recon));
    adam_step(adam, p, grad);
  }
  fc_set_params(result.net, p);

  if (test.count() > 0) {
    const int n = std::min(1000, test.count());
    const Eigen::MatrixXd images = dataset_rows(test, 0, n);
    Rng noise_rng(kEvalNoiseSeed);
    const Eigen::MatrixXd noisy =
        inject_dropout_noise(images, noise_fraction, noise_rng);
    auto [recon, tape] = fc_forward(result.net, noisy);
    result.test_loss = loss_value(loss, images, recon);
  }
  return result;
}

}  // namespace dppn

