#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dppn/config.hpp"
#include "dppn/engine.hpp"
#include "dppn/error.hpp"
#include "dppn/evolution.hpp"
#include "dppn/synth.hpp"
#include "dppn/task.hpp"

namespace fs = std::filesystem;
using namespace dppn;

namespace {

struct DataBundle {
  ImageDataset train;
  ImageDataset test;
  std::string source;
};

void truncate_dataset(ImageDataset& d, int n) {
  if (n > 0 && d.count() > n)
    d.pixels.resize(static_cast<std::size_t>(n) * d.side * d.side);
}

DataBundle load_data(const RunConfig& cfg) {
  DataBundle data;
  if (!cfg.synthetic) {
    struct Root {
      std::string dir;
      bool required;
    };
    std::vector<Root> roots;
    if (!cfg.mnist_dir.empty()) roots.push_back({cfg.mnist_dir, true});
    if (const char* env = std::getenv("DPPN_MNIST_DIR"))
      roots.push_back({env, false});
    roots.push_back({"data/mnist", false});
    const std::vector<std::pair<std::string, std::string>> names = {
        {"train-images-idx3-ubyte", "t10k-images-idx3-ubyte"},
        {"train-images.idx3-ubyte", "t10k-images.idx3-ubyte"},
    };
    for (const Root& root : roots) {
      for (const auto& [trn, tst] : names) {
        const fs::path train_path = fs::path(root.dir) / trn;
        if (!fs::exists(train_path)) continue;
        data.train = load_idx(train_path.string());
        const fs::path test_path = fs::path(root.dir) / tst;
        if (fs::exists(test_path)) data.test = load_idx(test_path.string());
        data.source = "mnist (" + root.dir + ")";
        truncate_dataset(data.train, cfg.train_limit);
        return data;
      }
      if (root.required)
        throw IoError("no IDX image files found under --mnist-dir " +
                      root.dir);
    }
  }
  const int n_train = std::max(
      cfg.train_limit > 0 ? cfg.train_limit : 10000, cfg.fitness_images);
  data.train = synth_digits(n_train, 424242);
  data.test = synth_digits(2000, 424243);
  data.source = "synthetic digits (no MNIST found)";
  return data;
}

Eigen::MatrixXd as_image(const Eigen::VectorXd& row, int side) {
  Eigen::MatrixXd img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) img(y, x) = row[y * side + x];
  return img;
}

// Per-tile min/max stretch so small weights stay visible.
Eigen::MatrixXd tile_norm(Eigen::MatrixXd t) {
  const double lo = t.minCoeff();
  const double hi = t.maxCoeff();
  if (hi > lo)
    t = ((t.array() - lo) / (hi - lo) * 255.0).matrix();
  else
    t.setConstant(127.0);
  return t;
}

void write_preview_grid(const Genome& best, const Task& task,
                        const ImageDataset& test, const fs::path& path) {
  const int n = std::min(8, test.count());
  if (n == 0) return;
  const Eigen::MatrixXd images = dataset_rows(test, 0, n);
  const DenoisePreview preview = denoise_preview(best, task, images);
  std::vector<Eigen::MatrixXd> tiles;
  const int side = task.vis_side;
  for (int i = 0; i < n; ++i)
    tiles.push_back(as_image(images.row(i), side) * 255.0);
  for (int i = 0; i < n; ++i)
    tiles.push_back(as_image(preview.noisy.row(i), side) * 255.0);
  for (int i = 0; i < n; ++i)
    tiles.push_back(as_image(preview.recon.row(i), side) * 255.0);
  write_grid_pgm(tiles, n, path.string());
}

void write_fc_filters(const Genome& best, const Task& task,
                      const fs::path& out_dir) {
  const ParamLayout layout = fc_layout(task.vis_side, task.hid_side);
  auto [dppn_out, tape] = forward(best, layout.coords);
  FCAutoencoder net = fc_autoencoder(task.vis_side, task.hid_side);
  fc_set_params(net, gather_params(layout, dppn_out));
  const int hid = task.hid_side * task.hid_side;
  std::vector<Eigen::MatrixXd> enc, dec;
  for (int h = 0; h < hid; ++h) {
    enc.push_back(tile_norm(as_image(net.w_enc.row(h), task.vis_side)));
    dec.push_back(tile_norm(as_image(net.w_dec.col(h), task.vis_side)));
  }
  write_grid_pgm(enc, task.hid_side, (out_dir / "enc_filters.pgm").string());
  write_grid_pgm(dec, task.hid_side, (out_dir / "dec_filters.pgm").string());
}

void write_conv_kernels(const Genome& best, const Task& task,
                        const fs::path& out_dir) {
  const ParamLayout layout = conv_layout(task.conv_kernel, task.conv_channels);
  auto [dppn_out, tape] = forward(best, layout.coords);
  ConvAutoencoder net =
      conv_autoencoder(task.vis_side, task.conv_kernel, task.conv_stride,
                       task.conv_pad, task.conv_channels);
  conv_set_params(net, gather_params(layout, dppn_out));
  std::vector<Eigen::MatrixXd> tiles;
  for (const auto& k : net.enc_kernels) tiles.push_back(tile_norm(k));
  for (const auto& k : net.dec_kernels) tiles.push_back(tile_norm(k));
  write_grid_pgm(tiles, task.conv_channels,
                 (out_dir / "kernels.pgm").string());
}

int run_baseline(const RunConfig& cfg) {
  const DataBundle data = load_data(cfg);
  std::cout << "data: " << data.source << "\n";
  std::cout << "training direct autoencoder, hidden side "
            << cfg.baseline_hidden << ", " << cfg.steps << " steps\n";
  const DirectResult res = train_direct_fc(
      data.train, data.test, cfg.baseline_hidden, cfg.steps, cfg.minibatch,
      cfg.noise, loss_from_name(cfg.loss), cfg.lr,
      mix_seed(cfg.seed, 0xba5e));

  const fs::path out_dir(cfg.out);
  std::ofstream curve(out_dir / "baseline_curve.csv");
  curve << "step,loss\n";
  for (std::size_t i = 0; i < res.curve.size(); ++i)
    curve << i + 1 << ',' << format_double(res.curve[i]) << '\n';

  std::string summary;
  summary += "kind=baseline-direct\n";
  summary += "hidden-side=" + std::to_string(cfg.baseline_hidden) + "\n";
  summary += "params=" + std::to_string(res.params) + "\n";
  if (!res.curve.empty())
    summary += "final-train-loss=" + format_double(res.curve.back()) + "\n";
  summary += "test-loss=" + format_double(res.test_loss) + "\n";
  summary += "data=" + data.source + "\n";
  std::ofstream(out_dir / "baseline_summary.txt") << summary;
  std::cout << summary;
  return 0;
}

int run_main(int argc, char** argv) {
  // Pass 1: pick up --config and --profile so later flags can override both.
  std::string config_path, profile_flag;
  {
    CLI::App pre;
    pre.allow_extras();
    pre.set_help_flag();
    pre.add_option("--config", config_path);
    pre.add_option("--profile", profile_flag);
    try {
      pre.parse(argc, argv);
    } catch (const CLI::ParseError&) {
      // pass 2 reports parse problems with the full option set
    }
  }

  RunConfig cfg;
  std::string profile = "paper";
  if (!config_path.empty()) {
    RunConfig probe;
    apply_config_file(probe, config_path);
    profile = probe.profile;
  }
  if (!profile_flag.empty()) profile = profile_flag;
  apply_profile(cfg, profile);
  if (!config_path.empty()) apply_config_file(cfg, config_path);
  cfg.profile = profile;

  CLI::App app{"DPPN trainer: evolved pattern networks with learned weights"};
  std::string config_dummy;
  app.add_option("--config", config_dummy, "key=value config file");
  app.add_option("--profile", cfg.profile, "paper or demo scale");
  app.add_option("--task", cfg.task, "recon, conv or fc");
  app.add_option("--mode", cfg.mode, "lamarckian, baldwinian or darwinian");
  app.add_option("--pop", cfg.pop, "population size");
  app.add_option("--tournaments", cfg.tournaments, "tournament count");
  app.add_option("--steps", cfg.steps, "learning steps per evaluation");
  app.add_option("--minibatch", cfg.minibatch, "minibatch size");
  app.add_option("--crossover-prob", cfg.crossover_prob,
                 "crossover probability");
  app.add_option("--cauchy", cfg.cauchy, "Cauchy mutation coefficient");
  app.add_option("--noise", cfg.noise, "dropout noise fraction");
  app.add_option("--lr", cfg.lr, "Adam learning rate");
  app.add_option("--bloat", cfg.bloat, "fitness penalty per node + edge");
  app.add_option("--workers", cfg.workers, "evaluation threads");
  app.add_option("--seed", cfg.seed, "run seed");
  app.add_option("--mnist-dir", cfg.mnist_dir, "directory with IDX files");
  app.add_option("--omniglot-dir", cfg.omniglot_dir,
                 "directory of PGM glyphs for the transfer check");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--fitness-images", cfg.fitness_images,
                 "held sample size for fitness");
  app.add_option("--recon-index", cfg.recon_index,
                 "dataset image used by the recon task");
  app.add_option("--loss", cfg.loss, "mse or bce");
  app.add_option("--baseline-hidden", cfg.baseline_hidden,
                 "train the direct baseline with this hidden side instead");
  app.add_flag("--synthetic", cfg.synthetic, "use generated digits");
  app.add_flag("--memoize", cfg.memoize, "reuse fitness until replacement");
  app.add_flag("--carry-adam", cfg.carry_adam,
               "offspring inherit optimizer moments");
  app.add_option("--init-hidden", cfg.init_hidden,
                 "start fully connected with this many hidden nodes");
  app.add_flag("--linear-input", cfg.linear_input,
               "give genomes a trainable input layer");
  app.add_option("--grid-every", cfg.grid_every,
                 "recon snapshot cadence (0 = off)");
  app.add_option("--train-limit", cfg.train_limit,
                 "cap on training images (0 = all)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const TaskVariant variant = task_from_name(cfg.task);
  const LossKind loss = loss_from_name(cfg.loss);
  inheritance_from_name(cfg.mode);

  const fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "config.txt") << config_echo(cfg);

  if (cfg.baseline_hidden > 0) return run_baseline(cfg);

  const DataBundle data = load_data(cfg);
  std::cout << "data: " << data.source << "\n";

  Task task;
  Eigen::VectorXd target;
  if (variant == TaskVariant::ImageRecon) {
    if (cfg.recon_index < 0 || cfg.recon_index >= data.train.count())
      throw ConfigError("recon-index out of range for " +
                        std::to_string(data.train.count()) + " images");
    target = dataset_rows(data.train, cfg.recon_index, 1).row(0).transpose();
    task = make_recon_task(target, data.train.side);
  } else {
    Rng task_rng(mix_seed(cfg.seed, 0x7a51));
    task = variant == TaskVariant::ConvDenoise
               ? make_conv_task(data.train, data.test, task_rng,
                                cfg.fitness_images)
               : make_fc_task(data.train, data.test, task_rng,
                              cfg.fitness_images);
  }
  task.loss = loss;
  task.learn_steps = cfg.steps;
  task.minibatch = cfg.minibatch;
  task.noise_fraction = cfg.noise;
  task.lr = cfg.lr;

  const EvoConfig evo = evo_config_from(cfg);
  std::vector<Eigen::MatrixXd> snaps;
  const int print_every = std::max(1, cfg.tournaments / 20);
  TournamentObserver observer = [&](int t, const Population&,
                                    const FitnessReport& best) {
    if (variant == TaskVariant::ImageRecon && cfg.grid_every > 0 &&
        t % cfg.grid_every == 0) {
      // Cumulative snapshot grid, one file per sample point.
      snaps.push_back(recon_image(best.trained, task) * 255.0);
      char name[32];
      std::snprintf(name, sizeof name, "progress_%04d.pgm", t);
      const int cols = std::min<int>(10, static_cast<int>(snaps.size()));
      write_grid_pgm(snaps, cols, (out_dir / name).string());
    }
    if (t % print_every == 0 || t == cfg.tournaments)
      std::cout << "tournament " << t << "/" << cfg.tournaments
                << "  best fitness " << format_double(best.fitness)
                << "  params " << best.params << "\n";
  };

  const RunResult result =
      run_async(evo, task, cfg.workers, cfg.seed, observer);

  write_metrics_csv(result.history, (out_dir / "metrics.csv").string());
  save_genome(result.best.trained,
              (out_dir / "best_genome.dppn").string());

  std::string omniglot_note;
  if (variant == TaskVariant::ImageRecon) {
    write_pgm(as_image(target, task.image_side) * 255.0,
              (out_dir / "target.pgm").string());
    write_pgm(recon_image(result.best.trained, task) * 255.0,
              (out_dir / "best.pgm").string());
  } else {
    if (variant == TaskVariant::FcDenoise)
      write_fc_filters(result.best.trained, task, out_dir);
    else
      write_conv_kernels(result.best.trained, task, out_dir);
    write_preview_grid(result.best.trained, task, data.test,
                       out_dir / "recon_samples.pgm");
    if (!cfg.omniglot_dir.empty()) {
      const ImageDataset omni = load_image_dir(cfg.omniglot_dir);
      if (omni.count() > 0) {
        const int n = std::min(1000, omni.count());
        const double transfer_loss = evaluate_loss(
            result.best.trained, task, dataset_rows(omni, 0, n));
        omniglot_note =
            "omniglot-loss=" + format_double(transfer_loss) + "\n";
        write_preview_grid(result.best.trained, task, omni,
                           out_dir / "omniglot_samples.pgm");
      }
    }
  }

  std::string summary;
  summary += "task=" + cfg.task + "\n";
  summary += "mode=" + cfg.mode + "\n";
  summary += "profile=" + cfg.profile + "\n";
  summary += "data=" + data.source + "\n";
  summary += "seed=" + std::to_string(cfg.seed) + "\n";
  summary += "tournaments=" + std::to_string(cfg.tournaments) + "\n";
  summary += "best-fitness=" + format_double(result.best.fitness) + "\n";
  summary += "test-loss=" + format_double(result.test_loss) + "\n";
  summary += "params=" + std::to_string(result.best.params) + "\n";
  summary += "nodes=" + std::to_string(result.best.n_nodes) + "\n";
  summary += "edges=" + std::to_string(result.best.n_edges) + "\n";
  summary += "n-mod=" + std::to_string(result.best.trained.n_mod) + "\n";
  summary += "wall-seconds=" + format_double(result.wall_seconds) + "\n";
  summary += omniglot_note;
  std::ofstream(out_dir / "summary.txt") << summary;
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
