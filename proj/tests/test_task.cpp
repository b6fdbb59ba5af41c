#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dppn/error.hpp"
#include "dppn/task.hpp"
#include "dppn/variation.hpp"
#include "testutil.hpp"

using namespace dppn;

namespace {

double median(std::vector<double> v) {
  REQUIRE(!v.empty());
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Eigen::VectorXd first_image(const ImageDataset& data) {
  return dataset_rows(data, 0, 1).row(0).transpose();
}

Task mini_fc_task(const ImageDataset& train, const ImageDataset& test,
                  Rng& rng) {
  Task t = make_fc_task(train, test, rng, 50);
  t.hid_side = 3;
  t.learn_steps = 50;
  t.minibatch = 8;
  t.lr = 0.01;
  return t;
}

Task mini_conv_task(const ImageDataset& train, const ImageDataset& test,
                    Rng& rng) {
  Task t = make_conv_task(train, test, rng, 50);
  t.conv_kernel = 3;
  t.conv_stride = 2;
  t.conv_pad = 1;
  t.learn_steps = 50;
  t.minibatch = 8;
  t.lr = 0.01;
  return t;
}

}  // namespace

TEST_CASE("task names round-trip") {
  CHECK(task_from_name("recon") == TaskVariant::ImageRecon);
  CHECK(task_from_name("conv") == TaskVariant::ConvDenoise);
  CHECK(task_from_name("fc") == TaskVariant::FcDenoise);
  CHECK(task_name(TaskVariant::FcDenoise) == std::string("fc"));
  CHECK_THROWS_AS(task_from_name("gan"), ConfigError);
}

TEST_CASE("task dimensions per variant") {
  Task t;
  t.variant = TaskVariant::ImageRecon;
  CHECK(t.dppn_input_dim() == 8);
  CHECK(t.dppn_output_dim() == 1);
  t.variant = TaskVariant::FcDenoise;
  CHECK(t.dppn_input_dim() == 8);
  CHECK(t.dppn_output_dim() == 2);
  t.variant = TaskVariant::ConvDenoise;
  CHECK(t.dppn_input_dim() == 4);
  CHECK(t.dppn_output_dim() == 6);
}

TEST_CASE("reconstruction batch geometry") {
  const ImageDataset data = test::rect_dataset(28, 1, 7);
  const Eigen::VectorXd image = first_image(data);
  const auto [coords, targets] = image_recon_batch(image, 28, 28);
  REQUIRE(coords.rows() == 784);
  REQUIRE(coords.cols() == 8);
  CHECK(targets == image);

  // rows run pixel-x fastest
  CHECK(coords(0, 0) == doctest::Approx(-1.0));
  CHECK(coords(0, 1) == doctest::Approx(-1.0));
  CHECK(coords(1, 0) == doctest::Approx(-1.0 + 2.0 / 27.0));
  CHECK(coords(1, 1) == doctest::Approx(-1.0));
  CHECK(coords(28, 0) == doctest::Approx(-1.0));
  CHECK(coords(28, 1) == doctest::Approx(-1.0 + 2.0 / 27.0));
  CHECK(coords(783, 0) == doctest::Approx(1.0));
  CHECK(coords(783, 1) == doctest::Approx(1.0));

  // distance and bias columns
  CHECK(coords(0, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK((coords.col(3).array() == 1.0).all());

  // scaled columns stay within 1/N of zero at N = 28
  CHECK(coords.col(4).minCoeff() == doctest::Approx(-1.0 / 28.0));
  CHECK(coords.col(4).maxCoeff() == doctest::Approx(1.0 / 28.0));

  // modular columns on the raw pixel index
  CHECK(coords(0, 6) == 0.0);
  CHECK(coords(5, 6) == doctest::Approx(5.0 / 28.0));
  CHECK(coords(27, 6) == doctest::Approx(27.0 / 28.0));
  CHECK(coords(28, 6) == 0.0);           // px wrapped
  CHECK(coords(28, 7) == doctest::Approx(1.0 / 28.0));  // py = 1
  CHECK(coords.col(6).maxCoeff() < 1.0);
}

TEST_CASE("reconstruction batch respects n_mod") {
  const Eigen::VectorXd image = Eigen::VectorXd::Zero(16);
  const auto [coords, targets] = image_recon_batch(image, 4, 2);
  // px % 2 / 2 alternates 0, 0.5
  CHECK(coords(0, 6) == 0.0);
  CHECK(coords(1, 6) == 0.5);
  CHECK(coords(2, 6) == 0.0);
  CHECK(coords(3, 6) == 0.5);
  CHECK(coords(4, 7) == 0.5);  // py = 1
  CHECK(coords(8, 7) == 0.0);  // py = 2
  CHECK_THROWS_AS(image_recon_batch(image, 5, 2), ValidationError);
  CHECK_THROWS_AS(image_recon_batch(image, 4, 0), ValidationError);
}

TEST_CASE("dropout noise zeroes an exact distinct count") {
  Rng rng(41);
  Eigen::MatrixXd batch = Eigen::MatrixXd::Ones(5, 784);

  const Eigen::MatrixXd none = inject_dropout_noise(batch, 0.0, rng);
  CHECK(none == batch);

  const Eigen::MatrixXd tenth = inject_dropout_noise(batch, 0.1, rng);
  for (int r = 0; r < 5; ++r) {
    CHECK((tenth.row(r).array() == 0.0).count() == 78);
  }
  CHECK(batch == Eigen::MatrixXd::Ones(5, 784));  // input untouched

  const Eigen::MatrixXd all = inject_dropout_noise(batch, 1.0, rng);
  CHECK(all.isZero(0.0));

  CHECK_THROWS_AS(inject_dropout_noise(batch, -0.1, rng), ValidationError);
  CHECK_THROWS_AS(inject_dropout_noise(batch, 1.5, rng), ValidationError);
}

TEST_CASE("dropout rows are noised independently") {
  Rng rng(42);
  Eigen::MatrixXd batch = Eigen::MatrixXd::Ones(2, 400);
  const Eigen::MatrixXd noisy = inject_dropout_noise(batch, 0.25, rng);
  CHECK(noisy.row(0) != noisy.row(1));
}

TEST_CASE("denoise task factories fix the fitness sample") {
  const ImageDataset train = test::rect_dataset(8, 120, 11);
  const ImageDataset test_set = test::rect_dataset(8, 30, 12);
  Rng rng(43);
  const Task t = make_fc_task(train, test_set, rng, 50);
  CHECK(t.variant == TaskVariant::FcDenoise);
  CHECK(t.vis_side == 8);
  REQUIRE(t.fitness_indices.size() == 50);
  CHECK(std::is_sorted(t.fitness_indices.begin(), t.fitness_indices.end()));
  CHECK(std::adjacent_find(t.fitness_indices.begin(),
                           t.fitness_indices.end()) == t.fitness_indices.end());
  CHECK(t.fitness_indices.front() >= 0);
  CHECK(t.fitness_indices.back() < 120);

  // sample larger than the dataset saturates
  Rng rng2(44);
  const Task big = make_conv_task(train, test_set, rng2, 1000);
  CHECK(big.fitness_indices.size() == 120);
}

TEST_CASE("zero learn steps is deterministic and matches the plain loss") {
  const ImageDataset data = test::rect_dataset(28, 1, 13);
  Task task = make_recon_task(first_image(data), 28);
  task.learn_steps = 0;
  Rng g_rng(45);
  const Genome d = new_minimal(8, 1, g_rng);

  Rng r1(1), r2(99);
  const FitnessReport a = get_fitness(d, task, r1);
  const FitnessReport b = get_fitness(d, task, r2);
  CHECK(a.fitness == b.fitness);
  CHECK(a.learn_curve.empty());
  CHECK(test::same_weights(a.trained, d));
  CHECK(a.fitness == -evaluate_loss(d, task, Eigen::MatrixXd()));
  CHECK(a.params == param_count(d));
  CHECK(a.n_nodes == 4);
  CHECK(a.n_edges == 4);
}

TEST_CASE("training is bitwise reproducible under one seed") {
  const ImageDataset train = test::rect_dataset(8, 100, 14);
  const ImageDataset test_set = test::rect_dataset(8, 20, 15);
  Rng t_rng(46);
  const Task task = mini_fc_task(train, test_set, t_rng);
  Rng g_rng(47);
  const Genome d = new_minimal(8, 2, g_rng);

  Rng r1(5), r2(5);
  const FitnessReport a = get_fitness(d, task, r1);
  const FitnessReport b = get_fitness(d, task, r2);
  CHECK(a.fitness == b.fitness);
  CHECK(a.learn_curve == b.learn_curve);
  CHECK(test::same_weights(a.trained, b.trained));
  CHECK(test::same_weights(a.pre_learning, d));
}

TEST_CASE("learn curve length equals the step budget") {
  const ImageDataset data = test::rect_dataset(28, 1, 16);
  Task task = make_recon_task(first_image(data), 28);
  task.learn_steps = 17;
  Rng g_rng(48), rng(49);
  const Genome d = new_minimal(8, 1, g_rng);
  const FitnessReport rep = get_fitness(d, task, rng);
  CHECK(rep.learn_curve.size() == 17);
  CHECK(rep.adam.t == 17);
}

TEST_CASE("carried Adam state resumes and mismatches are rejected") {
  const ImageDataset data = test::rect_dataset(28, 1, 17);
  Task task = make_recon_task(first_image(data), 28);
  task.learn_steps = 5;
  Rng g_rng(50), rng(51);
  const Genome d = new_minimal(8, 1, g_rng);
  const FitnessReport first = get_fitness(d, task, rng);
  CHECK(first.adam.t == 5);
  const FitnessReport second =
      get_fitness(first.trained, task, rng, &first.adam);
  CHECK(second.adam.t == 10);

  AdamState wrong = adam_init(param_count(d) + 3, task.lr);
  CHECK_THROWS_AS(get_fitness(d, task, rng, &wrong), ValidationError);
}

TEST_CASE("gradient learning reduces the reconstruction loss") {
  const ImageDataset data = test::rect_dataset(28, 20, 18);
  std::vector<double> first, last;
  for (int seed = 0; seed < 20; ++seed) {
    Task task = make_recon_task(
        dataset_rows(data, seed % data.count(), 1).row(0).transpose(), 28);
    task.learn_steps = 50;
    task.lr = 0.01;
    Rng g_rng(100 + seed), rng(200 + seed);
    const Genome d = new_minimal(8, 1, g_rng);
    const FitnessReport rep = get_fitness(d, task, rng);
    REQUIRE(rep.learn_curve.size() == 50);
    first.push_back(rep.learn_curve.front());
    last.push_back(rep.learn_curve.back());
  }
  CHECK(median(last) < median(first));
}

TEST_CASE("gradient learning reduces the fc denoising loss") {
  const ImageDataset train = test::rect_dataset(8, 200, 19);
  const ImageDataset test_set = test::rect_dataset(8, 40, 20);
  std::vector<double> first, last;
  for (int seed = 0; seed < 20; ++seed) {
    Rng t_rng(300 + seed);
    const Task task = mini_fc_task(train, test_set, t_rng);
    Rng g_rng(400 + seed), rng(500 + seed);
    const Genome d = new_minimal(8, 2, g_rng);
    const FitnessReport rep = get_fitness(d, task, rng);
    first.push_back(rep.learn_curve.front());
    last.push_back(rep.learn_curve.back());
  }
  CHECK(median(last) < median(first));
}

TEST_CASE("gradient learning reduces the conv denoising loss") {
  const ImageDataset train = test::rect_dataset(8, 200, 21);
  const ImageDataset test_set = test::rect_dataset(8, 40, 22);
  std::vector<double> first, last;
  for (int seed = 0; seed < 20; ++seed) {
    Rng t_rng(600 + seed);
    const Task task = mini_conv_task(train, test_set, t_rng);
    Rng g_rng(700 + seed), rng(800 + seed);
    const Genome d = new_minimal(4, 6, g_rng);
    const FitnessReport rep = get_fitness(d, task, rng);
    first.push_back(rep.learn_curve.front());
    last.push_back(rep.learn_curve.back());
  }
  CHECK(median(last) < median(first));
}

TEST_CASE("a numerically exploding genome scores minus infinity") {
  const ImageDataset data = test::rect_dataset(28, 1, 23);
  Task task = make_recon_task(first_image(data), 28);
  task.learn_steps = 0;
  Genome d;
  d.input_dim = 8;
  d.output_dim = 1;
  d.nodes = {{0, NodeKind::Input, Transfer::Identity, std::nullopt},
             {1, NodeKind::Output, Transfer::Identity, std::nullopt}};
  d.edges = {{0, 1, 1e308, 3, 0}};  // tap 3 reads the constant-one column
  d = validated(d);
  Rng rng(52);
  FitnessReport rep;
  CHECK_NOTHROW(rep = get_fitness(d, task, rng));
  CHECK(rep.fitness == -std::numeric_limits<double>::infinity());
}

TEST_CASE("genome dimensions must match the task") {
  const ImageDataset data = test::rect_dataset(28, 1, 24);
  const Task task = make_recon_task(first_image(data), 28);
  Rng g_rng(53), rng(54);
  const Genome wrong = new_minimal(4, 1, g_rng);
  CHECK_THROWS_AS(get_fitness(wrong, task, rng), ValidationError);
  CHECK_THROWS_AS(evaluate_loss(wrong, task, Eigen::MatrixXd()),
                  ValidationError);
}

TEST_CASE("evaluate_loss is repeatable on denoise tasks") {
  const ImageDataset train = test::rect_dataset(8, 100, 25);
  const ImageDataset test_set = test::rect_dataset(8, 30, 26);
  Rng t_rng(55);
  const Task task = mini_fc_task(train, test_set, t_rng);
  Rng g_rng(56);
  const Genome d = new_minimal(8, 2, g_rng);
  const Eigen::MatrixXd images = dataset_rows(test_set, 0, 20);
  const double a = evaluate_loss(d, task, images);
  const double b = evaluate_loss(d, task, images);
  CHECK(a == b);
  CHECK(std::isfinite(a));
}

TEST_CASE("recon_image reshapes the output grid") {
  const ImageDataset data = test::rect_dataset(28, 1, 27);
  const Task task = make_recon_task(first_image(data), 28);
  Rng g_rng(57);
  const Genome d = new_minimal(8, 1, g_rng);
  const Eigen::MatrixXd img = recon_image(d, task);
  CHECK(img.rows() == 28);
  CHECK(img.cols() == 28);

  Rng t_rng(58);
  const ImageDataset train = test::rect_dataset(8, 10, 28);
  const Task denoise = mini_fc_task(train, train, t_rng);
  CHECK_THROWS_AS(recon_image(d, denoise), ValidationError);
}

TEST_CASE("denoise_preview pairs noisy inputs with reconstructions") {
  const ImageDataset train = test::rect_dataset(8, 60, 29);
  Rng t_rng(59);
  const Task task = mini_fc_task(train, train, t_rng);
  Rng g_rng(60);
  const Genome d = new_minimal(8, 2, g_rng);
  const Eigen::MatrixXd images = dataset_rows(train, 0, 6);
  const DenoisePreview p = denoise_preview(d, task, images);
  CHECK(p.noisy.rows() == 6);
  CHECK(p.noisy.cols() == 64);
  CHECK(p.recon.rows() == 6);
  CHECK(p.recon.cols() == 64);
  // dropout removed something
  CHECK((p.noisy.array() == 0.0).count() >
        (images.array() == 0.0).count() - 1);

  const ImageDataset img = test::rect_dataset(28, 1, 30);
  const Task recon = make_recon_task(first_image(img), 28);
  CHECK_THROWS_AS(denoise_preview(d, recon, images), ValidationError);
}

TEST_CASE("direct fc training learns and reports its shape") {
  const ImageDataset train = test::rect_dataset(8, 300, 31);
  const ImageDataset test_set = test::rect_dataset(8, 60, 32);
  const DirectResult r = train_direct_fc(train, test_set, 2, 300, 16, 0.1,
                                         LossKind::Mse, 0.01, 77);
  CHECK(r.params == fc_param_count(8, 2));
  REQUIRE(r.curve.size() == 300);
  CHECK(r.curve.back() < r.curve.front());
  CHECK(std::isfinite(r.test_loss));
  CHECK(r.test_loss < 0.5);

  // deterministic under the seed
  const DirectResult r2 = train_direct_fc(train, test_set, 2, 300, 16, 0.1,
                                          LossKind::Mse, 0.01, 77);
  CHECK(r.test_loss == r2.test_loss);
  CHECK(r.curve == r2.curve);
}
