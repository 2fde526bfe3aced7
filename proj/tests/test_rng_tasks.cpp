#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mi_contrast/numeric.hpp"
#include "mi_contrast/rng.hpp"
#include "mi_contrast/tasks.hpp"

using namespace mic;

TEST_CASE("pinned rng streams are deterministic and split cleanly") {
  Xoshiro256pp a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(a.next() != c.next());
  CHECK(derive_stream_seed(1, 0) != derive_stream_seed(1, 1));
  CHECK(derive_stream_seed(1, 0) == derive_stream_seed(1, 0));
}

TEST_CASE("box-muller sampler moments") {
  NormalSampler rng(7);
  const int n = 100000;
  std::vector<double> xs(n);
  for (double& x : xs) x = rng();
  const double mean = compensated_mean(xs);
  const double var = population_variance(xs);
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sampler determinism and correlation") {
  GaussianTask task;
  task.dim = 2;
  task.rho = 0.9;
  NormalSampler r1(5), r2(5);
  const PairBatch b1 = sample(task, 100, 50, r1);
  const PairBatch b2 = sample(task, 100, 50, r2);
  CHECK(b1.joint_x == b2.joint_x);
  CHECK(b1.prod_y == b2.prod_y);

  NormalSampler r3(6);
  const int n = 100000;
  const PairBatch big = sample(task, n, 1, r3);
  for (int k = 0; k < task.dim; ++k) {
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      sxy += big.joint_x(i, k) * big.joint_y(i, k);
      sxx += big.joint_x(i, k) * big.joint_x(i, k);
      syy += big.joint_y(i, k) * big.joint_y(i, k);
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    CHECK(corr > 0.89);
    CHECK(corr < 0.91);
  }
}

TEST_CASE("cubic flag cubes y after pairing") {
  GaussianTask plain;
  plain.dim = 3;
  plain.rho = 0.4;
  GaussianTask cubic = plain;
  cubic.cubic = true;
  NormalSampler r1(9), r2(9);
  const PairBatch a = sample(plain, 20, 20, r1);
  const PairBatch b = sample(cubic, 20, 20, r2);
  CHECK(a.joint_x == b.joint_x);
  for (int i = 0; i < 20; ++i)
    for (int k = 0; k < 3; ++k) {
      CHECK(b.joint_y(i, k) == doctest::Approx(std::pow(a.joint_y(i, k), 3)));
      CHECK(b.prod_y(i, k) == doctest::Approx(std::pow(a.prod_y(i, k), 3)));
    }
  CHECK(ground_truth_mi(plain) == ground_truth_mi(cubic));
}

TEST_CASE("ground truth and its inverse") {
  GaussianTask task;
  task.dim = 1;
  task.rho = 0.8;
  CHECK(ground_truth_mi(task) == doctest::Approx(0.510826).epsilon(1e-5));
  task.rho = 0.0;
  CHECK(ground_truth_mi(task) == 0.0);

  // Exact values: sqrt(1 - e^{-0.2}) and sqrt(1 - e^{-1}).
  CHECK(rho_for_mi(2.0, 20) == doctest::Approx(0.4257573).epsilon(1e-5));
  CHECK(rho_for_mi(10.0, 20) == doctest::Approx(0.7950601).epsilon(1e-5));
  CHECK(rho_for_mi(0.0, 20) == 0.0);

  GaussianTask round;
  round.dim = 20;
  round.rho = rho_for_mi(6.0, 20);
  CHECK(ground_truth_mi(round) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("analytic log ratio formula and consistency") {
  GaussianTask task;
  task.dim = 1;
  task.rho = 0.5;
  const double origin[1] = {0.0};
  CHECK(analytic_log_ratio(task, origin, origin) ==
        doctest::Approx(-0.5 * std::log(0.75)).epsilon(1e-12));

  GaussianTask indep;
  indep.dim = 1;
  indep.rho = 0.0;
  const double pt[1] = {1.3};
  CHECK(analytic_log_ratio(indep, pt, pt) == 0.0);

  // MC mean over joint samples recovers the ground truth, and the mean
  // ratio under the product of marginals is 1 (normalization).
  GaussianTask mi2;
  mi2.dim = 20;
  mi2.rho = rho_for_mi(2.0, 20);
  NormalSampler rng(13);
  const int n = 200000;
  const PairBatch batch = sample(mi2, n, n, rng);
  std::vector<double> joint_lr(n), prod_r(n);
  std::vector<double> x(20), y(20);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 20; ++k) {
      x[k] = batch.joint_x(i, k);
      y[k] = batch.joint_y(i, k);
    }
    joint_lr[i] = analytic_log_ratio(mi2, x, y);
    for (int k = 0; k < 20; ++k) {
      x[k] = batch.prod_x(i, k);
      y[k] = batch.prod_y(i, k);
    }
    prod_r[i] = std::exp(analytic_log_ratio(mi2, x, y));
  }
  const double se_mi =
      std::sqrt(population_variance(joint_lr) / double(n));
  CHECK(std::abs(compensated_mean(joint_lr) - 2.0) <= 3.0 * se_mi);
  const double se_r = std::sqrt(population_variance(prod_r) / double(n));
  CHECK(std::abs(compensated_mean(prod_r) - 1.0) <= 4.0 * se_r);
}

TEST_CASE("relative ratio curve") {
  // Densities N(0,1) and N(0.5,1) cross at x = 0.25.
  std::vector<double> grid{0.25};
  for (double beta : {0.0, 0.3, 0.9})
    CHECK(relative_ratio_curve(beta, grid)[0] ==
          doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> wide(500);
  for (int i = 0; i < 500; ++i) wide[i] = -10.0 + 12.0 * i / 499.0;
  const auto bounded = relative_ratio_curve(0.5, wide);
  for (double r : bounded) CHECK(r < 2.0 + 1e-12);
  CHECK_THROWS_AS(relative_ratio_curve(1.0, wide), std::invalid_argument);
}

TEST_CASE("chi2 oracle integration") {
  CHECK(chi2_oracle_1d(0.0) == 0.0);
  CHECK(chi2_oracle_1d(0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
  CHECK(chi2_oracle_1d(0.8) == doctest::Approx(16.0 / 9.0).epsilon(1e-8));
  CHECK_THROWS_AS(chi2_oracle_1d(1.0), std::invalid_argument);
}

TEST_CASE("batch CSV dump") {
  GaussianTask task;
  task.dim = 2;
  task.rho = 0.3;
  NormalSampler rng(21);
  const PairBatch batch = sample(task, 3, 2, rng);
  const auto path = std::filesystem::temp_directory_path() /
                    "mi_contrast_test_batch.csv";
  dump_batch_csv(batch, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "set,x0,x1,y0,y1");
  int joint = 0, product = 0;
  while (std::getline(in, line)) {
    if (line.rfind("joint,", 0) == 0) ++joint;
    if (line.rfind("product,", 0) == 0) ++product;
  }
  CHECK(joint == 3);
  CHECK(product == 2);
  std::filesystem::remove(path);
}
