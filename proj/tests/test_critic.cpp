#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mi_contrast/critic.hpp"
#include "mi_contrast/numeric.hpp"
#include "mi_contrast/objectives.hpp"
#include "mi_contrast/rng.hpp"
#include "mi_contrast/tasks.hpp"

using namespace mic;

namespace {

CriticConfig small_config() {
  CriticConfig cc;
  cc.input_dim = 4;
  cc.hidden_dim = 6;
  return cc;
}

}  // namespace

TEST_CASE("forward basics") {
  Critic critic(small_config(), 42);

  // Zeroed parameters leave only the (zero) bias path.
  Critic zero = critic;
  zero.parameters().setZero();
  Eigen::MatrixXd inputs(3, 4);
  inputs.setRandom();
  CHECK(zero.forward(inputs).isZero());

  // Fixed seed is bit-identical; batch equals looped single calls.
  Critic again(small_config(), 42);
  const Eigen::VectorXd batch = critic.forward(inputs);
  CHECK(batch == again.forward(inputs));
  for (int i = 0; i < 3; ++i) {
    const double x[2] = {inputs(i, 0), inputs(i, 1)};
    const double y[2] = {inputs(i, 2), inputs(i, 3)};
    CHECK(critic.forward_one(x, y) == batch(i));
  }

  Eigen::MatrixXd bad(2, 5);
  CHECK_THROWS_AS(critic.forward(bad), std::invalid_argument);
}

TEST_CASE("output clipping bounds scores and gates gradients") {
  CriticConfig cc = small_config();
  cc.clip_output = {-0.5, 0.5};
  Critic critic(cc, 1);
  critic.parameters() *= 50.0;  // force raw scores past the bounds
  Eigen::MatrixXd inputs(8, 4);
  inputs.setRandom();
  inputs *= 3.0;
  Critic::Cache cache;
  const Eigen::VectorXd scores = critic.forward(inputs, cache);
  bool clipped_any = false;
  for (int i = 0; i < 8; ++i) {
    CHECK(scores(i) >= -0.5);
    CHECK(scores(i) <= 0.5);
    if (cache.raw(i) < -0.5 || cache.raw(i) > 0.5) clipped_any = true;
  }
  REQUIRE(clipped_any);
  // A gradient only on clipped rows propagates nothing.
  Eigen::VectorXd d = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < 8; ++i)
    if (cache.raw(i) < -0.5 || cache.raw(i) > 0.5) d(i) = 1.0;
  CHECK(critic.backward(cache, d).isZero());
}

TEST_CASE("backward matches finite differences on a toy critic") {
  Critic critic(small_config(), 3);
  Eigen::MatrixXd inputs(5, 4);
  NormalSampler rng(4);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 4; ++k) inputs(i, k) = rng();
  Eigen::VectorXd d(5);
  for (int i = 0; i < 5; ++i) d(i) = rng();

  Critic::Cache cache;
  critic.forward(inputs, cache);
  const Eigen::VectorXd ga = critic.backward(cache, d);

  const double h = 1e-6;
  for (Eigen::Index p = 0; p < critic.parameter_count(); ++p) {
    const double saved = critic.parameters()(p);
    critic.parameters()(p) = saved + h;
    const double up = d.dot(critic.forward(inputs));
    critic.parameters()(p) = saved - h;
    const double dn = d.dot(critic.forward(inputs));
    critic.parameters()(p) = saved;
    CHECK(ga(p) == doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-4));
  }
}

TEST_CASE("adam update") {
  OptimizerConfig oc;
  oc.learning_rate = 1e-3;
  AdamOptimizer opt(3, oc);
  Eigen::VectorXd params = Eigen::VectorXd::Constant(3, 1.0);

  // Zero gradient: parameters unchanged.
  opt.step(params, Eigen::VectorXd::Zero(3));
  CHECK(params == Eigen::VectorXd::Constant(3, 1.0));

  // First unit-gradient step moves by ~lr (bias-corrected sign step).
  AdamOptimizer fresh(1, oc);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
  fresh.step(w, Eigen::VectorXd::Constant(1, 1.0));
  CHECK(w(0) == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(fresh.step_count() == 1);

  // Determinism: identical sequences give identical states.
  AdamOptimizer o1(2, oc), o2(2, oc);
  Eigen::VectorXd p1 = Eigen::VectorXd::Constant(2, 0.5), p2 = p1;
  Eigen::VectorXd g(2);
  g << 0.3, -0.7;
  o1.step(p1, g);
  o2.step(p2, g);
  CHECK(p1 == p2);
}

TEST_CASE("checkpoint round trip restores bit-identical outputs") {
  CriticConfig cc = small_config();
  Critic critic(cc, 17);
  OptimizerConfig oc;
  AdamOptimizer opt(critic.parameter_count(), oc);
  Eigen::MatrixXd inputs(4, 4);
  inputs.setRandom();
  // Take a few steps so the moments are nontrivial.
  for (int s = 0; s < 3; ++s) {
    Critic::Cache cache;
    critic.forward(inputs, cache);
    opt.step(critic.parameters(),
             critic.backward(cache, Eigen::VectorXd::Ones(4)));
  }
  const auto path = std::filesystem::temp_directory_path() /
                    "mi_contrast_test_ckpt.json";
  save_checkpoint(path, critic, opt);
  auto [loaded, loaded_opt] = load_checkpoint(path);
  CHECK(loaded.forward(inputs) == critic.forward(inputs));
  CHECK(loaded.parameters() == critic.parameters());
  CHECK(loaded_opt.step_count() == opt.step_count());
  CHECK(loaded_opt.first_moment() == opt.first_moment());
  CHECK(loaded_opt.second_moment() == opt.second_moment());
  std::filesystem::remove(path);
}

TEST_CASE("ascent: 200 adam steps increase the smoothed objective") {
  GaussianTask task;
  task.dim = 1;
  task.rho = 0.8;
  RelativeParams params;
  params.alpha = 1.0;
  params.beta = 0.25;
  params.gamma = 1.0;
  CriticConfig cc;
  cc.input_dim = 2;
  cc.hidden_dim = 32;
  Critic critic(cc, 5);
  OptimizerConfig oc;
  oc.learning_rate = 1e-3;
  AdamOptimizer opt(critic.parameter_count(), oc);
  NormalSampler rng(6);

  std::vector<double> values;
  for (int step = 0; step < 200; ++step) {
    const PairBatch batch = sample(task, 64, 64, rng);
    Eigen::MatrixXd inputs(128, 2);
    inputs.topRows(64) << batch.joint_x, batch.joint_y;
    inputs.bottomRows(64) << batch.prod_x, batch.prod_y;
    Critic::Cache cache;
    const Eigen::VectorXd scores = critic.forward(inputs, cache);
    ScoreBatch sb;
    sb.pos.assign(scores.data(), scores.data() + 64);
    sb.neg.assign(scores.data() + 64, scores.data() + 128);
    std::vector<double> d_pos, d_neg;
    values.push_back(
        objective_score_grad(ObjectiveKind::rpc(), params, sb, d_pos, d_neg));
    Eigen::VectorXd d(128);
    for (int i = 0; i < 64; ++i) d(i) = d_pos[i];
    for (int j = 0; j < 64; ++j) d(64 + j) = d_neg[j];
    opt.step(critic.parameters(), Eigen::VectorXd(-critic.backward(cache, d)));
  }
  auto window_mean = [&](int w) {
    return compensated_mean(
        std::span<const double>(values.data() + w * 50, 50));
  };
  CHECK(window_mean(3) > window_mean(0));
}
