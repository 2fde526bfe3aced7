#include <cmath>
#include <vector>

#include "doctest.h"
#include "mi_contrast/objectives.hpp"
#include "mi_contrast/rng.hpp"
#include "mi_contrast/tasks.hpp"

using namespace mic;

namespace {

RelativeParams make_params(double a, double b, double g) {
  RelativeParams p;
  p.alpha = a;
  p.beta = b;
  p.gamma = g;
  return p;
}

}  // namespace

TEST_CASE("rpc_value constant-score identity") {
  const RelativeParams p = make_params(1.0, 0.25, 1.0);
  for (double c : {-2.0, 0.0, 0.7, 3.0}) {
    ScoreBatch batch{std::vector<double>(5, c), std::vector<double>(9, c)};
    const double expected =
        c - p.alpha * c - 0.5 * p.beta * c * c - 0.5 * p.gamma * c * c;
    CHECK(rpc_value(batch, p) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("rpc_value rejects bad input") {
  const RelativeParams p = make_params(1.0, 0.25, 1.0);
  CHECK_THROWS_AS(rpc_value(ScoreBatch{{}, {0.0}}, p), std::invalid_argument);
  CHECK_THROWS_AS(rpc_value(ScoreBatch{{0.0}, {std::nan("")}}, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_params(1.0, 0.0, 0.0).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_params(-0.5, 0.25, 1.0).validate(),
                  std::invalid_argument);
}

TEST_CASE("baseline trivial identities") {
  ScoreBatch batch{{0.5, 1.5}, {0.0, 0.0, 0.0}};
  CHECK(baseline_value(ObjectiveKind::dv(), batch) == doctest::Approx(1.0));

  ScoreBatch ones{{1.0, 1.0}, {1.0, 1.0}};
  CHECK(baseline_value(ObjectiveKind::nwj(), ones) ==
        doctest::Approx(0.0).epsilon(1e-14));

  ScoreBatch any{{0.3, -0.2}, {2.0, -5.0, 0.4}};
  CHECK(baseline_value(ObjectiveKind::smile(0.0), any) ==
        doctest::Approx((0.3 - 0.2) / 2.0));

  // JS hand value at all-zero scores: -log 2 - log 2.
  ScoreBatch zeros{{0.0}, {0.0}};
  CHECK(baseline_value(ObjectiveKind::js(), zeros) ==
        doctest::Approx(-2.0 * std::log(2.0)));

  CHECK_THROWS_AS(baseline_value(ObjectiveKind::cpc(), batch),
                  std::invalid_argument);
  CHECK_THROWS_AS(baseline_value(ObjectiveKind::rpc(), batch),
                  std::invalid_argument);
}

TEST_CASE("baselines stay finite at extreme scores") {
  ScoreBatch batch{{500.0, -500.0}, {500.0, -500.0, 250.0}};
  for (const ObjectiveKind& kind :
       {ObjectiveKind::dv(), ObjectiveKind::nwj(), ObjectiveKind::smile(5.0),
        ObjectiveKind::js()})
    CHECK(std::isfinite(baseline_value(kind, batch)));
}

TEST_CASE("cpc_value") {
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(5, 5, 0.3);
  CHECK(cpc_value(uniform) == doctest::Approx(0.0).epsilon(1e-14));

  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 0, 1;
  CHECK(cpc_value(m) ==
        doctest::Approx(1.0 - std::log((std::exp(1.0) + 1.0) / 2.0)));

  Eigen::MatrixXd hot = Eigen::MatrixXd::Zero(4, 4);
  hot.diagonal().setConstant(60.0);
  CHECK(cpc_value(hot) == doctest::Approx(std::log(4.0)).epsilon(1e-9));

  // Ceiling on random matrices.
  Xoshiro256pp rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd r(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) r(i, j) = 10.0 * (rng.uniform() - 0.5);
    CHECK(cpc_value(r) <= std::log(8.0) + 1e-12);
  }

  CHECK_THROWS_AS(cpc_value(Eigen::MatrixXd::Zero(1, 1)),
                  std::invalid_argument);
}

TEST_CASE("optimal_critic endpoints and corollary") {
  const RelativeParams p = make_params(1.0, 0.25, 1.0);
  CHECK(optimal_critic(1.0, p) == doctest::Approx(0.0));
  CHECK(optimal_critic(1e18, p) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(optimal_critic(0.0, p) == doctest::Approx(-1.0));  // -alpha/gamma

  const RelativeParams chi2 = make_params(0.0, 0.0, 1.0);
  CHECK(optimal_critic(3.0, chi2) == doctest::Approx(3.0));

  CHECK_THROWS_AS(optimal_critic(-0.1, p), std::invalid_argument);
}

TEST_CASE("invert_critic") {
  const RelativeParams p = make_params(1.0, 0.001, 1.0);
  CHECK(invert_critic(0.0, p) == doctest::Approx(1.0));
  const double f = (3.0 - 1.0) / (0.001 * 3.0 + 1.0);
  CHECK(f == doctest::Approx(1.994018).epsilon(1e-6));
  CHECK(invert_critic(f, p) == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(invert_critic(1000.0, p), std::invalid_argument);

  long clamps = 0;
  CHECK(invert_critic(-2.0, p, &clamps) == 0.0);
  CHECK(clamps == 1);

  const RelativeParams nobeta = make_params(1.0, 0.0, 1.0);
  CHECK_THROWS_AS(invert_critic(0.5, nobeta), std::invalid_argument);
}

TEST_CASE("mi_from_ratios") {
  std::vector<double> constant(7, 1.25);
  CHECK(mi_from_ratios(constant) == doctest::Approx(1.25));
  const std::vector<double> empty;
  CHECK_THROWS_AS(mi_from_ratios(empty), std::invalid_argument);
}

TEST_CASE("mixture_form_value forms agree") {
  const RelativeParams p = make_params(0.7, 0.4, 1.3);
  std::vector<double> pos{0.1, -0.2, 0.5};
  std::vector<double> neg{0.3, 0.0};
  const double expected = 0.5 * p.beta * (0.01 + 0.04 + 0.25) / 3.0 +
                          0.5 * p.gamma * (0.09 + 0.0) / 2.0;
  CHECK(mixture_form_value(pos, neg, p) == doctest::Approx(expected));

  std::vector<double> zeros(4, 0.0);
  CHECK(mixture_form_value(zeros, p) == 0.0);

  const std::vector<double> ones_w(pos.size(), 1.0);
  const std::vector<double> ones_w2(neg.size(), 1.0);
  CHECK(mixture_form_value(pos, ones_w, neg, ones_w2, p) ==
        doctest::Approx(expected));
}

TEST_CASE("bounds matches hand evaluation") {
  const BoundReport r = bounds(make_params(1.0, 0.25, 1.0), 64, 64);
  CHECK(r.j_upper == doctest::Approx(2.5));
  CHECK(r.var_bound == doctest::Approx(2.3125));
  CHECK(r.critic_lo == doctest::Approx(-1.0));
  CHECK(r.critic_hi == doctest::Approx(4.0));

  const BoundReport r2 = bounds(make_params(0.0, 1.0, 1.0), 8, 8);
  CHECK(r2.critic_lo == 0.0);
  CHECK(r2.critic_hi == 1.0);

  CHECK_THROWS_AS(bounds(make_params(1.0, 0.0, 1.0), 8, 8),
                  std::invalid_argument);
}

TEST_CASE("rpc score gradient isolates terms") {
  // alpha = gamma = 0: negatives contribute nothing.
  RelativeParams p = make_params(0.0, 0.5, 0.0);
  ScoreBatch batch{{0.4, -1.0, 2.0}, {5.0, -7.0}};
  std::vector<double> d_pos, d_neg;
  objective_score_grad(ObjectiveKind::rpc(), p, batch, d_pos, d_neg);
  for (std::size_t i = 0; i < batch.pos.size(); ++i)
    CHECK(d_pos[i] ==
          doctest::Approx((1.0 - p.beta * batch.pos[i]) / 3.0));
  for (double g : d_neg) CHECK(g == 0.0);
}

TEST_CASE("chi-squared corollary on Monte Carlo samples") {
  const RelativeParams p = make_params(0.0, 0.0, 1.0);
  GaussianTask task;
  task.dim = 1;
  task.rho = 0.5;
  NormalSampler rng(99);
  const int n = 200000;
  const PairBatch batch = sample(task, n, n, rng);
  ScoreBatch scores;
  scores.pos.resize(n);
  scores.neg.resize(n);
  for (int i = 0; i < n; ++i) {
    const double xp[1] = {batch.joint_x(i, 0)};
    const double yp[1] = {batch.joint_y(i, 0)};
    scores.pos[i] = std::exp(analytic_log_ratio(task, xp, yp));
    const double xq[1] = {batch.prod_x(i, 0)};
    const double yq[1] = {batch.prod_y(i, 0)};
    scores.neg[i] = std::exp(analytic_log_ratio(task, xq, yq));
  }
  const double est = 2.0 * rpc_value(scores, p) - 1.0;
  CHECK(est == doctest::Approx(chi2_oracle_1d(0.5)).epsilon(0.05));
}
