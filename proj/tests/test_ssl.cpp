#include <cmath>
#include <vector>

#include "doctest.h"
#include "mi_contrast/rng.hpp"
#include "mi_contrast/ssl.hpp"

using namespace mic;

namespace {

RelativeParams make_params(double a, double b, double g, double tau = 1.0) {
  RelativeParams p;
  p.alpha = a;
  p.beta = b;
  p.gamma = g;
  p.tau = tau;
  return p;
}

const std::vector<int> kPairing{1, 0, 3, 2};

}  // namespace

TEST_CASE("anchor loss hand values") {
  AnchorScores a;
  a.pos = 1.0;
  a.neg = {0.0, 0.0};
  a.neg_norm = 2;
  CHECK(rpc_anchor_loss(a, make_params(1.0, 0.25, 1.0)) ==
        doctest::Approx(-0.875));

  AnchorScores zero;
  zero.pos = 0.0;
  zero.neg = {0.0, 0.0, 0.0};
  zero.neg_norm = 3;
  CHECK(rpc_anchor_loss(zero, make_params(1.0, 0.25, 1.0)) == 0.0);

  // With alpha = beta = 0 and zero negatives only the raw positive score
  // survives: pure score maximization. (alpha = beta = gamma = 0 itself
  // is rejected by the parameter invariant.)
  AnchorScores plain;
  plain.pos = 0.8;
  plain.neg = {0.0, 0.0};
  plain.neg_norm = 2;
  CHECK(rpc_anchor_loss(plain, make_params(0.0, 0.0, 1.0)) ==
        doctest::Approx(-0.8));
  CHECK_THROWS_AS(rpc_anchor_loss(plain, make_params(0.0, 0.0, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("vision batch loss verbatim formula") {
  const RelativeParams p = make_params(1.0, 0.25, 1.0);

  // N = 2, all scores equal c: the indicator keeps 2N-1 = 3 terms while
  // the divisor stays 2(N-1) = 2.
  const double c = 0.6;
  Eigen::MatrixXd equal = Eigen::MatrixXd::Constant(4, 4, c);
  const double expected =
      -(c - p.alpha * 3.0 * c / 2.0 - 0.5 * p.beta * c * c -
        p.gamma * 3.0 * c * c / 4.0);
  CHECK(rpc_vision_batch_loss(equal, kPairing, p) ==
        doctest::Approx(expected).epsilon(1e-12));

  CHECK(rpc_vision_batch_loss(Eigen::MatrixXd::Zero(4, 4), kPairing, p) ==
        0.0);

  // Decomposition identity against the per-anchor loss.
  Xoshiro256pp rng(3);
  Eigen::MatrixXd scores(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) scores(i, j) = 2.0 * rng.uniform() - 1.0;
  double manual = 0.0;
  for (int i = 0; i < 4; ++i) {
    AnchorScores a;
    a.pos = scores(i, kPairing[i]);
    for (int k = 0; k < 4; ++k)
      if (k != i) a.neg.push_back(scores(i, k));
    a.neg_norm = 2;
    manual += rpc_anchor_loss(a, p);
  }
  CHECK(rpc_vision_batch_loss(scores, kPairing, p) ==
        doctest::Approx(manual / 4.0).epsilon(1e-12));

  const std::vector<int> bad{0, 1, 2, 3};  // fixed points
  CHECK_THROWS_AS(rpc_vision_batch_loss(scores, bad, p),
                  std::invalid_argument);
}

TEST_CASE("cpc vision batch loss") {
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 4, 1.2);
  CHECK(cpc_vision_batch_loss(uniform, kPairing) ==
        doctest::Approx(std::log(3.0)));

  Eigen::MatrixXd hot = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) hot(i, kPairing[i]) = 50.0;
  CHECK(cpc_vision_batch_loss(hot, kPairing) ==
        doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(
      cpc_vision_batch_loss(Eigen::MatrixXd::Zero(2, 2), {1, 0}),
      std::invalid_argument);
}

TEST_CASE("temperature equivariance") {
  Xoshiro256pp rng(8);
  Eigen::MatrixXd scores(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) scores(i, j) = rng.uniform();
  const double base =
      rpc_vision_batch_loss(scores, kPairing, make_params(1.0, 0.25, 1.0, 1.0));
  const double scaled = rpc_vision_batch_loss(
      3.0 * scores, kPairing, make_params(1.0, 0.25, 1.0, 3.0));
  CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("loss gradient directions and minimizer") {
  const RelativeParams p = make_params(1.0, 0.25, 1.0);
  auto loss = [&](double pos, double neg) {
    AnchorScores a;
    a.pos = pos;
    a.neg = {neg, neg};
    a.neg_norm = 2;
    return rpc_anchor_loss(a, p);
  };
  const double h = 1e-6;
  // dloss/dpos < 0 below the saturation point 1/beta.
  for (double pos : {-2.0, 0.0, 3.9})
    CHECK((loss(pos + h, 0.3) - loss(pos - h, 0.3)) / (2 * h) < 0.0);
  // dloss/dneg > 0 above -alpha/gamma.
  for (double neg : {-0.9, 0.0, 2.0})
    CHECK((loss(0.5, neg + h) - loss(0.5, neg - h)) / (2 * h) > 0.0);
  // Free-score minimizer sits at (1/beta, -alpha/gamma).
  const double best = loss(1.0 / p.beta, -p.alpha / p.gamma);
  for (double dp : {-0.2, 0.2})
    for (double dn : {-0.2, 0.2})
      CHECK(best <= loss(1.0 / p.beta + dp, -p.alpha / p.gamma + dn));
}
