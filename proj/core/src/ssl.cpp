#include "mi_contrast/ssl.hpp"

#include <cmath>
#include <stdexcept>

#include "mi_contrast/numeric.hpp"

namespace mic {

void AnchorScores::validate() const {
  if (neg.empty()) throw std::invalid_argument("neg must be nonempty");
  if (neg_norm < 1) throw std::invalid_argument("neg_norm must be >= 1");
  if (!std::isfinite(pos) || !all_finite(neg))
    throw std::invalid_argument("anchor scores must be finite");
}

double rpc_anchor_loss(const AnchorScores& a, const RelativeParams& params) {
  a.validate();
  params.validate();
  CompensatedSum sum_neg, sum_neg_sq;
  for (double s : a.neg) {
    sum_neg.add(s);
    sum_neg_sq.add(s * s);
  }
  const double norm = static_cast<double>(a.neg_norm);
  return -(a.pos - params.alpha / norm * sum_neg.value() -
           0.5 * params.beta * a.pos * a.pos -
           0.5 * params.gamma / norm * sum_neg_sq.value());
}

namespace {

int check_pairing(const Eigen::MatrixXd& scores,
                  const std::vector<int>& pairing) {
  const int two_n = static_cast<int>(scores.rows());
  if (scores.cols() != two_n || two_n < 4 || two_n % 2 != 0)
    throw std::invalid_argument("scores must be 2Nx2N with N >= 2");
  if (static_cast<int>(pairing.size()) != two_n)
    throw std::invalid_argument("pairing size must match score rows");
  for (int i = 0; i < two_n; ++i) {
    const int j = pairing[i];
    if (j < 0 || j >= two_n || j == i || pairing[j] != i)
      throw std::invalid_argument(
          "pairing must be a fixed-point-free involution");
  }
  if (!scores.allFinite())
    throw std::invalid_argument("scores must be finite");
  return two_n;
}

}  // namespace

double rpc_vision_batch_loss(const Eigen::MatrixXd& scores,
                             const std::vector<int>& pairing,
                             const RelativeParams& params) {
  const int two_n = check_pairing(scores, pairing);
  params.validate();
  const double norm = static_cast<double>(two_n - 2);  // 2(N-1)
  CompensatedSum total;
  for (int i = 0; i < two_n; ++i) {
    AnchorScores a;
    a.pos = scores(i, pairing[i]) / params.tau;
    a.neg.reserve(two_n - 1);
    for (int k = 0; k < two_n; ++k)
      if (k != i) a.neg.push_back(scores(i, k) / params.tau);
    a.neg_norm = static_cast<long>(norm);
    total.add(rpc_anchor_loss(a, params));
  }
  return total.value() / two_n;
}

double cpc_vision_batch_loss(const Eigen::MatrixXd& scores,
                             const std::vector<int>& pairing, double tau) {
  const int two_n = check_pairing(scores, pairing);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  CompensatedSum total;
  std::vector<double> row;
  row.reserve(two_n - 1);
  for (int i = 0; i < two_n; ++i) {
    row.clear();
    for (int k = 0; k < two_n; ++k)
      if (k != i) row.push_back(scores(i, k) / tau);
    total.add(log_sum_exp(row) - scores(i, pairing[i]) / tau);
  }
  return total.value() / two_n;
}

}  // namespace mic
