#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mi_contrast/objectives.hpp"

namespace mic {

// Scores for one anchor, already temperature-scaled (s = raw / tau):
// the positive-pair score plus the scores against the anchor's negative
// set, with the divisor used for the negative averages.
struct AnchorScores {
  double pos = 0.0;
  std::vector<double> neg;
  long neg_norm = 1;

  void validate() const;  // neg nonempty, neg_norm >= 1, all finite
};

// Per-anchor relative loss
//   -(pos - (alpha/neg_norm) sum(neg) - (beta/2) pos^2
//         - (gamma/(2 neg_norm)) sum(neg^2)).
double rpc_anchor_loss(const AnchorScores& a, const RelativeParams& params);

// In-batch loss over 2N augmented views. `pairing` maps each view index
// to its positive partner and must be a fixed-point-free involution.
// Scores are raw; the temperature division by params.tau happens here.
// Per anchor i with partner j, the negative sums run over every k != i
// (the partner j included) while the divisor stays 2(N-1); that term
// count / normalizer mismatch is deliberate and kept as stated.
double rpc_vision_batch_loss(const Eigen::MatrixXd& scores,
                             const std::vector<int>& pairing,
                             const RelativeParams& params);

// In-batch cross-entropy baseline on the same layout: softmax of the
// partner score against the 2N-1 candidates k != i, mean over anchors.
double cpc_vision_batch_loss(const Eigen::MatrixXd& scores,
                             const std::vector<int>& pairing,
                             double tau = 1.0);

}  // namespace mic
