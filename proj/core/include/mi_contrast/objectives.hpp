#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mic {

// Relative parameters (alpha, beta, gamma) plus the score temperature.
//
// alpha >= 0 and beta >= 0 admit the chi-squared corollary settings
// (alpha = beta = 0, gamma = 1); gamma >= 0 admits the parameter-sweep
// cells with gamma = 0, provided beta > 0. Operations that divide by
// beta or gamma check for the pole themselves and reject it.
struct RelativeParams {
  double alpha = 1.0;
  double beta = 1e-3;
  double gamma = 1.0;
  double tau = 1.0;

  // Throws std::invalid_argument on violation.
  void validate() const;

  // Lower end of the relative-ratio range, -alpha/gamma (-inf if gamma=0).
  double critic_floor() const;
  // Upper end, 1/beta (+inf if beta=0).
  double critic_ceil() const;
};

struct ScoreBatch {
  std::vector<double> pos;  // critic scores on joint samples
  std::vector<double> neg;  // critic scores on product-of-marginals samples

  void validate() const;  // nonempty, all finite
};

enum class Objective { RPC, DV, NWJ, JS, CPC, SMILE };

struct ObjectiveKind {
  Objective tag = Objective::RPC;
  double smile_clip = 0.0;  // meaningful only when tag == SMILE

  static ObjectiveKind rpc() { return {Objective::RPC, 0.0}; }
  static ObjectiveKind dv() { return {Objective::DV, 0.0}; }
  static ObjectiveKind nwj() { return {Objective::NWJ, 0.0}; }
  static ObjectiveKind js() { return {Objective::JS, 0.0}; }
  static ObjectiveKind cpc() { return {Objective::CPC, 0.0}; }
  static ObjectiveKind smile(double clip) { return {Objective::SMILE, clip}; }
};

std::string objective_name(const ObjectiveKind& kind);
ObjectiveKind objective_from_name(const std::string& name,
                                  double smile_clip = 5.0);

struct BoundReport {
  double j_upper;    // 1/(2 beta) + alpha^2/(2 gamma)
  double critic_lo;  // -alpha/gamma
  double critic_hi;  // 1/beta
  double var_bound;  // variance bound at the given sample counts
};

// Empirical RPC value:
//   mean(pos) - alpha*mean(neg) - beta/2*mean(pos^2) - gamma/2*mean(neg^2).
// No supremum here; the caller supplies scores from whatever critic.
double rpc_value(const ScoreBatch& batch, const RelativeParams& params);

// Importance-weighted variant: each sample contributes with the given
// weight, i.e. the positive-side expectation is mean(pos_w * pos) and so
// on. Used to evaluate both sides of the mixture rewriting on a single
// common sample set, where the agreement is exact algebra rather than a
// Monte-Carlo coincidence.
double rpc_value(std::span<const double> pos, std::span<const double> pos_w,
                 std::span<const double> neg, std::span<const double> neg_w,
                 const RelativeParams& params);

// DV, NWJ, JS, SMILE on a score batch (overflow-safe formulations).
// Rejects RPC and CPC (CPC needs the matrix form below).
double baseline_value(const ObjectiveKind& kind, const ScoreBatch& batch);

// In-batch CPC value of an NxN score matrix: row i is anchor i, the
// diagonal entry is the positive score. Always <= log N.
double cpc_value(const Eigen::MatrixXd& scores);

// Lemma-level optimum: f*(r) = (r - alpha) / (beta r + gamma), the
// relative density ratio. Monotone in r and bounded in
// [-alpha/gamma, 1/beta].
double optimal_critic(double density_ratio, const RelativeParams& params);

// Inverse map r = (alpha + gamma f) / (1 - beta f). Requires beta > 0 and
// f < 1/beta. Critic values below -alpha/gamma (a trained critic can
// transiently violate the theoretical range) clamp to ratio 0; each clamp
// increments *clamp_count when provided.
double invert_critic(double critic_value, const RelativeParams& params,
                     long* clamp_count = nullptr);

// I(X;Y) ~= mean of log density ratios over joint samples.
double mi_from_ratios(std::span<const double> log_ratios);

// Mixture rewriting (beta+gamma)/2 * E_{P'}[f*^2] over samples drawn from
// the mixture P' = beta/(beta+gamma) P_XY + gamma/(beta+gamma) P_X P_Y.
double mixture_form_value(std::span<const double> mixture_relative_ratios,
                          const RelativeParams& params);

// Same value formed from separate sample sets:
//   beta/2 * E_pos[f*^2] + gamma/2 * E_neg[f*^2].
double mixture_form_value(std::span<const double> pos_relative_ratios,
                          std::span<const double> neg_relative_ratios,
                          const RelativeParams& params);

// Importance-weighted variant matching the weighted rpc_value above.
double mixture_form_value(std::span<const double> pos_relative_ratios,
                          std::span<const double> pos_w,
                          std::span<const double> neg_relative_ratios,
                          std::span<const double> neg_w,
                          const RelativeParams& params);

// Analytic bounds: the value ceiling, the critic range, and the
// variance bound
//   1/n max{((2ag+ba^2)/(2g^2))^2, (1/(2b))^2}
// + 1/m max{(a^2/(2g))^2, ((2ab+g)/(2b^2))^2}.
// Requires beta > 0 and gamma > 0.
BoundReport bounds(const RelativeParams& params, std::size_t n,
                   std::size_t m);

// Gradient of the objective with respect to each score, for critics
// trained by gradient ascent. Returns the objective value.
double objective_score_grad(const ObjectiveKind& kind,
                            const RelativeParams& params,
                            const ScoreBatch& batch,
                            std::vector<double>& d_pos,
                            std::vector<double>& d_neg);

// Matrix-form gradient for CPC. Returns the objective value.
double cpc_score_grad(const Eigen::MatrixXd& scores, Eigen::MatrixXd& d_scores);

}  // namespace mic
