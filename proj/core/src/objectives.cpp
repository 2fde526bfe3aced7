#include "mi_contrast/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mi_contrast/numeric.hpp"

namespace mic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(std::span<const double> xs) { return compensated_mean(xs); }

double mean_sq(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double d = x * x;
    double t = sum + d;
    comp += (std::abs(sum) >= d) ? (sum - t) + d : (d - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(xs.size());
}

double weighted_mean(std::span<const double> xs, std::span<const double> ws,
                     bool square) {
  if (xs.size() != ws.size())
    throw std::invalid_argument("weight vector size mismatch");
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double d = ws[i] * (square ? xs[i] * xs[i] : xs[i]);
    double t = sum + d;
    comp += (std::abs(sum) >= std::abs(d)) ? (sum - t) + d : (d - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(xs.size());
}

}  // namespace

void RelativeParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("beta must be finite and >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("gamma must be finite and >= 0");
  if (beta == 0.0 && gamma == 0.0)
    throw std::invalid_argument("beta and gamma must not both be zero");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("tau must be finite and > 0");
}

double RelativeParams::critic_floor() const {
  return gamma > 0.0 ? -alpha / gamma : -kInf;
}

double RelativeParams::critic_ceil() const {
  return beta > 0.0 ? 1.0 / beta : kInf;
}

void ScoreBatch::validate() const {
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("score batch needs at least one positive and one negative score");
  if (!all_finite(pos) || !all_finite(neg))
    throw std::invalid_argument("score batch contains a non-finite score");
}

std::string objective_name(const ObjectiveKind& kind) {
  switch (kind.tag) {
    case Objective::RPC: return "rpc";
    case Objective::DV: return "dv";
    case Objective::NWJ: return "nwj";
    case Objective::JS: return "js";
    case Objective::CPC: return "cpc";
    case Objective::SMILE: return "smile";
  }
  return "?";
}

ObjectiveKind objective_from_name(const std::string& name, double smile_clip) {
  if (name == "rpc") return ObjectiveKind::rpc();
  if (name == "dv") return ObjectiveKind::dv();
  if (name == "nwj") return ObjectiveKind::nwj();
  if (name == "js") return ObjectiveKind::js();
  if (name == "cpc") return ObjectiveKind::cpc();
  if (name == "smile") return ObjectiveKind::smile(smile_clip);
  throw std::invalid_argument("unknown objective: " + name);
}

double rpc_value(const ScoreBatch& batch, const RelativeParams& params) {
  params.validate();
  batch.validate();
  return mean_of(batch.pos) - params.alpha * mean_of(batch.neg) -
         0.5 * params.beta * mean_sq(batch.pos) -
         0.5 * params.gamma * mean_sq(batch.neg);
}

double rpc_value(std::span<const double> pos, std::span<const double> pos_w,
                 std::span<const double> neg, std::span<const double> neg_w,
                 const RelativeParams& params) {
  params.validate();
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("empty score vector");
  return weighted_mean(pos, pos_w, false) -
         params.alpha * weighted_mean(neg, neg_w, false) -
         0.5 * params.beta * weighted_mean(pos, pos_w, true) -
         0.5 * params.gamma * weighted_mean(neg, neg_w, true);
}

double baseline_value(const ObjectiveKind& kind, const ScoreBatch& batch) {
  batch.validate();
  const double log_m = std::log(static_cast<double>(batch.neg.size()));
  switch (kind.tag) {
    case Objective::DV:
      return mean_of(batch.pos) - (log_sum_exp(batch.neg) - log_m);
    case Objective::NWJ: {
      // mean(exp(neg-1)) through log-sum-exp so large scores stay finite.
      const double log_mean = log_sum_exp(batch.neg) - 1.0 - log_m;
      return mean_of(batch.pos) - std::exp(log_mean);
    }
    case Objective::JS: {
      double acc_pos = 0.0;
      for (double s : batch.pos) acc_pos += -softplus(-s);
      double acc_neg = 0.0;
      for (double s : batch.neg) acc_neg += softplus(s);
      return acc_pos / static_cast<double>(batch.pos.size()) -
             acc_neg / static_cast<double>(batch.neg.size());
    }
    case Objective::SMILE: {
      if (!(kind.smile_clip >= 0.0))
        throw std::invalid_argument("smile clip must be >= 0");
      // clamp(exp(f), e^-c, e^c) == exp(clamp(f, -c, c))
      std::vector<double> clipped(batch.neg.size());
      for (std::size_t i = 0; i < batch.neg.size(); ++i)
        clipped[i] = std::clamp(batch.neg[i], -kind.smile_clip, kind.smile_clip);
      return mean_of(batch.pos) - (log_sum_exp(clipped) - log_m);
    }
    case Objective::RPC:
      throw std::invalid_argument("use rpc_value for the RPC objective");
    case Objective::CPC:
      throw std::invalid_argument("CPC needs the matrix form (cpc_value)");
  }
  throw std::invalid_argument("unreachable objective tag");
}

double cpc_value(const Eigen::MatrixXd& scores) {
  const auto n = scores.rows();
  if (n < 2 || scores.cols() != n)
    throw std::invalid_argument("CPC needs a square score matrix with N >= 2");
  if (!scores.allFinite())
    throw std::invalid_argument("CPC score matrix contains a non-finite entry");
  const double log_n = std::log(static_cast<double>(n));
  std::vector<double> row(static_cast<std::size_t>(n));
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      row[static_cast<std::size_t>(j)] = scores(i, j);
    terms[static_cast<std::size_t>(i)] = scores(i, i) - log_sum_exp(row) + log_n;
  }
  return compensated_mean(terms);
}

double optimal_critic(double density_ratio, const RelativeParams& params) {
  params.validate();
  if (density_ratio < 0.0)
    throw std::invalid_argument("density ratio must be >= 0");
  const double denom = params.beta * density_ratio + params.gamma;
  if (denom <= 0.0)
    throw std::invalid_argument("optimal critic undefined at beta*r+gamma = 0");
  if (std::isinf(density_ratio)) {
    // limit r -> inf
    return params.beta > 0.0 ? 1.0 / params.beta : kInf;
  }
  // Extended precision keeps the round trip through invert_critic tight
  // near the range endpoints, where f carries r only in its low bits.
  const long double r = density_ratio;
  return static_cast<double>(
      (r - static_cast<long double>(params.alpha)) /
      (static_cast<long double>(params.beta) * r +
       static_cast<long double>(params.gamma)));
}

double invert_critic(double critic_value, const RelativeParams& params,
                     long* clamp_count) {
  params.validate();
  if (!(params.beta > 0.0))
    throw std::invalid_argument("critic inversion requires beta > 0");
  if (critic_value >= 1.0 / params.beta)
    throw std::invalid_argument("critic value at or above 1/beta: ratio diverges");
  if (critic_value < params.critic_floor()) {
    if (clamp_count) ++*clamp_count;
    return 0.0;
  }
  const long double f = critic_value;
  return static_cast<double>(
      (static_cast<long double>(params.alpha) +
       static_cast<long double>(params.gamma) * f) /
      (1.0L - static_cast<long double>(params.beta) * f));
}

double mi_from_ratios(std::span<const double> log_ratios) {
  if (log_ratios.empty())
    throw std::invalid_argument("mi_from_ratios: empty input");
  if (!all_finite(log_ratios))
    throw std::invalid_argument("mi_from_ratios: non-finite log ratio");
  return compensated_mean(log_ratios);
}

double mixture_form_value(std::span<const double> mixture_relative_ratios,
                          const RelativeParams& params) {
  params.validate();
  if (mixture_relative_ratios.empty())
    throw std::invalid_argument("mixture_form_value: empty input");
  return 0.5 * (params.beta + params.gamma) * mean_sq(mixture_relative_ratios);
}

double mixture_form_value(std::span<const double> pos_relative_ratios,
                          std::span<const double> neg_relative_ratios,
                          const RelativeParams& params) {
  params.validate();
  if (pos_relative_ratios.empty() || neg_relative_ratios.empty())
    throw std::invalid_argument("mixture_form_value: empty input");
  return 0.5 * params.beta * mean_sq(pos_relative_ratios) +
         0.5 * params.gamma * mean_sq(neg_relative_ratios);
}

double mixture_form_value(std::span<const double> pos_relative_ratios,
                          std::span<const double> pos_w,
                          std::span<const double> neg_relative_ratios,
                          std::span<const double> neg_w,
                          const RelativeParams& params) {
  params.validate();
  if (pos_relative_ratios.empty() || neg_relative_ratios.empty())
    throw std::invalid_argument("mixture_form_value: empty input");
  return 0.5 * params.beta * weighted_mean(pos_relative_ratios, pos_w, true) +
         0.5 * params.gamma * weighted_mean(neg_relative_ratios, neg_w, true);
}

BoundReport bounds(const RelativeParams& params, std::size_t n,
                   std::size_t m) {
  params.validate();
  if (!(params.beta > 0.0))
    throw std::invalid_argument("bounds undefined at beta = 0");
  if (!(params.gamma > 0.0))
    throw std::invalid_argument("bounds undefined at gamma = 0");
  if (n < 1 || m < 1) throw std::invalid_argument("need n >= 1 and m >= 1");
  const double a = params.alpha, b = params.beta, g = params.gamma;
  BoundReport report;
  report.j_upper = 1.0 / (2.0 * b) + a * a / (2.0 * g);
  report.critic_lo = -a / g;
  report.critic_hi = 1.0 / b;
  const double pos_lo = (2.0 * a * g + b * a * a) / (2.0 * g * g);
  const double pos_hi = 1.0 / (2.0 * b);
  const double neg_lo = a * a / (2.0 * g);
  const double neg_hi = (2.0 * a * b + g) / (2.0 * b * b);
  report.var_bound =
      std::max(pos_lo * pos_lo, pos_hi * pos_hi) / static_cast<double>(n) +
      std::max(neg_lo * neg_lo, neg_hi * neg_hi) / static_cast<double>(m);
  return report;
}

double objective_score_grad(const ObjectiveKind& kind,
                            const RelativeParams& params,
                            const ScoreBatch& batch,
                            std::vector<double>& d_pos,
                            std::vector<double>& d_neg) {
  batch.validate();
  const double n = static_cast<double>(batch.pos.size());
  const double m = static_cast<double>(batch.neg.size());
  d_pos.assign(batch.pos.size(), 0.0);
  d_neg.assign(batch.neg.size(), 0.0);

  switch (kind.tag) {
    case Objective::RPC: {
      params.validate();
      for (std::size_t i = 0; i < batch.pos.size(); ++i)
        d_pos[i] = (1.0 - params.beta * batch.pos[i]) / n;
      for (std::size_t j = 0; j < batch.neg.size(); ++j)
        d_neg[j] = (-params.alpha - params.gamma * batch.neg[j]) / m;
      return rpc_value(batch, params);
    }
    case Objective::DV: {
      const double lse = log_sum_exp(batch.neg);
      for (std::size_t i = 0; i < batch.pos.size(); ++i) d_pos[i] = 1.0 / n;
      for (std::size_t j = 0; j < batch.neg.size(); ++j)
        d_neg[j] = -std::exp(batch.neg[j] - lse);
      return baseline_value(kind, batch);
    }
    case Objective::NWJ: {
      for (std::size_t i = 0; i < batch.pos.size(); ++i) d_pos[i] = 1.0 / n;
      for (std::size_t j = 0; j < batch.neg.size(); ++j)
        d_neg[j] = -std::exp(batch.neg[j] - 1.0) / m;
      return baseline_value(kind, batch);
    }
    case Objective::JS: {
      // d/ds [-softplus(-s)] = sigmoid(-s)
      for (std::size_t i = 0; i < batch.pos.size(); ++i)
        d_pos[i] = 1.0 / (1.0 + std::exp(batch.pos[i])) / n;
      for (std::size_t j = 0; j < batch.neg.size(); ++j)
        d_neg[j] = -1.0 / (1.0 + std::exp(-batch.neg[j])) / m;
      return baseline_value(kind, batch);
    }
    case Objective::SMILE: {
      std::vector<double> clipped(batch.neg.size());
      for (std::size_t j = 0; j < batch.neg.size(); ++j)
        clipped[j] = std::clamp(batch.neg[j], -kind.smile_clip, kind.smile_clip);
      const double lse = log_sum_exp(clipped);
      for (std::size_t i = 0; i < batch.pos.size(); ++i) d_pos[i] = 1.0 / n;
      for (std::size_t j = 0; j < batch.neg.size(); ++j) {
        const bool interior = std::abs(batch.neg[j]) < kind.smile_clip;
        d_neg[j] = interior ? -std::exp(clipped[j] - lse) : 0.0;
      }
      return baseline_value(kind, batch);
    }
    case Objective::CPC:
      throw std::invalid_argument("CPC gradients need the matrix form");
  }
  throw std::invalid_argument("unreachable objective tag");
}

double cpc_score_grad(const Eigen::MatrixXd& scores,
                      Eigen::MatrixXd& d_scores) {
  const auto n = scores.rows();
  if (n < 2 || scores.cols() != n)
    throw std::invalid_argument("CPC needs a square score matrix with N >= 2");
  d_scores.resize(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double log_n = std::log(static_cast<double>(n));
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_max = scores.row(i).maxCoeff();
    Eigen::ArrayXd ex = (scores.row(i).array() - row_max).exp();
    const double denom = ex.sum();
    value += scores(i, i) - (row_max + std::log(denom)) + log_n;
    d_scores.row(i) = (-(ex / denom) * inv_n).matrix();
    d_scores(i, i) += inv_n;
  }
  return value * inv_n;
}

}  // namespace mic
