#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace mic {

// Neumaier-compensated summation. Objective values feed variance
// statistics, so plain accumulation error is not acceptable.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

inline double compensated_mean(std::span<const double> xs) {
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Streaming form of the same summation for callers that accumulate
// term by term.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Population variance with a two-pass compensated formula.
inline double population_variance(std::span<const double> xs) {
  const double mu = compensated_mean(xs);
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double d = (x - mu) * (x - mu);
    double t = sum + d;
    comp += (std::abs(sum) >= d) ? (sum - t) + d : (d - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(xs.size());
}

// Unbiased sample variance (divides by k-1).
inline double sample_variance(std::span<const double> xs) {
  const auto k = static_cast<double>(xs.size());
  return population_variance(xs) * k / (k - 1.0);
}

// log(sum(exp(x))) without overflow for |x| up to the double range.
inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// log(1 + e^x), stable for large |x|.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace mic
