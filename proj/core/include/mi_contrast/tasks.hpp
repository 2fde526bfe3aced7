#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "mi_contrast/rng.hpp"

namespace mic {

// Correlated-Gaussian synthetic task: X, Y are d-dimensional with
// per-dimension correlation rho; the cubic variant maps y -> y^3
// elementwise (a bijection, so the mutual information is unchanged).
struct GaussianTask {
  int dim = 20;
  double rho = 0.0;
  bool cubic = false;

  void validate() const;  // 0 <= rho < 1, dim >= 1
};

// n joint-sample rows and m product-of-marginals rows.
struct PairBatch {
  Eigen::MatrixXd joint_x, joint_y;  // n x d
  Eigen::MatrixXd prod_x, prod_y;    // m x d
};

// Joint rows use y = rho*x + sqrt(1-rho^2)*eps per dimension; product rows
// pair x with an independently drawn y. The cubic map applies after
// pairing. Draw order is fixed (joint x, joint eps, product x, product y,
// all row-major), so a seed pins the batch bytes.
PairBatch sample(const GaussianTask& task, int n, int m, NormalSampler& rng);

// Exact mutual information, -(d/2) log(1 - rho^2) nats.
double ground_truth_mi(const GaussianTask& task);

// Inverse: the rho giving a target MI at dimension d.
double rho_for_mi(double mi, int dim);

// Exact log density ratio log p(x,y)/(p(x)p(y)) at a joint point, with y
// in pre-cubic coordinates. Per dimension:
//   -(rho^2 x^2 - 2 rho x y + rho^2 y^2) / (2 (1-rho^2)) - log(1-rho^2)/2.
double analytic_log_ratio(const GaussianTask& task,
                          std::span<const double> x,
                          std::span<const double> y_pre_cubic);

// Relative density ratio r_beta(x) = p/(beta p + (1-beta) q) with
// p ~ N(0,1) and q ~ N(0.5,1), evaluated on a grid. Bounded by 1/beta for
// beta > 0; the beta = 0 curve is the unbounded plain ratio.
std::vector<double> relative_ratio_curve(double beta,
                                         std::span<const double> grid);

// chi^2 divergence between the 1-d joint and the product of marginals,
// computed by numerical integration of p(x,y)^2/(p(x)p(y)) on expanding
// tensor Gauss-Legendre grids until successive refinements agree.
// Throws std::runtime_error if the refinements do not converge.
double chi2_oracle_1d(double rho);

// Columnar CSV dump; header `set,x0..x{d-1},y0..y{d-1}`, one row per
// sample with set = joint | product.
void dump_batch_csv(const PairBatch& batch, const std::filesystem::path& out);

}  // namespace mic
