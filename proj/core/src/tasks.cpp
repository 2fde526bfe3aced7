#include "mi_contrast/tasks.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mi_contrast/io.hpp"

namespace mic {

void GaussianTask::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("rho must lie in [0, 1)");
}

PairBatch sample(const GaussianTask& task, int n, int m, NormalSampler& rng) {
  task.validate();
  if (n < 1 || m < 1) throw std::invalid_argument("need n >= 1 and m >= 1");
  const int d = task.dim;
  const double scale = std::sqrt(1.0 - task.rho * task.rho);

  PairBatch batch;
  batch.joint_x.resize(n, d);
  batch.joint_y.resize(n, d);
  batch.prod_x.resize(m, d);
  batch.prod_y.resize(m, d);

  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) batch.joint_x(i, k) = rng();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      batch.joint_y(i, k) = task.rho * batch.joint_x(i, k) + scale * rng();
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < d; ++k) batch.prod_x(j, k) = rng();
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < d; ++k) batch.prod_y(j, k) = rng();

  if (task.cubic) {
    batch.joint_y = batch.joint_y.array().cube();
    batch.prod_y = batch.prod_y.array().cube();
  }
  return batch;
}

double ground_truth_mi(const GaussianTask& task) {
  task.validate();
  return -0.5 * task.dim * std::log1p(-task.rho * task.rho);
}

double rho_for_mi(double mi, int dim) {
  if (mi < 0.0) throw std::invalid_argument("mi must be >= 0");
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  return std::sqrt(-std::expm1(-2.0 * mi / dim));
}

double analytic_log_ratio(const GaussianTask& task, std::span<const double> x,
                          std::span<const double> y_pre_cubic) {
  task.validate();
  if (x.size() != static_cast<std::size_t>(task.dim) ||
      y_pre_cubic.size() != static_cast<std::size_t>(task.dim))
    throw std::invalid_argument("point dimension mismatch");
  const double r = task.rho;
  const double one_minus = 1.0 - r * r;
  double acc = 0.0;
  for (int k = 0; k < task.dim; ++k) {
    const double xv = x[k], yv = y_pre_cubic[k];
    acc += -(r * r * xv * xv - 2.0 * r * xv * yv + r * r * yv * yv) /
           (2.0 * one_minus);
  }
  return acc - 0.5 * task.dim * std::log(one_minus);
}

std::vector<double> relative_ratio_curve(double beta,
                                         std::span<const double> grid) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw std::invalid_argument("beta must lie in [0, 1)");
  auto normal_pdf = [](double x, double mu) {
    return std::exp(-0.5 * (x - mu) * (x - mu)) /
           std::sqrt(2.0 * std::numbers::pi);
  };
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) {
    const double p = normal_pdf(x, 0.0);
    const double q = normal_pdf(x, 0.5);
    out.push_back(p / (beta * p + (1.0 - beta) * q));
  }
  return out;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// Legendre polynomial.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

// Integral of p(x,y)^2 / (p(x) p(y)) over [-L, L]^2.
double chi2_box_integral(double rho, double box, int n_nodes) {
  std::vector<double> nodes, weights;
  gauss_legendre(n_nodes, nodes, weights);
  const double one_minus = 1.0 - rho * rho;
  // integrand = q(x,y) * r(x,y)^2 with q the product of standard normals,
  // assembled in log space.
  double acc = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const double x = box * nodes[i];
    for (int j = 0; j < n_nodes; ++j) {
      const double y = box * nodes[j];
      const double log_r =
          -(rho * rho * x * x - 2.0 * rho * x * y + rho * rho * y * y) /
              (2.0 * one_minus) -
          0.5 * std::log(one_minus);
      const double log_q =
          -0.5 * (x * x + y * y) - std::log(2.0 * std::numbers::pi);
      acc += weights[i] * weights[j] * std::exp(log_q + 2.0 * log_r);
    }
  }
  return acc * box * box;
}

}  // namespace

double chi2_oracle_1d(double rho) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("rho must lie in [0, 1)");
  if (rho == 0.0) return 0.0;
  // Box sized from the widest principal axis of the integrand: the
  // smallest eigenvalue of its combined precision matrix is (1-rho)/(1+rho).
  const double lambda_min = (1.0 - rho) / (1.0 + rho);
  const double box = 10.0 / std::sqrt(lambda_min);
  double prev = chi2_box_integral(rho, box, 200);
  for (int n_nodes : {400, 800}) {
    const double cur = chi2_box_integral(rho, box, n_nodes);
    if (std::abs(cur - prev) <= 1e-10 * std::max(1.0, std::abs(cur)))
      return cur - 1.0;
    prev = cur;
  }
  // One last refinement on a larger box to rule out tail loss.
  const double wide = chi2_box_integral(rho, 1.3 * box, 1200);
  if (std::abs(wide - prev) <= 1e-9 * std::max(1.0, std::abs(wide)))
    return wide - 1.0;
  throw std::runtime_error("chi2_oracle_1d: quadrature did not converge");
}

void dump_batch_csv(const PairBatch& batch, const std::filesystem::path& out) {
  const auto d = batch.joint_x.cols();
  std::string text = "set";
  for (Eigen::Index k = 0; k < d; ++k) text += ",x" + std::to_string(k);
  for (Eigen::Index k = 0; k < d; ++k) text += ",y" + std::to_string(k);
  text += "\n";
  char buf[64];
  auto append_rows = [&](const char* tag, const Eigen::MatrixXd& xs,
                         const Eigen::MatrixXd& ys) {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      text += tag;
      for (Eigen::Index k = 0; k < d; ++k) {
        std::snprintf(buf, sizeof buf, ",%.9g", xs(i, k));
        text += buf;
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        std::snprintf(buf, sizeof buf, ",%.9g", ys(i, k));
        text += buf;
      }
      text += "\n";
    }
  };
  append_rows("joint", batch.joint_x, batch.joint_y);
  append_rows("product", batch.prod_x, batch.prod_y);
  write_file_atomic(out, text);
}

}  // namespace mic
