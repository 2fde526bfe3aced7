#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mi_contrast/critic.hpp"
#include "mi_contrast/objectives.hpp"
#include "mi_contrast/tasks.hpp"

namespace mic {

// Staircase benchmark configuration: the true MI steps through
// `mi_levels`, holding each level for `steps_per_level` training steps.
struct BenchmarkConfig {
  int total_steps = 20000;
  int steps_per_level = 4000;
  std::vector<double> mi_levels = {2.0, 4.0, 6.0, 8.0, 10.0};
  int batch_n = 64;
  int batch_m = 64;
  int dim = 20;
  bool cubic = false;
  ObjectiveKind objective = ObjectiveKind::rpc();
  RelativeParams params;
  CriticConfig critic;  // input_dim is overridden to 2*dim
  OptimizerConfig opt;
  uint64_t master_seed = 0;
  // When a step produces a non-finite objective or parameter, training
  // freezes and the remaining rows record NaN. With abort_on_explosion
  // the loop also stops looping (rows are still padded to total_steps).
  bool abort_on_explosion = false;
  int summary_window = 500;  // final steps of each level feeding summaries

  void validate() const;
};

struct TraceRow {
  long step;          // 0-based
  double true_mi;
  double objective;   // objective value this step (NaN once exploded)
  double mi_estimate; // estimator-specific MI readout
  long clamped;       // ratio inversions clamped at either range end
};

struct LevelSummary {
  double level;     // true MI at this level
  double bias;      // mean(estimate) - true over the summary window
  double variance;  // population variance of the estimate over the window
};

struct EstimateTrace {
  std::vector<TraceRow> rows;
  std::vector<LevelSummary> levels;
  bool exploded = false;
  long nonfinite_steps = 0;
};

// Trains a fresh critic by stochastic gradient ascent on the configured
// objective, one fresh batch per step, and records the MI readout:
// RPC reads out through invert_critic + mi_from_ratios, CPC through the
// in-batch softmax value (its log-batch-size ceiling included), and the
// remaining objectives report their own value. Deterministic in
// master_seed.
EstimateTrace run_benchmark(const BenchmarkConfig& cfg);

// Same protocol with the analytic optimal critic substituted for the
// trained network: isolates the estimator math from optimization.
EstimateTrace oracle_benchmark(const BenchmarkConfig& cfg);

struct SweepGrid {
  std::vector<double> alpha_set = {0.0, 0.001, 1.0};
  std::vector<double> beta_set = {0.0, 0.001, 1.0};
  std::vector<double> gamma_set = {0.0, 0.001, 1.0};

  void validate() const;  // nonempty sets
};

struct SweepCell {
  double alpha, beta, gamma;
  double level;     // final staircase level
  double bias;      // final-level bias
  double variance;  // final-level variance
  std::string status;  // "ok" | "exploded" | "invalid"
};

// Runs the RPC staircase once per (alpha, beta, gamma) cell; cells with
// beta = gamma = 0 are marked invalid and skipped. Each cell derives its
// own seed from (master_seed, cell index), so results are independent of
// scheduling; `parallel` caps the worker thread count.
std::vector<SweepCell> run_sweep(const SweepGrid& grid,
                                 const BenchmarkConfig& base_cfg,
                                 int parallel = 1);

struct VarianceProbe {
  double empirical_var;  // sample variance of rpc_value over the repeats
  double bound;          // bounds().var_bound
  bool degenerate;       // repeats < 2
};

// Empirical variance of the RPC estimator at the analytic optimal critic:
// `repeats` independent (n, m) batches of the task, no training.
VarianceProbe variance_probe(const RelativeParams& params, int n, int m,
                             int repeats, const GaussianTask& task,
                             uint64_t seed);

// Exact schemas (floats %.9g):
//   trace: step,true_mi,objective,mi_estimate,clamped
//   sweep: alpha,beta,gamma,level,bias,variance,status
void write_trace_csv(const EstimateTrace& trace,
                     const std::filesystem::path& path);
EstimateTrace read_trace_csv(const std::filesystem::path& path);
void write_sweep_csv(const std::vector<SweepCell>& cells,
                     const std::filesystem::path& path);

// summary.json: per-level bias/variance plus run flags.
void write_summary_json(const EstimateTrace& trace,
                        const std::filesystem::path& path);

}  // namespace mic
