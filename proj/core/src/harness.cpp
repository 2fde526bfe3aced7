#include "mi_contrast/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "mi_contrast/io.hpp"
#include "mi_contrast/numeric.hpp"
#include "mi_contrast/rng.hpp"

namespace mic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Distinct RNG streams per run, split off the master seed.
enum Stream : uint64_t { kDataStream = 0, kCriticStream = 1 };

}  // namespace

void BenchmarkConfig::validate() const {
  if (mi_levels.empty()) throw std::invalid_argument("mi_levels empty");
  if (steps_per_level < 1)
    throw std::invalid_argument("steps_per_level must be >= 1");
  if (total_steps !=
      steps_per_level * static_cast<int>(mi_levels.size()))
    throw std::invalid_argument(
        "total_steps must equal steps_per_level * |mi_levels|");
  if (batch_n < 1 || batch_m < 1)
    throw std::invalid_argument("batch sizes must be >= 1");
  if (objective.tag == Objective::CPC && batch_n < 2)
    throw std::invalid_argument("CPC needs batch_n >= 2");
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (summary_window < 1 || summary_window > steps_per_level)
    throw std::invalid_argument(
        "summary_window must lie in [1, steps_per_level]");
  for (double mi : mi_levels)
    if (!(mi >= 0.0)) throw std::invalid_argument("mi levels must be >= 0");
  params.validate();
  opt.validate();
}

namespace {

// Ratio readout from a critic score. beta > 0 goes through the inversion
// (scores at or above the 1/beta pole clamp just below it); the beta = 0
// limit of the same map is r = alpha + gamma*f, clamped at zero. Both
// clamp kinds count. Ratios clamped all the way to zero return 0.
double ratio_from_score(double f, const RelativeParams& params,
                        long& clamped) {
  if (params.beta > 0.0) {
    const double hi = params.critic_ceil() * (1.0 - 1e-9);
    if (f > hi) {
      f = hi;
      ++clamped;
    }
    return invert_critic(f, params, &clamped);
  }
  double r = params.alpha + params.gamma * f;
  if (r < 0.0) {
    r = 0.0;
    ++clamped;
  }
  return r;
}

double mi_readout(const ObjectiveKind& kind, const RelativeParams& params,
                  std::span<const double> pos_scores, double objective_value,
                  long& clamped) {
  if (kind.tag == Objective::RPC) {
    // Zero-clamped ratios have log -inf; they are censored from the mean
    // (the clamped column records how many) rather than floored at an
    // arbitrary huge penalty that would swamp the readout.
    std::vector<double> log_ratios;
    log_ratios.reserve(pos_scores.size());
    for (double f : pos_scores) {
      const double r = ratio_from_score(f, params, clamped);
      if (r > 0.0) log_ratios.push_back(std::log(r));
    }
    if (log_ratios.empty()) return -std::numeric_limits<double>::infinity();
    return mi_from_ratios(log_ratios);
  }
  // CPC's in-batch value already carries its log-batch-size ceiling;
  // DV/NWJ/JS/SMILE read out their own value.
  return objective_value;
}

GaussianTask task_for_level(const BenchmarkConfig& cfg, int step) {
  const int levels = static_cast<int>(cfg.mi_levels.size());
  const int idx = std::min(step / cfg.steps_per_level, levels - 1);
  GaussianTask task;
  task.dim = cfg.dim;
  task.rho = rho_for_mi(cfg.mi_levels[idx], cfg.dim);
  task.cubic = cfg.cubic;
  return task;
}

double true_mi_at(const BenchmarkConfig& cfg, int step) {
  const int levels = static_cast<int>(cfg.mi_levels.size());
  return cfg.mi_levels[std::min(step / cfg.steps_per_level, levels - 1)];
}

Eigen::MatrixXd paired_inputs(const Eigen::MatrixXd& xs,
                              const Eigen::MatrixXd& ys) {
  Eigen::MatrixXd inputs(xs.rows(), xs.cols() + ys.cols());
  inputs << xs, ys;
  return inputs;
}

// All x rows against all y rows: row i*n_y + j is (x_i, y_j).
Eigen::MatrixXd cross_inputs(const Eigen::MatrixXd& xs,
                             const Eigen::MatrixXd& ys) {
  const Eigen::Index nx = xs.rows(), ny = ys.rows(), d = xs.cols();
  Eigen::MatrixXd inputs(nx * ny, 2 * d);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      inputs.block(i * ny + j, 0, 1, d) = xs.row(i);
      inputs.block(i * ny + j, d, 1, d) = ys.row(j);
    }
  return inputs;
}

void finish_levels(const BenchmarkConfig& cfg, EstimateTrace& trace) {
  const int w = cfg.summary_window;
  for (std::size_t l = 0; l < cfg.mi_levels.size(); ++l) {
    const long end = static_cast<long>(l + 1) * cfg.steps_per_level;
    std::vector<double> window;
    window.reserve(w);
    for (long s = end - w; s < end; ++s)
      window.push_back(trace.rows[static_cast<std::size_t>(s)].mi_estimate);
    LevelSummary summary;
    summary.level = cfg.mi_levels[l];
    summary.bias = compensated_mean(window) - summary.level;
    summary.variance = population_variance(window);
    trace.levels.push_back(summary);
  }
}

}  // namespace

EstimateTrace run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  NormalSampler data_rng(derive_stream_seed(cfg.master_seed, kDataStream));
  CriticConfig critic_cfg = cfg.critic;
  critic_cfg.input_dim = 2 * cfg.dim;
  Critic critic(critic_cfg, derive_stream_seed(cfg.master_seed, kCriticStream));
  AdamOptimizer optimizer(critic.parameter_count(), cfg.opt);

  EstimateTrace trace;
  trace.rows.reserve(cfg.total_steps);
  bool frozen = false;
  const bool is_cpc = cfg.objective.tag == Objective::CPC;

  for (int step = 0; step < cfg.total_steps; ++step) {
    const double true_mi = true_mi_at(cfg, step);
    if (frozen) {
      trace.rows.push_back({step, true_mi, kNaN, kNaN, 0});
      ++trace.nonfinite_steps;
      continue;
    }

    const GaussianTask task = task_for_level(cfg, step);
    PairBatch batch =
        sample(task, cfg.batch_n, is_cpc ? 1 : cfg.batch_m, data_rng);
    if (cfg.cubic) {
      // Cubed coordinates are heavy-tailed (std sqrt(15), huge kurtosis),
      // which starves critic training. A signed cube root standardizes
      // them, and as a fixed per-coordinate bijection leaves MI intact.
      const auto cbrt1 = [](double v) { return std::cbrt(v); };
      batch.joint_y = batch.joint_y.unaryExpr(cbrt1).eval();
      batch.prod_y = batch.prod_y.unaryExpr(cbrt1).eval();
    }

    double value = kNaN, estimate = kNaN;
    long clamped = 0;
    Critic::Cache cache;
    Eigen::VectorXd d_scores;
    bool scored = false;

    if (is_cpc) {
      const Eigen::Index n = batch.joint_x.rows();
      const Eigen::VectorXd scores =
          critic.forward(cross_inputs(batch.joint_x, batch.joint_y), cache);
      if (scores.allFinite()) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j) m(i, j) = scores(i * n + j);
        Eigen::MatrixXd d_m;
        value = cpc_score_grad(m, d_m);
        estimate = value;
        d_scores.resize(n * n);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j) d_scores(i * n + j) = d_m(i, j);
        scored = true;
      }
    } else {
      const Eigen::Index n = batch.joint_x.rows(), m = batch.prod_x.rows();
      Eigen::MatrixXd inputs(n + m, 2 * cfg.dim);
      inputs.topRows(n) = paired_inputs(batch.joint_x, batch.joint_y);
      inputs.bottomRows(m) = paired_inputs(batch.prod_x, batch.prod_y);
      const Eigen::VectorXd scores = critic.forward(inputs, cache);
      if (scores.allFinite()) {
        ScoreBatch sb;
        sb.pos.assign(scores.data(), scores.data() + n);
        sb.neg.assign(scores.data() + n, scores.data() + n + m);
        std::vector<double> d_pos, d_neg;
        value = objective_score_grad(cfg.objective, cfg.params, sb, d_pos,
                                     d_neg);
        estimate = mi_readout(cfg.objective, cfg.params, sb.pos, value, clamped);
        d_scores.resize(n + m);
        for (Eigen::Index i = 0; i < n; ++i) d_scores(i) = d_pos[i];
        for (Eigen::Index j = 0; j < m; ++j) d_scores(n + j) = d_neg[j];
        scored = true;
      }
    }

    if (!scored || !std::isfinite(value)) {
      trace.exploded = true;
      frozen = true;
      trace.rows.push_back({step, true_mi, kNaN, kNaN, 0});
      ++trace.nonfinite_steps;
      if (cfg.abort_on_explosion) {
        for (int s = step + 1; s < cfg.total_steps; ++s) {
          trace.rows.push_back({s, true_mi_at(cfg, s), kNaN, kNaN, 0});
          ++trace.nonfinite_steps;
        }
        break;
      }
      continue;
    }

    trace.rows.push_back({step, true_mi, value, estimate, clamped});

    // Ascent step: Adam minimizes, so feed the negated objective gradient.
    const Eigen::VectorXd grads = critic.backward(cache, d_scores);
    optimizer.step(critic.parameters(), -grads);
    if (!critic.parameters().allFinite()) {
      trace.exploded = true;
      frozen = true;
    }
  }

  finish_levels(cfg, trace);
  return trace;
}

EstimateTrace oracle_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  NormalSampler data_rng(derive_stream_seed(cfg.master_seed, kDataStream));

  EstimateTrace trace;
  trace.rows.reserve(cfg.total_steps);
  const bool is_cpc = cfg.objective.tag == Objective::CPC;

  for (int step = 0; step < cfg.total_steps; ++step) {
    const double true_mi = true_mi_at(cfg, step);
    GaussianTask task = task_for_level(cfg, step);
    // The analytic ratio is invariant under the cubic bijection and
    // there is no learned critic consuming the raw data, so the oracle
    // samples in pre-cubic coordinates directly.
    task.cubic = false;
    const PairBatch batch =
        sample(task, cfg.batch_n, is_cpc ? 1 : cfg.batch_m, data_rng);

    auto oracle_score = [&](const Eigen::MatrixXd& xs, Eigen::Index i,
                            const Eigen::MatrixXd& ys, Eigen::Index j) {
      std::vector<double> xv(task.dim), yv(task.dim);
      for (int k = 0; k < task.dim; ++k) {
        xv[k] = xs(i, k);
        yv[k] = ys(j, k);
      }
      // exp can overflow for extreme tail points; cap the exponent, the
      // relative ratio saturates at 1/beta anyway.
      const double log_r =
          std::min(analytic_log_ratio(task, xv, yv), 700.0);
      return optimal_critic(std::exp(log_r), cfg.params);
    };

    double value, estimate;
    long clamped = 0;
    if (is_cpc) {
      const Eigen::Index n = batch.joint_x.rows();
      Eigen::MatrixXd m(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          m(i, j) = oracle_score(batch.joint_x, i, batch.joint_y, j);
      value = cpc_value(m);
      estimate = value;
    } else {
      const Eigen::Index n = batch.joint_x.rows(), mm = batch.prod_x.rows();
      ScoreBatch sb;
      sb.pos.resize(n);
      sb.neg.resize(mm);
      for (Eigen::Index i = 0; i < n; ++i)
        sb.pos[i] = oracle_score(batch.joint_x, i, batch.joint_y, i);
      for (Eigen::Index j = 0; j < mm; ++j)
        sb.neg[j] = oracle_score(batch.prod_x, j, batch.prod_y, j);
      value = cfg.objective.tag == Objective::RPC
                  ? rpc_value(sb, cfg.params)
                  : baseline_value(cfg.objective, sb);
      estimate = mi_readout(cfg.objective, cfg.params, sb.pos, value, clamped);
    }
    trace.rows.push_back({step, true_mi, value, estimate, clamped});
  }

  finish_levels(cfg, trace);
  return trace;
}

void SweepGrid::validate() const {
  if (alpha_set.empty() || beta_set.empty() || gamma_set.empty())
    throw std::invalid_argument("sweep sets must be nonempty");
}

std::vector<SweepCell> run_sweep(const SweepGrid& grid,
                                 const BenchmarkConfig& base_cfg,
                                 int parallel) {
  grid.validate();
  base_cfg.validate();
  if (parallel < 1) throw std::invalid_argument("parallel must be >= 1");

  std::vector<SweepCell> cells;
  for (double a : grid.alpha_set)
    for (double b : grid.beta_set)
      for (double g : grid.gamma_set)
        cells.push_back({a, b, g, base_cfg.mi_levels.back(), kNaN, kNaN, ""});

  auto run_cell = [&](std::size_t idx) {
    SweepCell& cell = cells[idx];
    if (cell.beta == 0.0 && cell.gamma == 0.0) {
      cell.status = "invalid";
      return;
    }
    BenchmarkConfig cfg = base_cfg;
    cfg.objective = ObjectiveKind::rpc();
    cfg.params.alpha = cell.alpha;
    cfg.params.beta = cell.beta;
    cfg.params.gamma = cell.gamma;
    cfg.master_seed = derive_stream_seed(base_cfg.master_seed, idx);
    const EstimateTrace trace = run_benchmark(cfg);
    const LevelSummary& last = trace.levels.back();
    cell.level = last.level;
    cell.bias = last.bias;
    cell.variance = last.variance;
    cell.status = trace.exploded ? "exploded" : "ok";
  };

  const int workers =
      std::min<int>(parallel, static_cast<int>(cells.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size();
             i = next.fetch_add(1))
          run_cell(i);
      });
    for (auto& t : pool) t.join();
  }
  return cells;
}

VarianceProbe variance_probe(const RelativeParams& params, int n, int m,
                             int repeats, const GaussianTask& task,
                             uint64_t seed) {
  params.validate();
  task.validate();
  if (n < 1 || m < 1 || repeats < 1)
    throw std::invalid_argument("n, m, repeats must be >= 1");
  GaussianTask raw = task;
  raw.cubic = false;  // oracle path works in pre-cubic coordinates

  std::vector<double> values(repeats);
  std::vector<double> xv(raw.dim), yv(raw.dim);
  for (int rep = 0; rep < repeats; ++rep) {
    NormalSampler rng(derive_stream_seed(seed, static_cast<uint64_t>(rep)));
    const PairBatch batch = sample(raw, n, m, rng);
    ScoreBatch sb;
    sb.pos.resize(n);
    sb.neg.resize(m);
    auto score = [&](const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                     Eigen::Index i) {
      for (int k = 0; k < raw.dim; ++k) {
        xv[k] = xs(i, k);
        yv[k] = ys(i, k);
      }
      const double log_r = std::min(analytic_log_ratio(raw, xv, yv), 700.0);
      return optimal_critic(std::exp(log_r), params);
    };
    for (int i = 0; i < n; ++i) sb.pos[i] = score(batch.joint_x, batch.joint_y, i);
    for (int j = 0; j < m; ++j) sb.neg[j] = score(batch.prod_x, batch.prod_y, j);
    values[rep] = rpc_value(sb, params);
  }

  VarianceProbe probe;
  probe.degenerate = repeats < 2;
  probe.empirical_var = probe.degenerate ? 0.0 : sample_variance(values);
  probe.bound = bounds(params, static_cast<std::size_t>(n),
                       static_cast<std::size_t>(m))
                    .var_bound;
  return probe;
}

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const EstimateTrace& trace,
                     const std::filesystem::path& path) {
  std::string text = "step,true_mi,objective,mi_estimate,clamped\n";
  for (const TraceRow& row : trace.rows) {
    text += std::to_string(row.step);
    text += ',';
    text += fmt9(row.true_mi);
    text += ',';
    text += fmt9(row.objective);
    text += ',';
    text += fmt9(row.mi_estimate);
    text += ',';
    text += std::to_string(row.clamped);
    text += '\n';
  }
  write_file_atomic(path, text);
}

EstimateTrace read_trace_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) ||
      line != "step,true_mi,objective,mi_estimate,clamped")
    throw std::runtime_error("bad trace header in " + path.string());
  EstimateTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow row;
    char* p = line.data();
    char* end = nullptr;
    row.step = std::strtol(p, &end, 10);
    auto field = [&](double& out) {
      if (*end != ',') throw std::runtime_error("malformed trace row");
      p = end + 1;
      out = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("malformed trace row");
    };
    field(row.true_mi);
    field(row.objective);
    field(row.mi_estimate);
    if (*end != ',') throw std::runtime_error("malformed trace row");
    row.clamped = std::strtol(end + 1, nullptr, 10);
    if (!std::isfinite(row.objective) || !std::isfinite(row.mi_estimate))
      ++trace.nonfinite_steps;
    trace.rows.push_back(row);
  }
  trace.exploded = trace.nonfinite_steps > 0;
  return trace;
}

void write_sweep_csv(const std::vector<SweepCell>& cells,
                     const std::filesystem::path& path) {
  std::string text = "alpha,beta,gamma,level,bias,variance,status\n";
  for (const SweepCell& cell : cells) {
    text += fmt9(cell.alpha);
    text += ',';
    text += fmt9(cell.beta);
    text += ',';
    text += fmt9(cell.gamma);
    text += ',';
    text += fmt9(cell.level);
    text += ',';
    text += fmt9(cell.bias);
    text += ',';
    text += fmt9(cell.variance);
    text += ',';
    text += cell.status;
    text += '\n';
  }
  write_file_atomic(path, text);
}

void write_summary_json(const EstimateTrace& trace,
                        const std::filesystem::path& path) {
  nlohmann::json levels = nlohmann::json::array();
  for (const LevelSummary& s : trace.levels)
    levels.push_back({{"level", s.level},
                      {"bias", s.bias},
                      {"variance", s.variance}});
  const nlohmann::json j{{"levels", levels},
                         {"exploded", trace.exploded},
                         {"nonfinite_steps", trace.nonfinite_steps}};
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace mic
