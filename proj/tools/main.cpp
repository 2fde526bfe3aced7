#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <vector>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "config.hpp"
#include "mi_contrast/io.hpp"
#include "mi_contrast/plot.hpp"
#include "mi_contrast/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  std::optional<std::string> objective;
  std::optional<double> alpha, beta, gamma;
  int parallel = 1;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_objective = true) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "master seed override");
  if (with_objective)
    cmd->add_option("--objective", o.objective,
                    "objective: rpc|dv|nwj|js|cpc|smile");
  cmd->add_option("--alpha", o.alpha, "relative parameter alpha");
  cmd->add_option("--beta", o.beta, "relative parameter beta");
  cmd->add_option("--gamma", o.gamma, "relative parameter gamma");
  cmd->add_option("--parallel", o.parallel, "worker threads for sweeps");
}

mic::RunConfig resolve(const Overrides& o) {
  mic::RunConfig config;
  if (!o.config_path.empty()) config = mic::load_config(o.config_path);
  if (o.objective)
    config.bench.objective =
        mic::objective_from_name(*o.objective, config.smile_clip);
  if (o.alpha) config.bench.params.alpha = *o.alpha;
  if (o.beta) config.bench.params.beta = *o.beta;
  if (o.gamma) config.bench.params.gamma = *o.gamma;
  if (o.seed) {
    config.bench.master_seed = *o.seed;
  } else if (const char* env = std::getenv("MI_CONTRAST_SEED")) {
    config.bench.master_seed = std::strtoull(env, nullptr, 10);
  }
  config.bench.validate();
  return config;
}

int run_bench(const Overrides& o) {
  const mic::RunConfig config = resolve(o);
  const mic::EstimateTrace trace = mic::run_benchmark(config.bench);
  const std::filesystem::path out(o.out_dir);
  mic::write_trace_csv(trace, out / "trace.csv");
  mic::write_summary_json(trace, out / "summary.json");
  std::printf("wrote %s and %s (%zu rows%s)\n",
              (out / "trace.csv").c_str(), (out / "summary.json").c_str(),
              trace.rows.size(), trace.exploded ? ", run exploded" : "");
  return kExitOk;
}

int run_sweep_cmd(const Overrides& o) {
  const mic::RunConfig config = resolve(o);
  const auto cells = mic::run_sweep(config.sweep, config.bench, o.parallel);
  const std::filesystem::path out(o.out_dir);
  mic::write_sweep_csv(cells, out / "sweep.csv");
  std::printf("wrote %s (%zu cells)\n", (out / "sweep.csv").c_str(),
              cells.size());
  return kExitOk;
}

int run_oracle(const Overrides& o, std::optional<double> mi,
               std::optional<double> rho, int dim) {
  const mic::RunConfig config = resolve(o);
  const mic::RelativeParams& p = config.bench.params;
  nlohmann::json out;
  if (mi) {
    const double r = mic::rho_for_mi(*mi, dim);
    std::printf("rho(mi=%g, dim=%d) = %.6f\n", *mi, dim, r);
    out["rho_for_mi"] = {{"mi", *mi}, {"dim", dim}, {"rho", r}};
  }
  if (rho) {
    mic::GaussianTask task;
    task.dim = dim;
    task.rho = *rho;
    const double truth = mic::ground_truth_mi(task);
    std::printf("ground_truth_mi(rho=%g, dim=%d) = %.6f\n", *rho, dim, truth);
    out["ground_truth_mi"] = {{"rho", *rho}, {"dim", dim}, {"mi", truth}};
    if (dim == 1) {
      const double chi2 = mic::chi2_oracle_1d(*rho);
      std::printf("chi2_1d(rho=%g) = %.6f\n", *rho, chi2);
      out["chi2_1d"] = {{"rho", *rho}, {"chi2", chi2}};
    }
  }
  if (p.beta > 0.0 && p.gamma > 0.0) {
    const mic::BoundReport b = mic::bounds(
        p, static_cast<std::size_t>(config.bench.batch_n),
        static_cast<std::size_t>(config.bench.batch_m));
    std::printf(
        "bounds(alpha=%g, beta=%g, gamma=%g, n=%d, m=%d): J<=%.6g, critic in "
        "[%.6g, %.6g], var<=%.6g\n",
        p.alpha, p.beta, p.gamma, config.bench.batch_n, config.bench.batch_m,
        b.j_upper, b.critic_lo, b.critic_hi, b.var_bound);
    out["bounds"] = {{"j_upper", b.j_upper},
                     {"critic_lo", b.critic_lo},
                     {"critic_hi", b.critic_hi},
                     {"var_bound", b.var_bound}};
  }
  mic::write_file_atomic(std::filesystem::path(o.out_dir) / "oracle.json",
                         out.dump(2) + "\n");
  return kExitOk;
}

int run_ratio_curve(const Overrides& o, double beta, double x_lo, double x_hi,
                    int points) {
  if (points < 2) throw std::invalid_argument("need at least 2 grid points");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = x_lo + (x_hi - x_lo) * i / (points - 1);
  const auto curve = mic::relative_ratio_curve(beta, grid);
  std::string csv = "x,r_beta\n";
  char buf[64];
  for (int i = 0; i < points; ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", grid[i], curve[i]);
    csv += buf;
  }
  const std::filesystem::path path =
      std::filesystem::path(o.out_dir) / "ratio_curve.csv";
  mic::write_file_atomic(path, csv);
  std::printf("wrote %s (beta=%g, max r=%.6g)\n", path.c_str(), beta,
              *std::max_element(curve.begin(), curve.end()));
  return kExitOk;
}

int run_verify(const Overrides& o) {
  uint64_t seed = 1;
  if (o.seed) {
    seed = *o.seed;
  } else if (const char* env = std::getenv("MI_CONTRAST_SEED")) {
    seed = std::strtoull(env, nullptr, 10);
  }
  const auto results = mic::run_acceptance(seed, [](const auto& r) {
    std::printf("criterion %2d [%s] %s: %s\n", r.id,
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  });
  return mic::all_passed(results) ? kExitOk : kExitBadConfig;
}

int run_plot(const std::string& trace_path, const std::string& out_svg) {
  mic::EstimateTrace trace;
  try {
    trace = mic::read_trace_csv(trace_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadConfig;
  }
  mic::render_trace_svg(trace, out_svg);
  std::printf("wrote %s\n", out_svg.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative contrastive mutual-information benchmark"};
  app.require_subcommand(1);

  Overrides bench_o, sweep_o, oracle_o, ratio_o, verify_o;
  std::optional<double> oracle_mi, oracle_rho;
  int oracle_dim = 20;
  double ratio_beta = 0.0, ratio_lo = -10.0, ratio_hi = 2.0;
  int ratio_points = 1201;
  std::string plot_trace, plot_out = "trace.svg";

  CLI::App* bench = app.add_subcommand("bench", "run the staircase benchmark");
  add_common(bench, bench_o);
  CLI::App* sweep =
      app.add_subcommand("sweep", "run the relative-parameter sweep");
  add_common(sweep, sweep_o);
  CLI::App* oracle =
      app.add_subcommand("oracle", "print analytic oracle values");
  add_common(oracle, oracle_o, /*with_objective=*/false);
  oracle->add_option("--mi", oracle_mi, "MI level to convert to rho");
  oracle->add_option("--rho", oracle_rho, "correlation to analyze");
  oracle->add_option("--dim", oracle_dim, "task dimension");
  CLI::App* ratio =
      app.add_subcommand("ratio-curve", "emit the relative ratio curve");
  ratio->add_option("--out", ratio_o.out_dir, "output directory");
  ratio->add_option("--beta", ratio_beta,
                    "mixture weight beta of the relative ratio");
  ratio->add_option("--x-lo", ratio_lo, "grid start");
  ratio->add_option("--x-hi", ratio_hi, "grid end");
  ratio->add_option("--points", ratio_points, "grid size");
  CLI::App* verify =
      app.add_subcommand("verify", "run the acceptance suite");
  add_common(verify, verify_o, /*with_objective=*/false);
  CLI::App* plot = app.add_subcommand("plot", "render a trace CSV as SVG");
  plot->add_option("--trace", plot_trace, "trace CSV path")->required();
  plot->add_option("--out-svg", plot_out, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) return run_bench(bench_o);
    if (sweep->parsed()) return run_sweep_cmd(sweep_o);
    if (oracle->parsed())
      return run_oracle(oracle_o, oracle_mi, oracle_rho, oracle_dim);
    if (ratio->parsed())
      return run_ratio_curve(ratio_o, ratio_beta, ratio_lo, ratio_hi,
                             ratio_points);
    if (verify->parsed()) return run_verify(verify_o);
    if (plot->parsed()) return run_plot(plot_trace, plot_out);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitBadConfig;
}
