#include <benchmark/benchmark.h>

#include "mi_contrast/critic.hpp"
#include "mi_contrast/objectives.hpp"
#include "mi_contrast/rng.hpp"
#include "mi_contrast/tasks.hpp"

namespace {

void BM_sample_batch(benchmark::State& state) {
  mic::GaussianTask task;
  task.rho = 0.5;
  mic::NormalSampler rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mic::sample(task, 64, 64, rng));
  }
}
BENCHMARK(BM_sample_batch);

void BM_rpc_value(benchmark::State& state) {
  mic::RelativeParams params;
  mic::NormalSampler rng(2);
  mic::ScoreBatch batch;
  batch.pos.resize(64);
  batch.neg.resize(64);
  for (double& s : batch.pos) s = rng();
  for (double& s : batch.neg) s = rng();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mic::rpc_value(batch, params));
  }
}
BENCHMARK(BM_rpc_value);

void BM_cpc_grad(benchmark::State& state) {
  mic::NormalSampler rng(3);
  Eigen::MatrixXd scores(64, 64), grads;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) scores(i, j) = rng();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mic::cpc_score_grad(scores, grads));
  }
}
BENCHMARK(BM_cpc_grad);

void BM_critic_step(benchmark::State& state) {
  mic::CriticConfig cc;
  cc.input_dim = 40;
  mic::Critic critic(cc, 4);
  mic::AdamOptimizer opt(critic.parameter_count(), {});
  mic::NormalSampler rng(5);
  Eigen::MatrixXd inputs(128, 40);
  for (int i = 0; i < 128; ++i)
    for (int k = 0; k < 40; ++k) inputs(i, k) = rng();
  Eigen::VectorXd d = Eigen::VectorXd::Constant(128, 1.0 / 128.0);
  for (auto _ : state) {
    mic::Critic::Cache cache;
    critic.forward(inputs, cache);
    opt.step(critic.parameters(), critic.backward(cache, d));
  }
}
BENCHMARK(BM_critic_step);

}  // namespace

BENCHMARK_MAIN();
