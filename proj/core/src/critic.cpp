#include "mi_contrast/critic.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "mi_contrast/io.hpp"
#include "mi_contrast/rng.hpp"

namespace mic {

void CriticConfig::validate() const {
  if (input_dim < 2) throw std::invalid_argument("input_dim must be >= 2");
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
  if (!(weight_init_scale > 0.0))
    throw std::invalid_argument("weight_init_scale must be > 0");
  if (clip_output && !(clip_output->first < clip_output->second))
    throw std::invalid_argument("clip_output bounds must satisfy lo < hi");
}

namespace {

Eigen::Index param_count(const CriticConfig& c) {
  const Eigen::Index in = c.input_dim, h = c.hidden_dim;
  return h * in + h + h * h + h + h + 1;
}

}  // namespace

// Maps of the layer weights/biases into the flat parameter vector, laid
// out as [W1, b1, W2, b2, w3, b3].
struct Critic::Views {
  Eigen::Map<const Eigen::MatrixXd> w1, w2;
  Eigen::Map<const Eigen::VectorXd> b1, b2, w3;
  double b3;
};

Critic::Views Critic::views() const {
  const Eigen::Index in = config_.input_dim, h = config_.hidden_dim;
  const double* p = params_.data();
  Eigen::Map<const Eigen::MatrixXd> w1(p, in, h);
  p += in * h;
  Eigen::Map<const Eigen::VectorXd> b1(p, h);
  p += h;
  Eigen::Map<const Eigen::MatrixXd> w2(p, h, h);
  p += h * h;
  Eigen::Map<const Eigen::VectorXd> b2(p, h);
  p += h;
  Eigen::Map<const Eigen::VectorXd> w3(p, h);
  p += h;
  return Views{w1, w2, b1, b2, w3, *p};
}

Critic::Critic(CriticConfig config, uint64_t seed) : config_(config) {
  config_.validate();
  params_.resize(param_count(config_));
  // Uniform fan-in init, U(-s/sqrt(fan_in), s/sqrt(fan_in)), drawn in flat
  // layout order from the pinned generator so a seed fixes the network.
  Xoshiro256pp rng(seed);
  const Eigen::Index in = config_.input_dim, h = config_.hidden_dim;
  Eigen::Index at = 0;
  auto fill = [&](Eigen::Index count, Eigen::Index fan_in) {
    const double bound = config_.weight_init_scale / std::sqrt(double(fan_in));
    for (Eigen::Index i = 0; i < count; ++i)
      params_[at++] = bound * (2.0 * rng.uniform() - 1.0);
  };
  fill(in * h, in);  // W1
  fill(h, in);       // b1
  fill(h * h, h);    // W2
  fill(h, h);        // b2
  fill(h, h);        // w3
  fill(1, h);        // b3
}

Eigen::VectorXd Critic::forward(const Eigen::MatrixXd& inputs,
                                Cache& cache) const {
  if (inputs.cols() != config_.input_dim)
    throw std::invalid_argument("input column count mismatch");
  const Views v = views();
  cache.inputs = inputs;
  cache.z1 = (inputs * v.w1).rowwise() + v.b1.transpose();
  cache.h1 = cache.z1.cwiseMax(0.0);
  cache.z2 = (cache.h1 * v.w2).rowwise() + v.b2.transpose();
  cache.h2 = cache.z2.cwiseMax(0.0);
  cache.raw = (cache.h2 * v.w3).array() + v.b3;
  if (config_.clip_output)
    return cache.raw.cwiseMax(config_.clip_output->first)
        .cwiseMin(config_.clip_output->second);
  return cache.raw;
}

Eigen::VectorXd Critic::forward(const Eigen::MatrixXd& inputs) const {
  Cache cache;
  return forward(inputs, cache);
}

double Critic::forward_one(std::span<const double> x,
                           std::span<const double> y) const {
  if (x.size() + y.size() != static_cast<std::size_t>(config_.input_dim))
    throw std::invalid_argument("x,y sizes must sum to input_dim");
  Eigen::MatrixXd row(1, config_.input_dim);
  for (std::size_t k = 0; k < x.size(); ++k) row(0, k) = x[k];
  for (std::size_t k = 0; k < y.size(); ++k)
    row(0, static_cast<Eigen::Index>(x.size() + k)) = y[k];
  return forward(row)(0);
}

Eigen::VectorXd Critic::backward(const Cache& cache,
                                 const Eigen::VectorXd& d_scores) const {
  if (d_scores.size() != cache.raw.size())
    throw std::invalid_argument("d_scores size mismatch");
  const Views v = views();
  const Eigen::Index in = config_.input_dim, h = config_.hidden_dim;

  Eigen::VectorXd d_raw = d_scores;
  if (config_.clip_output) {
    for (Eigen::Index i = 0; i < d_raw.size(); ++i)
      if (cache.raw(i) < config_.clip_output->first ||
          cache.raw(i) > config_.clip_output->second)
        d_raw(i) = 0.0;
  }

  Eigen::VectorXd grad(params_.size());
  double* g = grad.data();
  Eigen::Map<Eigen::MatrixXd> g_w1(g, in, h);
  g += in * h;
  Eigen::Map<Eigen::VectorXd> g_b1(g, h);
  g += h;
  Eigen::Map<Eigen::MatrixXd> g_w2(g, h, h);
  g += h * h;
  Eigen::Map<Eigen::VectorXd> g_b2(g, h);
  g += h;
  Eigen::Map<Eigen::VectorXd> g_w3(g, h);
  g += h;
  double& g_b3 = *g;

  g_w3 = cache.h2.transpose() * d_raw;
  g_b3 = d_raw.sum();

  Eigen::MatrixXd d_h2 = d_raw * v.w3.transpose();  // B x h
  Eigen::MatrixXd d_z2 =
      (cache.z2.array() > 0.0).select(d_h2, Eigen::MatrixXd::Zero(d_h2.rows(), h));
  g_w2 = cache.h1.transpose() * d_z2;
  g_b2 = d_z2.colwise().sum();

  Eigen::MatrixXd d_h1 = d_z2 * v.w2.transpose();
  Eigen::MatrixXd d_z1 =
      (cache.z1.array() > 0.0).select(d_h1, Eigen::MatrixXd::Zero(d_h1.rows(), h));
  g_w1 = cache.inputs.transpose() * d_z1;
  g_b1 = d_z1.colwise().sum();

  return grad;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

AdamOptimizer::AdamOptimizer(Eigen::Index parameter_count,
                             OptimizerConfig config)
    : config_(config),
      m_(Eigen::VectorXd::Zero(parameter_count)),
      v_(Eigen::VectorXd::Zero(parameter_count)) {
  config_.validate();
}

void AdamOptimizer::step(Eigen::VectorXd& params,
                         const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("parameter/gradient size mismatch");
  ++step_count_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grads;
  v_ = config_.beta2 * v_.array() + (1.0 - config_.beta2) * grads.array().square();
  const double bc1 = 1.0 - std::pow(config_.beta1, double(step_count_));
  const double bc2 = 1.0 - std::pow(config_.beta2, double(step_count_));
  params.array() -= config_.learning_rate * (m_.array() / bc1) /
                    ((v_.array() / bc2).sqrt() + config_.eps);
}

void AdamOptimizer::restore(Eigen::VectorXd m, Eigen::VectorXd v,
                            long step_count) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw std::invalid_argument("moment size mismatch");
  if (step_count < 0) throw std::invalid_argument("step_count must be >= 0");
  m_ = std::move(m);
  v_ = std::move(v);
  step_count_ = step_count;
}

namespace {

// nlohmann serializes doubles with enough digits to round-trip exactly,
// so checkpoints restore bit-identical parameters.
nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           Eigen::Index(values.size()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Critic& critic,
                     const AdamOptimizer& optimizer) {
  const CriticConfig& c = critic.config();
  nlohmann::json j{
      {"format_version", 1},
      {"critic",
       {{"input_dim", c.input_dim},
        {"hidden_dim", c.hidden_dim},
        {"weight_init_scale", c.weight_init_scale},
        {"parameters", vec_to_json(critic.parameters())}}},
      {"optimizer",
       {{"learning_rate", optimizer.config().learning_rate},
        {"beta1", optimizer.config().beta1},
        {"beta2", optimizer.config().beta2},
        {"eps", optimizer.config().eps},
        {"step_count", optimizer.step_count()},
        {"m", vec_to_json(optimizer.first_moment())},
        {"v", vec_to_json(optimizer.second_moment())}}}};
  if (c.clip_output)
    j["critic"]["clip_output"] = {c.clip_output->first, c.clip_output->second};
  write_file_atomic(path, j.dump(2) + "\n");
}

std::pair<Critic, AdamOptimizer> load_checkpoint(
    const std::filesystem::path& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported checkpoint format_version");
  const auto& jc = j.at("critic");
  CriticConfig config;
  config.input_dim = jc.at("input_dim").get<int>();
  config.hidden_dim = jc.at("hidden_dim").get<int>();
  config.weight_init_scale = jc.at("weight_init_scale").get<double>();
  if (jc.contains("clip_output"))
    config.clip_output = {jc["clip_output"][0].get<double>(),
                          jc["clip_output"][1].get<double>()};
  Critic critic(config, /*seed=*/0);
  Eigen::VectorXd params = vec_from_json(jc.at("parameters"));
  if (params.size() != critic.parameter_count())
    throw std::runtime_error("checkpoint parameter count mismatch");
  critic.parameters() = std::move(params);

  const auto& jo = j.at("optimizer");
  OptimizerConfig oc;
  oc.learning_rate = jo.at("learning_rate").get<double>();
  oc.beta1 = jo.at("beta1").get<double>();
  oc.beta2 = jo.at("beta2").get<double>();
  oc.eps = jo.at("eps").get<double>();
  AdamOptimizer optimizer(critic.parameter_count(), oc);
  optimizer.restore(vec_from_json(jo.at("m")), vec_from_json(jo.at("v")),
                    jo.at("step_count").get<long>());
  return {std::move(critic), std::move(optimizer)};
}

}  // namespace mic
