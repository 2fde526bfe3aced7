#include "config.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "mi_contrast/io.hpp"

namespace mic {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object())
    throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key \"" + key + "\" in " +
                                  where);
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  check_keys(j, {"total_steps", "steps_per_level", "mi_levels", "batch_n",
                 "batch_m", "dim", "cubic", "objective", "smile_clip",
                 "params", "critic", "opt", "master_seed",
                 "abort_on_explosion", "summary_window", "sweep"},
             "top level");
  RunConfig config;
  BenchmarkConfig& b = config.bench;
  maybe(j, "total_steps", b.total_steps);
  maybe(j, "steps_per_level", b.steps_per_level);
  maybe(j, "mi_levels", b.mi_levels);
  maybe(j, "batch_n", b.batch_n);
  maybe(j, "batch_m", b.batch_m);
  maybe(j, "dim", b.dim);
  maybe(j, "cubic", b.cubic);
  maybe(j, "master_seed", b.master_seed);
  maybe(j, "abort_on_explosion", b.abort_on_explosion);
  maybe(j, "summary_window", b.summary_window);
  maybe(j, "smile_clip", config.smile_clip);
  if (j.contains("objective"))
    b.objective = objective_from_name(j.at("objective").get<std::string>(),
                                      config.smile_clip);
  if (j.contains("params")) {
    const auto& p = j.at("params");
    check_keys(p, {"alpha", "beta", "gamma", "tau"}, "params");
    maybe(p, "alpha", b.params.alpha);
    maybe(p, "beta", b.params.beta);
    maybe(p, "gamma", b.params.gamma);
    maybe(p, "tau", b.params.tau);
  }
  if (j.contains("critic")) {
    const auto& c = j.at("critic");
    check_keys(c, {"hidden_dim", "weight_init_scale", "clip_output"},
               "critic");
    maybe(c, "hidden_dim", b.critic.hidden_dim);
    maybe(c, "weight_init_scale", b.critic.weight_init_scale);
    if (c.contains("clip_output")) {
      const auto& clip = c.at("clip_output");
      if (!clip.is_array() || clip.size() != 2)
        throw std::invalid_argument("config: clip_output must be [lo, hi]");
      b.critic.clip_output = {clip[0].get<double>(), clip[1].get<double>()};
    }
  }
  if (j.contains("opt")) {
    const auto& o = j.at("opt");
    check_keys(o, {"learning_rate", "beta1", "beta2", "eps"}, "opt");
    maybe(o, "learning_rate", b.opt.learning_rate);
    maybe(o, "beta1", b.opt.beta1);
    maybe(o, "beta2", b.opt.beta2);
    maybe(o, "eps", b.opt.eps);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, {"alpha_set", "beta_set", "gamma_set"}, "sweep");
    maybe(s, "alpha_set", config.sweep.alpha_set);
    maybe(s, "beta_set", config.sweep.beta_set);
    maybe(s, "gamma_set", config.sweep.gamma_set);
  }
  return config;
}

nlohmann::json config_to_json(const RunConfig& config) {
  const BenchmarkConfig& b = config.bench;
  nlohmann::json j{
      {"total_steps", b.total_steps},
      {"steps_per_level", b.steps_per_level},
      {"mi_levels", b.mi_levels},
      {"batch_n", b.batch_n},
      {"batch_m", b.batch_m},
      {"dim", b.dim},
      {"cubic", b.cubic},
      {"objective", objective_name(b.objective)},
      {"smile_clip", config.smile_clip},
      {"params",
       {{"alpha", b.params.alpha},
        {"beta", b.params.beta},
        {"gamma", b.params.gamma},
        {"tau", b.params.tau}}},
      {"critic",
       {{"hidden_dim", b.critic.hidden_dim},
        {"weight_init_scale", b.critic.weight_init_scale}}},
      {"opt",
       {{"learning_rate", b.opt.learning_rate},
        {"beta1", b.opt.beta1},
        {"beta2", b.opt.beta2},
        {"eps", b.opt.eps}}},
      {"master_seed", b.master_seed},
      {"abort_on_explosion", b.abort_on_explosion},
      {"summary_window", b.summary_window},
      {"sweep",
       {{"alpha_set", config.sweep.alpha_set},
        {"beta_set", config.sweep.beta_set},
        {"gamma_set", config.sweep.gamma_set}}}};
  if (b.critic.clip_output)
    j["critic"]["clip_output"] = {b.critic.clip_output->first,
                                  b.critic.clip_output->second};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace mic
