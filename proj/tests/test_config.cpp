#include "doctest.h"

#include "config.hpp"

using namespace mic;

TEST_CASE("config round trip is identity") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "total_steps": 100,
    "steps_per_level": 50,
    "mi_levels": [2, 4],
    "batch_n": 32,
    "batch_m": 48,
    "dim": 5,
    "cubic": true,
    "objective": "smile",
    "smile_clip": 2.5,
    "params": {"alpha": 0.5, "beta": 0.01, "gamma": 1.5, "tau": 2.0},
    "critic": {"hidden_dim": 64, "weight_init_scale": 0.8,
               "clip_output": [-1.0, 2.0]},
    "opt": {"learning_rate": 0.001, "beta1": 0.8, "beta2": 0.99,
            "eps": 1e-9},
    "master_seed": 77,
    "abort_on_explosion": true,
    "summary_window": 25,
    "sweep": {"alpha_set": [0, 1], "beta_set": [0.001], "gamma_set": [1]}
  })");
  const RunConfig c1 = config_from_json(j);
  const nlohmann::json serialized = config_to_json(c1);
  const RunConfig c2 = config_from_json(serialized);
  CHECK(config_to_json(c2) == serialized);
  CHECK(c1.bench.objective.tag == Objective::SMILE);
  CHECK(c1.bench.objective.smile_clip == 2.5);
  CHECK(c1.bench.critic.clip_output.has_value());
  CHECK(c1.bench.critic.clip_output->second == 2.0);
  CHECK(c1.bench.cubic);
  CHECK(c1.sweep.beta_set == std::vector<double>{0.001});
}

TEST_CASE("defaults survive an empty config") {
  const RunConfig c = config_from_json(nlohmann::json::object());
  CHECK(c.bench.total_steps == 20000);
  CHECK(c.bench.mi_levels == std::vector<double>{2, 4, 6, 8, 10});
  CHECK(c.bench.params.beta == 0.001);
  CHECK(c.bench.objective.tag == Objective::RPC);
}

TEST_CASE("strict parsing rejects bad configs") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"typo": 1})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(nlohmann::json::parse(R"({"params": {"delta": 1}})")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(nlohmann::json::parse(R"({"objective": "wpc"})")),
      std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(
                      R"({"critic": {"clip_output": [1]}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()),
                  std::invalid_argument);
}
