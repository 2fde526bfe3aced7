// Runs the acceptance suite and prints one pass/fail line per criterion.
#include <cstdio>
#include <cstdlib>

#include "mi_contrast/verify.hpp"

int main() {
  uint64_t seed = 1;
  if (const char* env = std::getenv("MI_CONTRAST_SEED"))
    seed = std::strtoull(env, nullptr, 10);
  const auto results = mic::run_acceptance(seed, [](const auto& r) {
    std::printf("criterion %2d [%s] %s: %s\n", r.id,
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  });
  return mic::all_passed(results) ? 0 : 1;
}
