#pragma once

#include <filesystem>
#include <string>

#include "uulab/harness.hpp"

namespace testing {

/// Random env with no transition floor: rows mix a random distribution with
/// occasional exact zeros, rewards uniform in [0,1].
inline uulab::EnvSpec random_env(uulab::Rng& rng, std::size_t S, std::size_t A, std::size_t H,
                                 std::size_t T = 50) {
  auto env = uulab::EnvSpec::zeros(S, A, H, T, 0.1);
  for (auto& r : env.rewards) r = uulab::uniform01(rng);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        auto row = env.transition_row(h, s, a);
        double total = 0.0;
        for (auto& p : row) {
          p = uulab::uniform01(rng) < 0.2 ? 0.0 : uulab::uniform01(rng);
          total += p;
        }
        if (total == 0.0) {
          row[0] = 1.0;
          continue;
        }
        for (auto& p : row) p /= total;
        double rest = 1.0;
        for (std::size_t k = 0; k + 1 < S; ++k) rest -= row[k];
        row[S - 1] = rest < 0.0 ? 0.0 : rest;
      }
    }
  }
  return env;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("uulab-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
