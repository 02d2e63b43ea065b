#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "pgnn/pgnn.hpp"

namespace pgnn::testing {

inline PreparedData small_synthetic(std::uint64_t seed = 1, std::size_t minutes = 3000) {
  SynthConfig sc;
  sc.seed = seed;
  sc.n_minutes = minutes;
  return prepare(derive_targets(generate(sc)));
}

inline TrainConfig quick_train(std::size_t epochs = 5, std::uint64_t seed = 1) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

// A fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pgnn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pgnn::testing
