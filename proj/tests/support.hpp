#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "navee/fixtures.hpp"
#include "navee/model.hpp"

namespace navee::testing {

struct TableCase {
  LayeredModel model;
  std::vector<Sample> samples;
};

/// One task, labels "c0".."c{C-1}", sample ids "s0", "s1", ...
inline TableCase table_case(int num_layers, int num_classes,
                            const std::vector<std::vector<Label>>& rows,
                            const std::vector<Label>& truth, const std::string& task = "t") {
  std::vector<std::string> labels, ids;
  for (int c = 0; c < num_classes; ++c) labels.push_back("c" + std::to_string(c));
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("s" + std::to_string(i));
    samples.push_back({ids.back(), task, {}, truth[i]});
  }
  return {LayeredModel(labels, PredictionTable(num_layers, ids, rows)), std::move(samples)};
}

/// Random table instance with L in [1, max_layers] and N in [1, max_samples].
inline TableCase random_table(std::mt19937_64& rng, int max_layers = 16, int max_samples = 64,
                              int num_classes = 3) {
  const int layers = std::uniform_int_distribution<int>(1, max_layers)(rng);
  const int n = std::uniform_int_distribution<int>(1, max_samples)(rng);
  std::uniform_int_distribution<int> label(0, num_classes - 1);
  std::vector<std::vector<Label>> rows(n, std::vector<Label>(layers));
  std::vector<Label> truth(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = label(rng);
    for (auto& p : rows[i]) p = label(rng);
  }
  return table_case(layers, num_classes, rows, truth);
}

inline SyntheticFixtureSpec synthetic_spec(int hidden, int layers, std::map<std::string, int> depths,
                                           std::uint64_t seed = 1, double overthink = 0.0,
                                           int per_task = 50) {
  SyntheticFixtureSpec s;
  s.model.hidden_dim = hidden;
  s.model.num_layers = layers;
  s.model.num_classes = 4;
  s.model.seed = seed;
  s.model.planted_depths = std::move(depths);
  s.model.overthink_rate = overthink;
  s.samples_per_task = per_task;
  return s;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("navee-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace navee::testing
