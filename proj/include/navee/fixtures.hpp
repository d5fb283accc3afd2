#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "navee/model.hpp"

namespace navee {

/// Synthetic transformer plus a planted dataset drawn from it.
struct SyntheticFixtureSpec {
  SyntheticSpec model;
  int samples_per_task = 200;
  std::vector<std::string> labels;  // empty -> class0..classC-1
};

struct TableRowSpec {
  std::string sample_id;
  std::string task_id;
  std::string truth;
  std::vector<std::string> predictions;
};

/// Explicit prediction rows, or (when `rows` is empty) uniformly random rows
/// for `samples_per_task` in `tasks` drawn from `seed`.
struct TableFixtureSpec {
  int num_layers = 0;
  std::vector<std::string> labels;
  std::vector<TableRowSpec> rows;
  std::uint64_t seed = 0;
  std::map<std::string, int> samples_per_task;
};

using FixtureSpec = std::variant<SyntheticFixtureSpec, TableFixtureSpec>;

struct Fixture {
  LayeredModel model;
  std::vector<Sample> dataset;
};

/// Every invalid field, in a stable order.
std::vector<std::string> validate_fixture_spec(const FixtureSpec& spec);

/// Deterministic: the same spec always produces the same model and dataset.
/// Throws Validation listing every invalid field.
Fixture gen_synthetic(const FixtureSpec& spec);

/// Reads {"backend": "synthetic" | "table", ...} JSON.
FixtureSpec parse_fixture_spec(std::string_view json_text);
std::string encode_fixture_spec(const FixtureSpec& spec);

}  // namespace navee
