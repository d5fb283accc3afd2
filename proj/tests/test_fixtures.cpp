#include "doctest.h"
#include "navee/error.hpp"
#include "navee/fixtures.hpp"
#include "navee/io.hpp"
#include "navee/profiler.hpp"
#include "navee/simulator.hpp"
#include "support.hpp"

using namespace navee;
using navee::testing::synthetic_spec;

TEST_CASE("regeneration from the same spec is byte-identical") {
  const auto spec = synthetic_spec(64, 10, {{"a", 3}, {"b", 7}}, 99, 0.2, 40);
  const auto f1 = gen_synthetic(spec);
  const auto f2 = gen_synthetic(spec);
  CHECK(io::encode_model(f1.model) == io::encode_model(f2.model));
  CHECK(io::encode_dataset(f1.dataset, f1.model.labels()) == io::encode_dataset(f2.dataset, f2.model.labels()));

  TableFixtureSpec t;
  t.num_layers = 6;
  t.labels = {"car", "person", "bike"};
  t.seed = 4;
  t.samples_per_task = {{"x", 10}, {"y", 5}};
  const auto t1 = gen_synthetic(t), t2 = gen_synthetic(t);
  CHECK(io::encode_model(t1.model) == io::encode_model(t2.model));
  CHECK(t1.dataset.size() == 15);
}

TEST_CASE("fixture specs survive a JSON round trip") {
  auto spec = synthetic_spec(64, 10, {{"a", 3}}, 5, 0.1, 7);
  spec.labels = {"w", "x", "y", "z"};
  const auto back = std::get<SyntheticFixtureSpec>(parse_fixture_spec(encode_fixture_spec(spec)));
  CHECK(back.model == spec.model);
  CHECK(back.samples_per_task == spec.samples_per_task);
  CHECK(back.labels == spec.labels);

  TableFixtureSpec t;
  t.num_layers = 3;
  t.labels = {"car", "person"};
  t.rows = {{"r1", "vehicle", "car", {"car", "car", "person"}}};
  const auto tb = std::get<TableFixtureSpec>(parse_fixture_spec(encode_fixture_spec(t)));
  CHECK(tb.rows.size() == 1);
  CHECK(tb.rows[0].predictions == t.rows[0].predictions);
}

TEST_CASE("explicit table rows become the model's predictions") {
  TableFixtureSpec t;
  t.num_layers = 3;
  t.labels = {"car", "truck"};
  t.rows = {{"r1", "vehicle", "car", {"car", "car", "truck"}}, {"r2", "vehicle", "car", {"truck", "car", "car"}}};
  const auto f = gen_synthetic(t);
  const auto over = over_inference_analysis(f.model, f.dataset);
  REQUIRE(over.size() == 1);
  CHECK(over[0].sample_ids == std::vector<std::string>{"r1"});
}

TEST_CASE("planted depths survive the file round trip and profile") {
  const auto f = gen_synthetic(synthetic_spec(64, 12, {{"vehicle", 5}, {"pedestrian", 9}}, 12, 0.0, 60));
  const auto model = io::decode_model(io::encode_model(f.model));
  const auto data = io::decode_dataset(io::encode_dataset(f.dataset, f.model.labels()), model.labels());
  const auto art = profile_tasks(model, partition_by_task(data));
  CHECK(art.selection("vehicle")->exit_layer == 5);
  CHECK(art.selection("pedestrian")->exit_layer == 9);
}

TEST_CASE("invalid specs list every field") {
  auto spec = synthetic_spec(64, 10, {{"a", 3}}, 1, 1.5, 0);
  try {
    gen_synthetic(spec);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    const std::string msg = e.what();
    CHECK(msg.find("overthink_rate") != std::string::npos);
    CHECK(msg.find("samples_per_task") != std::string::npos);
  }
  TableFixtureSpec t;
  t.num_layers = 2;
  t.labels = {"a", "b"};
  t.rows = {{"r", "task", "zz", {"a"}}};
  const auto errors = validate_fixture_spec(t);
  CHECK(errors.size() == 2);
  CHECK_THROWS_AS(parse_fixture_spec("{\"backend\": \"synthetic\", \"hidden_dim\": "), Error);
}

TEST_CASE("over-thinking rate is honoured approximately") {
  const auto f = gen_synthetic(synthetic_spec(64, 10, {{"a", 3}, {"b", 7}}, 3, 0.2, 250));
  std::int64_t flagged = 0, total = 0;
  for (const auto& t : over_inference_analysis(f.model, f.dataset)) {
    flagged += t.count();
    total += t.sample_count;
  }
  const double frac = static_cast<double>(flagged) / static_cast<double>(total);
  CHECK(frac >= 0.10);
  CHECK(frac <= 0.30);
}
