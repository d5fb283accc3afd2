#include <random>

#include "doctest.h"
#include "navee/error.hpp"
#include "navee/io.hpp"
#include "navee/profiler.hpp"
#include "navee/simulator.hpp"
#include "support.hpp"

using namespace navee;
using navee::testing::synthetic_spec;
using navee::testing::table_case;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a navee::Error");
  return ErrorKind::Io;
}

RouterState single_scene(int layers, const std::string& scene, const std::string& task, int exit) {
  ExitConfigTable t;
  t.num_layers = layers;
  t.entries[scene][task] = exit;
  return make_router_state(t);
}

}  // namespace

TEST_CASE("latency is an additive prefix sum") {
  const auto lm = LatencyModel::uniform(10, 1.0, 2.0);
  CHECK(latency(lm, 0) == 2.0);
  CHECK(latency(lm, 5) == 7.0);
  CHECK(kind_of([&] { latency(lm, 11); }) == ErrorKind::LayerIndex);
  CHECK(kind_of([&] { latency(lm, -1); }) == ErrorKind::LayerIndex);
  CHECK(kind_of([] { LatencyModel{0.0, {1.0, 0.0}}.validate(2); }) == ErrorKind::Validation);
  CHECK(kind_of([] { LatencyModel{0.0, {1.0}}.validate(2); }) == ErrorKind::Validation);
}

TEST_CASE("latency is strictly increasing on random models") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> cost(0.001, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    LatencyModel lm;
    lm.overhead_ms = cost(rng);
    lm.per_layer_ms.resize(1 + rng() % 40);
    for (auto& c : lm.per_layer_ms) c = cost(rng);
    for (int l = 1; l <= static_cast<int>(lm.per_layer_ms.size()); ++l)
      REQUIRE(latency(lm, l) > latency(lm, l - 1));
  }
}

TEST_CASE("reduction percentages") {
  CHECK(round_to(reduction_pct(0.036, 0.013), 1) == doctest::Approx(63.9));
  CHECK(round_to(reduction_pct(0.609, 0.361), 1) == doctest::Approx(40.7));
  CHECK(reduction_pct(3.5, 3.5) == 0.0);
  CHECK(reduction_pct(32.0, 14.0) == doctest::Approx(56.25));
  CHECK(kind_of([] { reduction_pct(0.0, 1.0); }) == ErrorKind::Domain);
  CHECK(kind_of([] { reduction_pct(-1.0, 1.0); }) == ErrorKind::Domain);
  CHECK(round_to(0.25, 1) == doctest::Approx(0.3));
  CHECK(round_to(-0.25, 1) == doctest::Approx(-0.3));
}

TEST_CASE("one scene, ten vehicle frames, exit 14 of 32") {
  std::vector<std::vector<Label>> rows(10, std::vector<Label>(32, 0));
  auto tc = table_case(32, 2, rows, std::vector<Label>(10, 0), "vehicle");
  DriveTrace trace;
  trace.steps.push_back(NavEvent{0, "highway"});
  for (int i = 0; i < 10; ++i) trace.steps.push_back(FrameArrival{i + 1, "s" + std::to_string(i), {"vehicle"}});
  const auto lm = LatencyModel::uniform(32, 1.0);
  const auto report = simulate(trace, tc.samples, tc.model, single_scene(32, "highway", "vehicle", 14), lm, {});
  const auto* nav = report.find(kNavEeLabel, "vehicle");
  const auto* full = report.find("full", "vehicle");
  REQUIRE(nav);
  REQUIRE(full);
  CHECK(nav->mean_layers() == 14.0);
  CHECK(full->mean_layers() == 32.0);
  CHECK(report.reduction_pct(*nav) == doctest::Approx(56.25));
  CHECK(report.switch_count == 1);
  CHECK(report.frame_count == 10);
  for (const auto& r : report.requests) CHECK(r.latency_ms == latency(lm, r.layers_executed));
}

TEST_CASE("empty trace gives an empty report") {
  auto tc = table_case(4, 2, {{0, 0, 0, 0}}, {0});
  const auto report =
      simulate(DriveTrace{}, tc.samples, tc.model, single_scene(4, "a", "t", 2), LatencyModel::uniform(4, 1.0), {});
  CHECK(report.rows.empty());
  CHECK(report.requests.empty());
  CHECK(report.switch_count == 0);
  CHECK(report.frame_count == 0);
}

TEST_CASE("trace errors name the step") {
  auto tc = table_case(4, 2, {{0, 0, 0, 0}}, {0});
  const auto state = single_scene(4, "a", "t", 2);
  const auto lm = LatencyModel::uniform(4, 1.0);
  DriveTrace unknown{{NavEvent{0, "a"}, FrameArrival{1, "ghost", {"t"}}}};
  try {
    simulate(unknown, tc.samples, tc.model, state, lm, {});
    FAIL("expected trace-binding error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TraceBinding);
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
  DriveTrace backwards{{NavEvent{5, "a"}, FrameArrival{6, "s0", {"t"}}, NavEvent{4, "a"}}};
  try {
    simulate(backwards, tc.samples, tc.model, state, lm, {});
    FAIL("expected ordering error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Ordering);
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
}

TEST_CASE("every request uses the strategy of the latest event at or before it") {
  const auto f = gen_synthetic(synthetic_spec(64, 10, {{"a", 3}, {"b", 7}}, 13, 0.2, 30));
  ExitConfigTable table;
  table.num_layers = 10;
  table.entries = {{"x", {{"a", 3}}}, {"y", {{"a", 5}, {"b", 7}}}, {"z", {{"b", 9}}}};
  std::mt19937_64 rng(2);
  DriveTrace trace;
  std::int64_t t = 0;
  const std::vector<std::string> scenes{"x", "y", "z", "w"};
  for (int i = 0; i < 120; ++i) {
    t += static_cast<std::int64_t>(rng() % 2);
    if (rng() % 5 == 0) {
      trace.steps.push_back(NavEvent{t, scenes[rng() % scenes.size()]});
    } else {
      const auto& s = f.dataset[rng() % f.dataset.size()];
      trace.steps.push_back(FrameArrival{t, s.id, {"a", "b"}});
    }
  }
  const auto report = simulate(trace, f.dataset, f.model, make_router_state(table),
                               LatencyModel::uniform(10, 1.0), parse_strategy_list("frac:0.5"));

  // Independent replay: events win ties with frames at the same timestamp.
  std::int64_t switches = 0;
  std::optional<std::string> scene;
  for (const auto& r : report.requests) {
    if (r.strategy_label != kNavEeLabel) continue;
    std::optional<std::string> expected_scene;
    std::int64_t count = 0;
    std::optional<std::string> prev;
    for (const auto& step : trace.steps) {
      const auto* ev = std::get_if<NavEvent>(&step);
      if (!ev || ev->timestamp_ms > r.timestamp_ms) continue;
      expected_scene = ev->scene;
      if (prev != ev->scene) ++count;
      prev = ev->scene;
    }
    ExitStrategy expected = FullInference{};
    if (expected_scene && table.entries.count(*expected_scene) &&
        table.entries.at(*expected_scene).count(r.task))
      expected = FixedExit{table.entries.at(*expected_scene).at(r.task)};
    REQUIRE(r.strategy == expected);
    REQUIRE(r.layers_executed == r.exit_layer);
  }
  for (const auto& step : trace.steps)
    if (const auto* ev = std::get_if<NavEvent>(&step)) {
      if (scene != ev->scene) ++switches;
      scene = ev->scene;
    }
  CHECK(report.switch_count == switches);
}

TEST_CASE("replaying the profiling set reproduces the profiled accuracy at l*") {
  const auto f = gen_synthetic(synthetic_spec(64, 10, {{"a", 3}, {"b", 7}}, 31, 0.2, 60));
  const auto profile = profile_tasks(f.model, partition_by_task(f.dataset));
  SceneTaskMap map;
  map.scenes = {{"everywhere", {"a", "b"}}};
  DriveTrace trace{{NavEvent{0, "everywhere"}}};
  for (std::size_t i = 0; i < f.dataset.size(); ++i)
    trace.steps.push_back(FrameArrival{static_cast<std::int64_t>(i), f.dataset[i].id, {f.dataset[i].task}});
  const auto report = simulate(trace, f.dataset, f.model, make_router_state(load_config(profile, map)),
                               LatencyModel::uniform(10, 1.0), {});
  for (std::size_t i = 0; i < profile.profiles.size(); ++i) {
    const auto& p = profile.profiles[i];
    const auto& sel = profile.selections[i];
    const auto* nav = report.find(kNavEeLabel, p.task_id);
    REQUIRE(nav);
    CHECK(nav->accuracy() == p.accuracy(sel.exit_layer));
    CHECK(nav->accuracy() >= report.find("full", p.task_id)->accuracy());
  }
}

TEST_CASE("mean latency grows strictly with the fixed exit layer") {
  const auto f = gen_synthetic(synthetic_spec(48, 8, {{"a", 4}}, 3, 0.0, 10));
  DriveTrace trace;
  for (std::size_t i = 0; i < f.dataset.size(); ++i)
    trace.steps.push_back(FrameArrival{static_cast<std::int64_t>(i), f.dataset[i].id, {"a"}});
  std::vector<ExitStrategy> fixed;
  for (int l = 1; l <= 8; ++l) fixed.push_back(FixedExit{l});
  LatencyModel lm{0.5, {1, 2, 0.5, 3, 1, 1, 0.25, 4}};
  const auto report = simulate(trace, f.dataset, f.model, single_scene(8, "s", "a", 4), lm, fixed);
  for (int l = 2; l <= 8; ++l)
    CHECK(report.find("fixed:" + std::to_string(l), "a")->mean_latency_ms() >
          report.find("fixed:" + std::to_string(l - 1), "a")->mean_latency_ms());
}

TEST_CASE("over-inference analysis on hand-built rows") {
  // [car, car, truck] truth car -> flagged at 1; [truck, car, car] -> not flagged.
  auto tc = table_case(3, 2, {{0, 0, 1}, {1, 0, 0}, {1, 1, 1}}, {0, 0, 0});
  const auto result = over_inference_analysis(tc.model, tc.samples);
  REQUIRE(result.size() == 1);
  CHECK(result[0].sample_ids == std::vector<std::string>{"s0"});
  CHECK(result[0].earliest_correct_layer == std::vector<int>{1});
  CHECK(result[0].sample_count == 3);
  CHECK(result[0].fraction() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("comparison table flags best values and rejects missing strategies") {
  auto tc = table_case(4, 2, {{0, 0, 0, 1}, {1, 0, 0, 1}}, {0, 0}, "t");
  DriveTrace trace{{NavEvent{0, "s"}, FrameArrival{1, "s0", {"t"}}, FrameArrival{2, "s1", {"t"}}}};
  const auto report = simulate(trace, tc.samples, tc.model, single_scene(4, "s", "t", 2),
                               LatencyModel::uniform(4, 1.0), parse_strategy_list("fixed:3,frac:0.25"));
  const std::vector<std::string> all{"nav-ee", "full", "fixed:3", "frac:0.25"};
  const auto table = compare_strategies(report, all);
  REQUIRE(table.rows.size() == 4);
  // nav-ee (exit 2) and fixed:3 both score 1.0: tie, flagged jointly; nav-ee is faster.
  CHECK(table.rows[0].cells[0].best_accuracy);
  CHECK(table.rows[2].cells[0].best_accuracy);
  CHECK_FALSE(table.rows[1].cells[0].best_accuracy);
  CHECK(table.rows[0].cells[0].best);
  CHECK_FALSE(table.rows[2].cells[0].best);
  CHECK(table.rows[3].cells[0].best_latency);

  const std::vector<std::string> one{"nav-ee"};
  CHECK(compare_strategies(report, one).rows.size() == 1);
  const std::vector<std::string> missing{"conf:0.9"};
  CHECK(kind_of([&] { compare_strategies(report, missing); }) == ErrorKind::ReportShape);
}

TEST_CASE("a dominating strategy is flagged best everywhere") {
  // Layer 2 is right for both samples; the final layer is wrong for both.
  auto tc = table_case(4, 2, {{1, 0, 1, 1}, {1, 0, 0, 1}}, {0, 0}, "t");
  DriveTrace trace{{NavEvent{0, "s"}, FrameArrival{1, "s0", {"t"}}, FrameArrival{2, "s1", {"t"}}}};
  const auto report = simulate(trace, tc.samples, tc.model, single_scene(4, "s", "t", 2),
                               LatencyModel::uniform(4, 1.0), parse_strategy_list("conf:0.5:3,frac:0.75"));
  const auto table = compare_strategies(report, report.strategies);
  for (const auto& cell : table.rows[0].cells) {
    CHECK(cell.best_accuracy);
    CHECK(cell.best_latency);
    CHECK(cell.best);
  }
}

TEST_CASE("replay is byte-identical") {
  const auto f = gen_synthetic(synthetic_spec(48, 8, {{"a", 2}, {"b", 6}}, 5, 0.3, 20));
  ExitConfigTable table;
  table.num_layers = 8;
  table.entries = {{"p", {{"a", 2}}}, {"q", {{"b", 6}}}};
  DriveTrace trace{{NavEvent{0, "p"}}};
  for (std::size_t i = 0; i < f.dataset.size(); ++i) {
    if (i == 15) trace.steps.push_back(NavEvent{static_cast<std::int64_t>(i), "q"});
    trace.steps.push_back(FrameArrival{static_cast<std::int64_t>(i), f.dataset[i].id, {"a", "b"}});
  }
  const auto run_once = [&] {
    return io::encode_sim_report(simulate(trace, f.dataset, f.model, make_router_state(table),
                                          LatencyModel::uniform(8, 0.7, 1.0),
                                          parse_strategy_list("frac:0.5,conf:0.9,stable:2")));
  };
  CHECK(run_once() == run_once());
}
