#include <atomic>
#include <random>
#include <thread>

#include "doctest.h"
#include "navee/error.hpp"
#include "navee/router.hpp"

using namespace navee;

namespace {

ProfileArtifact profile_with(std::map<std::string, int> exits, int layers) {
  ProfileArtifact a;
  for (const auto& [task, exit] : exits) {
    AccuracyProfile p;
    p.task_id = task;
    p.num_layers = layers;
    p.sample_count = 1;
    p.correct_counts.assign(layers, 1);
    a.profiles.push_back(p);
    a.selections.push_back({task, exit, exit < layers, 1.0});
  }
  return a;
}

RouterState llava_like() {
  SceneTaskMap map;
  map.scenes = {{"traffic-light-zone", {"traffic-light"}},
                {"crosswalk", {"pedestrian", "vehicle"}},
                {"highway", {"vehicle"}}};
  return make_router_state(
      load_config(profile_with({{"traffic-light", 25}, {"pedestrian", 18}, {"vehicle", 14}}, 32), map));
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a navee::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("cold start resolves to the default strategy") {
  const auto s = llava_like();
  CHECK_FALSE(s.current_scene.has_value());
  CHECK(resolve(s, "traffic-light") == ExitStrategy{FullInference{}});
}

TEST_CASE("known scene and task resolve to the profiled exit") {
  const auto s = apply_event(llava_like(), {100, "traffic-light-zone"});
  CHECK(resolve(s, "traffic-light") == ExitStrategy{FixedExit{25}});
  CHECK(resolve(s, "unicycle") == ExitStrategy{FullInference{}});
  const auto t = apply_event(s, {200, "crosswalk"});
  CHECK(resolve(t, "pedestrian") == ExitStrategy{FixedExit{18}});
  CHECK(resolve(t, "traffic-light") == ExitStrategy{FullInference{}});
  const auto u = apply_event(t, {300, "unmapped-scene"});
  CHECK(resolve(u, "vehicle") == ExitStrategy{FullInference{}});
}

TEST_CASE("switch counting: first event and changes count, repeats do not") {
  auto s = llava_like();
  s = apply_event(s, {1, "highway"});
  CHECK(s.switch_count == 1);
  const auto again = apply_event(s, {1, "highway"});
  CHECK(again.switch_count == 1);
  CHECK(again.current_scene == s.current_scene);
  s = apply_event(again, {5, "crosswalk"});
  CHECK(s.switch_count == 2);
  CHECK(*s.current_scene == "crosswalk");
}

TEST_CASE("out-of-order events are rejected and leave the state untouched") {
  const auto s = apply_event(llava_like(), {50, "highway"});
  CHECK(kind_of([&] { apply_event(s, {49, "crosswalk"}); }) == ErrorKind::Ordering);
  CHECK(*s.current_scene == "highway");
  CHECK(s.switch_count == 1);
  CHECK(*s.last_event_time == 50);

  Router router(s);
  CHECK(kind_of([&] { router.apply({10, "crosswalk"}); }) == ErrorKind::Ordering);
  CHECK(*router.snapshot()->current_scene == "highway");
}

TEST_CASE("same event stream, same final state") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> scenes{"highway", "crosswalk", "traffic-light-zone", "depot"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<NavEvent> events;
    std::int64_t t = 0;
    for (int i = 0; i < 30; ++i) {
      t += static_cast<std::int64_t>(rng() % 3);
      events.push_back({t, scenes[rng() % scenes.size()]});
    }
    auto a = llava_like(), b = llava_like();
    std::int64_t changes = 0;
    std::optional<std::string> last;
    for (const auto& e : events) {
      a = apply_event(a, e);
      b = apply_event(b, e);
      if (last != e.scene) ++changes;
      last = e.scene;
    }
    CHECK(a.current_scene == b.current_scene);
    CHECK(a.switch_count == b.switch_count);
    CHECK(a.switch_count == changes);
    CHECK(a.last_event_time == b.last_event_time);
  }
}

TEST_CASE("every unmapped (scene, task) pair falls back to the default") {
  std::mt19937_64 rng(9);
  auto base = llava_like();
  const auto& entries = base.config->entries;
  for (int i = 0; i < 500; ++i) {
    const std::string scene = "scene" + std::to_string(rng() % 7);
    const std::string task = "task" + std::to_string(rng() % 7);
    const auto s = apply_event(base, {i, scene});
    const bool mapped = entries.count(scene) && entries.at(scene).count(task);
    CHECK_FALSE(mapped);
    CHECK(resolve(s, task) == base.config->default_strategy);
  }
}

TEST_CASE("load_config: two entries, empty map, unprofiled task, out-of-range exit") {
  const auto profile = profile_with({{"vehicle", 14}, {"pedestrian", 18}}, 32);
  SceneTaskMap map;
  map.scenes = {{"highway", {"vehicle"}}, {"crosswalk", {"pedestrian"}}};
  const auto table = load_config(profile, map);
  CHECK(table.entries.size() == 2);
  CHECK(table.entries.at("highway").at("vehicle") == 14);
  CHECK(table.entries.at("crosswalk").at("pedestrian") == 18);

  const auto empty = load_config(profile, SceneTaskMap{});
  CHECK(empty.entries.empty());
  CHECK(empty.default_strategy == ExitStrategy{FullInference{}});

  SceneTaskMap cyclist;
  cyclist.scenes = {{"bike-lane", {"cyclist"}}};
  try {
    load_config(profile, cyclist);
    FAIL("expected config-validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigValidation);
    CHECK(std::string(e.what()).find("cyclist") != std::string::npos);
  }

  auto broken = profile;
  broken.selections[0].exit_layer = 40;
  CHECK(kind_of([&] { load_config(broken, map); }) == ErrorKind::ConfigValidation);
}

TEST_CASE("readers see whole states while a writer applies events") {
  Router router(llava_like());
  std::atomic<bool> done{false};
  std::atomic<int> torn{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r)
    readers.emplace_back([&] {
      while (!done.load()) {
        const auto snap = router.snapshot();
        // Each event advances time by one and alternates scenes, so
        // switch_count must equal the timestamp of the last event applied.
        if (snap->last_event_time && *snap->last_event_time != snap->switch_count) ++torn;
        const auto st = resolve(*snap, "vehicle");
        if (snap->current_scene && !(st == ExitStrategy{FixedExit{14}})) ++torn;
      }
    });
  for (int i = 1; i <= 2000; ++i) router.apply({i, i % 2 ? "highway" : "crosswalk"});
  done = true;
  for (auto& t : readers) t.join();
  CHECK(torn.load() == 0);
  CHECK(router.snapshot()->switch_count == 2000);
}
