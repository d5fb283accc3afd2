#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "navee/executor.hpp"
#include "navee/profiler.hpp"

namespace navee {

struct NavEvent {
  std::int64_t timestamp_ms = 0;
  std::string scene;
  bool operator==(const NavEvent&) const = default;
};

/// Scene -> task -> exit layer, plus the strategy used for anything the table
/// does not cover.
struct ExitConfigTable {
  int num_layers = 0;
  std::map<std::string, std::map<std::string, int>> entries;
  ExitStrategy default_strategy = FullInference{};

  /// Throws ConfigValidation naming the first offending entry.
  void validate() const;
  bool operator==(const ExitConfigTable&) const = default;
};

/// Which tasks each scene activates; an explicit policy file, not code.
struct SceneTaskMap {
  static constexpr int kSchemaVersion = 1;

  std::map<std::string, std::vector<std::string>> scenes;
  ExitStrategy default_strategy = FullInference{};
  bool operator==(const SceneTaskMap&) const = default;
};

ExitConfigTable load_config(const ProfileArtifact& profile, const SceneTaskMap& scene_tasks);

struct RouterState {
  std::optional<std::string> current_scene;
  std::shared_ptr<const ExitConfigTable> config;
  std::optional<std::int64_t> last_event_time;
  std::int64_t switch_count = 0;
};

RouterState make_router_state(ExitConfigTable table);

/// Pure transition. The first event and every change of scene id count as a
/// switch; repeats of the current scene do not. Throws Ordering (and leaves
/// the input untouched) when the event predates the last one applied.
RouterState apply_event(const RouterState& state, const NavEvent& event);

/// FixedExit(l*) when the current scene has an entry for the task, else the
/// table's default strategy.
ExitStrategy resolve(const RouterState& state, std::string_view task);

/// Single-writer, many-reader wrapper. Readers get an immutable snapshot and
/// never observe a half-applied event.
class Router {
 public:
  explicit Router(RouterState initial);

  void apply(const NavEvent& event);
  std::shared_ptr<const RouterState> snapshot() const;
  ExitStrategy resolve(std::string_view task) const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const RouterState> state_;
};

}  // namespace navee
