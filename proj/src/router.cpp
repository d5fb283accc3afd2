#include "navee/router.hpp"

#include "navee/error.hpp"

namespace navee {

void ExitConfigTable::validate() const {
  if (num_layers < 1) throw Error(ErrorKind::ConfigValidation, "config table has no layer count");
  for (const auto& [scene, tasks] : entries) {
    if (scene.empty()) throw Error(ErrorKind::ConfigValidation, "empty scene id");
    for (const auto& [task, layer] : tasks)
      if (layer < 1 || layer > num_layers)
        throw Error(ErrorKind::ConfigValidation,
                    "scene '" + scene + "' task '" + task + "': exit layer " +
                        std::to_string(layer) + " outside [1, " + std::to_string(num_layers) + "]");
  }
  try {
    validate_strategy(default_strategy, num_layers);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigValidation, std::string("default strategy: ") + e.what());
  }
}

ExitConfigTable load_config(const ProfileArtifact& profile, const SceneTaskMap& scene_tasks) {
  if (profile.schema_version != ProfileArtifact::kSchemaVersion)
    throw Error(ErrorKind::ConfigValidation,
                "unsupported profile schema version " + std::to_string(profile.schema_version));
  ExitConfigTable table;
  table.default_strategy = scene_tasks.default_strategy;
  for (const auto& p : profile.profiles) {
    if (table.num_layers != 0 && table.num_layers != p.num_layers)
      throw Error(ErrorKind::ConfigValidation, "profile mixes layer counts");
    table.num_layers = p.num_layers;
  }
  for (const auto& [scene, tasks] : scene_tasks.scenes) {
    auto& row = table.entries[scene];
    for (const auto& task : tasks) {
      const ExitSelection* sel = profile.selection(task);
      if (!sel)
        throw Error(ErrorKind::ConfigValidation,
                    "scene '" + scene + "' references unprofiled task '" + task + "'");
      if (sel->exit_layer < 1 || sel->exit_layer > table.num_layers)
        throw Error(ErrorKind::ConfigValidation, "task '" + task + "': exit layer " +
                                                     std::to_string(sel->exit_layer) +
                                                     " outside the model range");
      row[task] = sel->exit_layer;
    }
  }
  if (table.num_layers == 0) {
    // Nothing profiled: only the default applies, which must not reference layers.
    if (!std::holds_alternative<FullInference>(table.default_strategy) || !table.entries.empty())
      throw Error(ErrorKind::ConfigValidation, "profile contains no tasks");
    table.num_layers = 1;
  }
  table.validate();
  return table;
}

RouterState make_router_state(ExitConfigTable table) {
  table.validate();
  RouterState state;
  state.config = std::make_shared<const ExitConfigTable>(std::move(table));
  return state;
}

RouterState apply_event(const RouterState& state, const NavEvent& event) {
  if (state.last_event_time && event.timestamp_ms < *state.last_event_time)
    throw Error(ErrorKind::Ordering, "event at " + std::to_string(event.timestamp_ms) +
                                         " ms precedes last event at " +
                                         std::to_string(*state.last_event_time) + " ms");
  if (event.scene.empty()) throw Error(ErrorKind::Validation, "event has an empty scene id");
  RouterState next = state;
  if (next.current_scene != event.scene) ++next.switch_count;
  next.current_scene = event.scene;
  next.last_event_time = event.timestamp_ms;
  return next;
}

ExitStrategy resolve(const RouterState& state, std::string_view task) {
  if (!state.config) return FullInference{};
  const ExitConfigTable& table = *state.config;
  if (state.current_scene) {
    if (auto scene = table.entries.find(*state.current_scene); scene != table.entries.end()) {
      if (auto it = scene->second.find(std::string(task)); it != scene->second.end())
        return FixedExit{it->second};
    }
  }
  return table.default_strategy;
}

Router::Router(RouterState initial)
    : state_(std::make_shared<const RouterState>(std::move(initial))) {}

void Router::apply(const NavEvent& event) {
  std::lock_guard lock(mutex_);
  state_ = std::make_shared<const RouterState>(apply_event(*state_, event));
}

std::shared_ptr<const RouterState> Router::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

ExitStrategy Router::resolve(std::string_view task) const {
  return navee::resolve(*snapshot(), task);
}

}  // namespace navee
