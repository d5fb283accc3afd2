#include "navee/fixtures.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "navee/error.hpp"
#include "navee/rng.hpp"

namespace navee {

using nlohmann::json;

namespace {

// Separates the dataset stream from the weight stream of the same seed.
constexpr std::uint64_t kDatasetStream = 0xD1B54A32D192ED03ULL;

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("class" + std::to_string(i));
  return out;
}

void check_labels(const std::vector<std::string>& labels, std::vector<std::string>& errors) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) errors.push_back("labels: empty label");
    if (!seen.insert(l).second) errors.push_back("labels: duplicate '" + l + "'");
  }
}

Fixture make_synthetic(const SyntheticFixtureSpec& spec) {
  auto labels = spec.labels.empty() ? default_labels(spec.model.num_classes) : spec.labels;
  SyntheticTransformer net = SyntheticTransformer::generate(spec.model);
  const int layers = spec.model.num_layers;
  const int classes = spec.model.num_classes;

  SplitMix64 rng(spec.model.seed ^ kDatasetStream);
  std::vector<Sample> dataset;
  std::vector<float> free_inputs(spec.model.input_features);
  for (const auto& task : net.tasks()) {
    auto it = spec.model.planted_depths.find(task);
    const int depth = it == spec.model.planted_depths.end() ? layers : it->second;
    for (int i = 0; i < spec.samples_per_task; ++i) {
      const auto truth = static_cast<Label>(rng.below(classes));
      const auto decoy = static_cast<Label>((truth + 1 + rng.below(classes - 1)) % classes);
      const bool flip = rng.uniform_double() < spec.model.overthink_rate;
      const auto flip_offset = static_cast<int>(rng.below(std::max(layers - depth, 1)));
      const int overthink = (flip && depth < layers) ? depth + 1 + flip_offset : 0;
      for (auto& f : free_inputs) f = rng.symmetric(1.0f);

      Sample s;
      s.id = task + "-" + std::to_string(i);
      s.task = task;
      s.label = truth;
      s.features = net.make_features(task, truth, decoy, overthink, free_inputs);
      dataset.push_back(std::move(s));
    }
  }
  return {LayeredModel(std::move(labels), std::move(net)), std::move(dataset)};
}

Fixture make_table(const TableFixtureSpec& spec) {
  std::vector<std::string> ids;
  std::vector<std::vector<Label>> rows;
  std::vector<Sample> dataset;
  auto index_of = [&](const std::string& name) {
    return static_cast<Label>(std::find(spec.labels.begin(), spec.labels.end(), name) - spec.labels.begin());
  };
  if (!spec.rows.empty()) {
    for (const auto& r : spec.rows) {
      ids.push_back(r.sample_id);
      std::vector<Label> preds;
      for (const auto& p : r.predictions) preds.push_back(index_of(p));
      rows.push_back(std::move(preds));
      dataset.push_back({r.sample_id, r.task_id, {}, index_of(r.truth)});
    }
  } else {
    SplitMix64 rng(spec.seed ^ kDatasetStream);
    const auto classes = spec.labels.size();
    for (const auto& [task, count] : spec.samples_per_task) {
      for (int i = 0; i < count; ++i) {
        std::string id = task + "-" + std::to_string(i);
        const auto truth = static_cast<Label>(rng.below(classes));
        std::vector<Label> preds(spec.num_layers);
        for (auto& p : preds) p = static_cast<Label>(rng.below(classes));
        ids.push_back(id);
        rows.push_back(std::move(preds));
        dataset.push_back({std::move(id), task, {}, truth});
      }
    }
  }
  PredictionTable table(spec.num_layers, std::move(ids), std::move(rows));
  return {LayeredModel(spec.labels, std::move(table)), std::move(dataset)};
}

}  // namespace

std::vector<std::string> validate_fixture_spec(const FixtureSpec& spec) {
  std::vector<std::string> errors;
  if (const auto* s = std::get_if<SyntheticFixtureSpec>(&spec)) {
    errors = s->model.validate();
    if (s->samples_per_task < 1) errors.push_back("samples_per_task must be >= 1");
    if (!s->labels.empty()) {
      if (static_cast<int>(s->labels.size()) != s->model.num_classes)
        errors.push_back("labels must have num_classes entries");
      check_labels(s->labels, errors);
    }
    return errors;
  }
  const auto& t = std::get<TableFixtureSpec>(spec);
  if (t.num_layers < 1) errors.push_back("num_layers must be >= 1");
  if (t.labels.empty()) errors.push_back("labels must not be empty");
  check_labels(t.labels, errors);
  auto known = [&](const std::string& l) {
    return std::find(t.labels.begin(), t.labels.end(), l) != t.labels.end();
  };
  std::set<std::string> ids;
  for (const auto& r : t.rows) {
    const std::string where = "rows[" + r.sample_id + "]";
    if (r.sample_id.empty()) errors.push_back("rows: empty sample_id");
    if (!ids.insert(r.sample_id).second) errors.push_back(where + ": duplicate sample_id");
    if (r.task_id.empty()) errors.push_back(where + ": empty task_id");
    if (!known(r.truth)) errors.push_back(where + ": truth '" + r.truth + "' not in labels");
    if (r.predictions.size() != static_cast<std::size_t>(t.num_layers))
      errors.push_back(where + ": predictions must have num_layers entries");
    for (const auto& p : r.predictions)
      if (!known(p)) errors.push_back(where + ": prediction '" + p + "' not in labels");
  }
  if (t.rows.empty()) {
    if (t.samples_per_task.empty()) errors.push_back("either rows or samples_per_task is required");
    for (const auto& [task, n] : t.samples_per_task)
      if (n < 1) errors.push_back("samples_per_task[" + task + "] must be >= 1");
  }
  return errors;
}

Fixture gen_synthetic(const FixtureSpec& spec) {
  if (auto errors = validate_fixture_spec(spec); !errors.empty()) {
    std::string msg = "invalid fixture spec:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw Error(ErrorKind::Validation, msg);
  }
  return std::visit(
      [](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SyntheticFixtureSpec>)
          return make_synthetic(s);
        else
          return make_table(s);
      },
      spec);
}

FixtureSpec parse_fixture_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "fixture spec at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    const auto backend = j.value("backend", "synthetic");
    if (backend == "synthetic") {
      SyntheticFixtureSpec s;
      s.model.hidden_dim = j.at("hidden_dim").get<int>();
      s.model.num_layers = j.at("num_layers").get<int>();
      s.model.num_classes = j.at("num_classes").get<int>();
      s.model.seed = j.value("seed", std::uint64_t{0});
      s.model.planted_depths = j.value("planted_depths", std::map<std::string, int>{});
      s.model.overthink_rate = j.value("overthink_rate", 0.0);
      s.model.seq_len = j.value("seq_len", 4);
      s.model.mlp_dim = j.value("mlp_dim", 0);
      s.model.input_features = j.value("input_features", 16);
      s.samples_per_task = j.value("samples_per_task", 200);
      s.labels = j.value("labels", std::vector<std::string>{});
      return s;
    }
    if (backend == "table") {
      TableFixtureSpec t;
      t.num_layers = j.at("num_layers").get<int>();
      t.labels = j.at("labels").get<std::vector<std::string>>();
      t.seed = j.value("seed", std::uint64_t{0});
      t.samples_per_task = j.value("samples_per_task", std::map<std::string, int>{});
      for (const auto& r : j.value("rows", json::array()))
        t.rows.push_back({r.at("sample_id").get<std::string>(), r.at("task_id").get<std::string>(),
                          r.at("truth").get<std::string>(),
                          r.at("predictions").get<std::vector<std::string>>()});
      return t;
    }
    throw Error(ErrorKind::Validation, "backend must be 'synthetic' or 'table', got '" + backend + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("fixture spec: ") + e.what());
  }
}

std::string encode_fixture_spec(const FixtureSpec& spec) {
  json j;
  if (const auto* s = std::get_if<SyntheticFixtureSpec>(&spec)) {
    j = {{"backend", "synthetic"},
         {"hidden_dim", s->model.hidden_dim},
         {"num_layers", s->model.num_layers},
         {"num_classes", s->model.num_classes},
         {"seed", s->model.seed},
         {"planted_depths", s->model.planted_depths},
         {"overthink_rate", s->model.overthink_rate},
         {"seq_len", s->model.seq_len},
         {"mlp_dim", s->model.mlp_dim},
         {"input_features", s->model.input_features},
         {"samples_per_task", s->samples_per_task}};
    if (!s->labels.empty()) j["labels"] = s->labels;
  } else {
    const auto& t = std::get<TableFixtureSpec>(spec);
    j = {{"backend", "table"}, {"num_layers", t.num_layers}, {"labels", t.labels}, {"seed", t.seed}};
    if (!t.samples_per_task.empty()) j["samples_per_task"] = t.samples_per_task;
    json rows = json::array();
    for (const auto& r : t.rows)
      rows.push_back({{"sample_id", r.sample_id},
                      {"task_id", r.task_id},
                      {"truth", r.truth},
                      {"predictions", r.predictions}});
    if (!rows.empty()) j["rows"] = rows;
  }
  return j.dump(2) + "\n";
}

}  // namespace navee
