#include "navee/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "navee/error.hpp"
#include "navee/parallel.hpp"

namespace navee {

std::int64_t timestamp_of(const TraceStep& step) {
  return std::visit([](const auto& s) { return s.timestamp_ms; }, step);
}

LatencyModel LatencyModel::uniform(int num_layers, double per_layer_ms, double overhead_ms) {
  LatencyModel lm;
  lm.overhead_ms = overhead_ms;
  lm.per_layer_ms.assign(std::max(num_layers, 0), per_layer_ms);
  return lm;
}

void LatencyModel::validate(int num_layers) const {
  if (!(overhead_ms >= 0.0)) throw Error(ErrorKind::Validation, "overhead_ms must be >= 0");
  if (per_layer_ms.size() != static_cast<std::size_t>(num_layers))
    throw Error(ErrorKind::Validation, "latency model has " + std::to_string(per_layer_ms.size()) +
                                           " layer costs, model has " + std::to_string(num_layers));
  for (std::size_t i = 0; i < per_layer_ms.size(); ++i)
    if (!(per_layer_ms[i] > 0.0))
      throw Error(ErrorKind::Validation, "per_layer_ms[" + std::to_string(i) + "] must be > 0");
}

double latency(const LatencyModel& lm, int layer) {
  if (layer < 0 || static_cast<std::size_t>(layer) > lm.per_layer_ms.size())
    throw Error(ErrorKind::LayerIndex, "latency requested for layer " + std::to_string(layer));
  double total = lm.overhead_ms;
  for (int i = 0; i < layer; ++i) total += lm.per_layer_ms[i];
  return total;
}

double reduction_pct(double base_ms, double new_ms) {
  if (!(base_ms > 0.0)) throw Error(ErrorKind::Domain, "reduction base must be positive");
  return 100.0 * (base_ms - new_ms) / base_ms;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // Nudge by a few ulps so values printed as exact halves (63.85) round up.
  const double scaled = value * scale;
  return std::round(scaled + std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled)) / scale;
}

double StrategyTaskStats::accuracy() const {
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}
double StrategyTaskStats::mean_latency_ms() const {
  return n == 0 ? 0.0 : total_latency_ms / static_cast<double>(n);
}
double StrategyTaskStats::mean_layers() const {
  return n == 0 ? 0.0 : static_cast<double>(total_layers) / static_cast<double>(n);
}

const StrategyTaskStats* SimReport::find(std::string_view strategy, std::string_view task) const {
  for (const auto& r : rows)
    if (r.strategy == strategy && r.task == task) return &r;
  return nullptr;
}

double SimReport::reduction_pct(const StrategyTaskStats& row) const {
  if (row.n == 0 || full_latency_ms <= 0.0) return 0.0;
  return navee::reduction_pct(full_latency_ms, row.mean_latency_ms());
}

std::vector<std::string> SimReport::tasks() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.task) == out.end()) out.push_back(r.task);
  std::sort(out.begin(), out.end());
  return out;
}

SimReport simulate(const DriveTrace& trace, std::span<const Sample> dataset,
                   const LayeredModel& model, const RouterState& initial,
                   const LatencyModel& latency_model,
                   std::span<const ExitStrategy> comparisons, SimOptions options) {
  const int layers = model.num_layers();
  latency_model.validate(layers);
  if (!initial.config) throw Error(ErrorKind::ConfigValidation, "router has no config table");
  if (!initial.config->entries.empty() && initial.config->num_layers != layers)
    throw Error(ErrorKind::ConfigValidation, "config table was built for " +
                                                 std::to_string(initial.config->num_layers) +
                                                 " layers, model has " + std::to_string(layers));
  validate_strategy(initial.config->default_strategy, layers);

  std::vector<ExitStrategy> compared;
  compared.emplace_back(FullInference{});
  for (const auto& s : comparisons) {
    validate_strategy(s, layers);
    if (std::find(compared.begin(), compared.end(), s) == compared.end()) compared.push_back(s);
  }

  SimReport report;
  report.num_layers = layers;
  report.full_latency_ms = latency(latency_model, layers);
  report.strategies.emplace_back(kNavEeLabel);
  for (const auto& s : compared) report.strategies.push_back(format_strategy(s));

  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_id.emplace(dataset[i].id, i);

  // Validate the whole trace before touching any state.
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (i > 0 && timestamp_of(trace.steps[i]) < timestamp_of(trace.steps[i - 1]))
      throw Error(ErrorKind::Ordering, "trace step " + std::to_string(i) + " goes back in time");
    if (const auto* f = std::get_if<FrameArrival>(&trace.steps[i]); f && !by_id.count(f->sample_id))
      throw Error(ErrorKind::TraceBinding, "trace step " + std::to_string(i) + " references unknown sample '" +
                                               f->sample_id + "'");
  }

  // Events before frames within a timestamp, file order otherwise.
  std::vector<std::size_t> order(trace.steps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ta = timestamp_of(trace.steps[a]), tb = timestamp_of(trace.steps[b]);
    if (ta != tb) return ta < tb;
    return trace.steps[a].index() < trace.steps[b].index();
  });

  std::map<std::pair<std::size_t, std::string>, StrategyTaskStats> cells;
  RouterState state = initial;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t idx : order) {
    const TraceStep& step = trace.steps[idx];
    if (const auto* ev = std::get_if<NavEvent>(&step)) {
      try {
        state = apply_event(state, *ev);
      } catch (const Error& e) {
        throw Error(e.kind(), "trace step " + std::to_string(idx) + ": " + e.what());
      }
      continue;
    }
    const auto& frame = std::get<FrameArrival>(step);
    const Sample& sample = dataset[by_id.at(frame.sample_id)];
    ++report.frame_count;

    for (const auto& task : frame.active_tasks) {
      // Slot 0 is Nav-EE; the rest are the paired comparisons.
      std::vector<ExitStrategy> plan;
      plan.push_back(resolve(state, task));
      plan.insert(plan.end(), compared.begin(), compared.end());
      std::vector<InferenceResult> results(plan.size());
      const auto n = static_cast<std::int64_t>(plan.size());
      ExceptionSlot failure;
#pragma omp parallel for schedule(static) if (n > 1 && layers >= 8)
      for (std::int64_t k = 0; k < n; ++k) {
        try {
          results[k] = run(model, sample, plan[k], /*trace=*/true);
        } catch (...) {
          failure.capture();
        }
      }
      failure.rethrow_if_set();

      for (std::size_t k = 0; k < plan.size(); ++k) {
        const InferenceResult& r = results[k];
        RequestRecord rec;
        rec.step_index = idx;
        rec.timestamp_ms = frame.timestamp_ms;
        rec.sample_id = frame.sample_id;
        rec.task = task;
        rec.strategy_label = report.strategies[k];
        rec.strategy = plan[k];
        rec.exit_layer = r.exit_layer;
        rec.layers_executed = r.layers_executed;
        rec.predicted = r.predicted;
        rec.correct = r.predicted == sample.label;
        rec.over_inference =
            !rec.correct && std::any_of(r.trace.begin(), r.trace.end(), [&](const TraceEntry& t) {
              return t.layer < r.exit_layer && t.label == sample.label;
            });
        rec.latency_ms = latency(latency_model, r.layers_executed);

        auto& cell = cells[{k, task}];
        cell.strategy = rec.strategy_label;
        cell.task = task;
        ++cell.n;
        cell.correct += rec.correct ? 1 : 0;
        cell.total_layers += rec.layers_executed;
        cell.over_inference += rec.over_inference ? 1 : 0;
        cell.total_latency_ms += rec.latency_ms;
        if (options.record_requests) report.requests.push_back(std::move(rec));
      }
    }
  }

  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  report.switch_count = state.switch_count - initial.switch_count;
  for (auto& [key, cell] : cells) report.rows.push_back(std::move(cell));
  return report;
}

double OverInferenceTask::fraction() const {
  return sample_count == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(sample_count);
}

std::vector<OverInferenceTask> over_inference_analysis(const LayeredModel& model,
                                                       std::span<const Sample> dataset) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "dataset has no samples");
  const int layers = model.num_layers();
  for (const auto& s : dataset)
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= model.num_classes())
      throw Error(ErrorKind::LabelDomain, "sample '" + s.id + "' has a label outside the model's label set");

  // earliest correct layer below L for flagged samples, 0 otherwise
  std::vector<int> earliest(dataset.size(), 0);
  const auto n = static_cast<std::int64_t>(dataset.size());
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const auto preds = model.predictions_by_layer(dataset[i]);
      if (preds[layers - 1] == dataset[i].label) continue;
      for (int l = 0; l + 1 < layers; ++l) {
        if (preds[l] == dataset[i].label) {
          earliest[i] = l + 1;
          break;
        }
      }
    } catch (...) {
      failure.capture();
    }
  }
  failure.rethrow_if_set();

  std::map<std::string, OverInferenceTask> tasks;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto& t = tasks[dataset[i].task];
    t.task = dataset[i].task;
    ++t.sample_count;
    if (earliest[i] > 0) {
      t.sample_ids.push_back(dataset[i].id);
      t.earliest_correct_layer.push_back(earliest[i]);
    }
  }
  std::vector<OverInferenceTask> out;
  for (auto& [name, t] : tasks) out.push_back(std::move(t));
  return out;
}

ComparisonTable compare_strategies(const SimReport& report, std::span<const std::string> strategies) {
  ComparisonTable table;
  table.tasks = report.tasks();
  for (const auto& name : strategies) {
    if (std::find(report.strategies.begin(), report.strategies.end(), name) == report.strategies.end())
      throw Error(ErrorKind::ReportShape, "report has no strategy '" + name + "'");
    ComparisonRow row;
    row.strategy = name;
    for (const auto& task : table.tasks) {
      const StrategyTaskStats* s = report.find(name, task);
      if (!s) throw Error(ErrorKind::ReportShape, "strategy '" + name + "' has no rows for task '" + task + "'");
      ComparisonCell cell;
      cell.accuracy = s->accuracy();
      cell.mean_latency_ms = s->mean_latency_ms();
      cell.reduction_pct = report.reduction_pct(*s);
      cell.mean_layers = s->mean_layers();
      row.cells.push_back(cell);
    }
    table.rows.push_back(std::move(row));
  }

  for (std::size_t c = 0; c < table.tasks.size() && !table.rows.empty(); ++c) {
    double best_acc = -1.0, best_lat = INFINITY;
    for (const auto& row : table.rows) {
      best_acc = std::max(best_acc, row.cells[c].accuracy);
      best_lat = std::min(best_lat, row.cells[c].mean_latency_ms);
    }
    double best_lat_at_best_acc = INFINITY;
    for (const auto& row : table.rows)
      if (row.cells[c].accuracy == best_acc)
        best_lat_at_best_acc = std::min(best_lat_at_best_acc, row.cells[c].mean_latency_ms);
    for (auto& row : table.rows) {
      auto& cell = row.cells[c];
      cell.best_accuracy = cell.accuracy == best_acc;
      cell.best_latency = cell.mean_latency_ms == best_lat;
      cell.best = cell.best_accuracy && cell.mean_latency_ms == best_lat_at_best_acc;
    }
  }
  return table;
}

std::string format_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  char buf[64];
  auto line = [&](const char* title, auto value, auto flag) {
    out << title << "\n";
    std::snprintf(buf, sizeof buf, "%-16s", "strategy");
    out << buf;
    for (const auto& t : table.tasks) {
      std::snprintf(buf, sizeof buf, " %16s", t.c_str());
      out << buf;
    }
    out << "\n";
    for (const auto& row : table.rows) {
      std::snprintf(buf, sizeof buf, "%-16s", row.strategy.c_str());
      out << buf;
      for (const auto& cell : row.cells) {
        std::snprintf(buf, sizeof buf, " %15.4f%c", value(cell), flag(cell) ? '*' : ' ');
        out << buf;
      }
      out << "\n";
    }
  };
  line("accuracy", [](const ComparisonCell& c) { return c.accuracy; },
       [](const ComparisonCell& c) { return c.best_accuracy; });
  line("mean latency (ms)", [](const ComparisonCell& c) { return c.mean_latency_ms; },
       [](const ComparisonCell& c) { return c.best_latency; });
  line("mean layers", [](const ComparisonCell& c) { return c.mean_layers; },
       [](const ComparisonCell&) { return false; });
  out << "* best in column (ties flagged jointly)\n";
  return out.str();
}

}  // namespace navee
