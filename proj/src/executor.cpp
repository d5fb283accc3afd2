#include "navee/executor.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <algorithm>

#include "navee/error.hpp"
#include "navee/parallel.hpp"

namespace navee {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

int parse_int(std::string_view s, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorKind::StrategyConfig, "bad integer in strategy '" + std::string(whole) + "'");
  return value;
}

double parse_real(std::string_view s, std::string_view whole) {
  const std::string buf(s);
  char* end = nullptr;
  const double value = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(value))
    throw Error(ErrorKind::StrategyConfig, "bad number in strategy '" + std::string(whole) + "'");
  return value;
}

// Shortest decimal that parses back to the same double.
std::string format_real(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct ExitDecision {
  int exit_layer;
  bool needs_head;  // head must be read at each layer before exiting
};

}  // namespace

ExitStrategy parse_strategy(std::string_view text) {
  const auto parts = split(text, ':');
  const std::string_view kind = parts[0];
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() < lo || parts.size() > hi)
      throw Error(ErrorKind::StrategyConfig, "wrong number of fields in strategy '" + std::string(text) + "'");
  };
  if (kind == "full") {
    arity(1, 1);
    return FullInference{};
  }
  if (kind == "fixed") {
    arity(2, 2);
    return FixedExit{parse_int(parts[1], text)};
  }
  if (kind == "conf") {
    arity(2, 3);
    ConfidenceThreshold s{parse_real(parts[1], text), 1};
    if (parts.size() == 3) s.min_layer = parse_int(parts[2], text);
    return s;
  }
  if (kind == "stable") {
    arity(2, 3);
    StablePrediction s{parse_int(parts[1], text), 1};
    if (parts.size() == 3) s.min_layer = parse_int(parts[2], text);
    return s;
  }
  if (kind == "frac") {
    arity(2, 2);
    return FixedFraction{parse_real(parts[1], text)};
  }
  throw Error(ErrorKind::StrategyConfig, "unknown strategy '" + std::string(text) + "'");
}

std::vector<ExitStrategy> parse_strategy_list(std::string_view comma_separated) {
  std::vector<ExitStrategy> out;
  if (comma_separated.empty()) return out;
  for (auto part : split(comma_separated, ',')) out.push_back(parse_strategy(part));
  return out;
}

std::string format_strategy(const ExitStrategy& strategy) {
  return std::visit(
      overloaded{
          [](const FullInference&) { return std::string("full"); },
          [](const FixedExit& s) { return "fixed:" + std::to_string(s.layer); },
          [](const ConfidenceThreshold& s) {
            std::string out = "conf:" + format_real(s.threshold);
            if (s.min_layer != 1) out += ":" + std::to_string(s.min_layer);
            return out;
          },
          [](const StablePrediction& s) {
            std::string out = "stable:" + std::to_string(s.window);
            if (s.min_layer != 1) out += ":" + std::to_string(s.min_layer);
            return out;
          },
          [](const FixedFraction& s) { return "frac:" + format_real(s.fraction); },
      },
      strategy);
}

void validate_strategy(const ExitStrategy& strategy, int num_layers) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::StrategyConfig, format_strategy(strategy) + ": " + why);
  };
  auto check_min = [&](int m) {
    if (m < 1 || m > num_layers) fail("min_layer must lie in [1, " + std::to_string(num_layers) + "]");
  };
  std::visit(overloaded{
                 [](const FullInference&) {},
                 [&](const FixedExit& s) {
                   if (s.layer < 1 || s.layer > num_layers)
                     fail("exit layer must lie in [1, " + std::to_string(num_layers) + "]");
                 },
                 [&](const ConfidenceThreshold& s) {
                   if (!(s.threshold >= 0.0 && s.threshold <= 1.0)) fail("threshold must lie in [0, 1]");
                   check_min(s.min_layer);
                 },
                 [&](const StablePrediction& s) {
                   if (s.window < 2) fail("window must be >= 2");
                   check_min(s.min_layer);
                 },
                 [&](const FixedFraction& s) {
                   if (!(s.fraction > 0.0 && s.fraction <= 1.0)) fail("fraction must lie in (0, 1]");
                 },
             },
             strategy);
}

int fixed_fraction_layer(double fraction, int num_layers) {
  const int layer = static_cast<int>(std::ceil(fraction * num_layers - 1e-9));
  return std::clamp(layer, 1, num_layers);
}

InferenceResult run(const LayeredModel& model, const Sample& x, const ExitStrategy& strategy,
                    bool trace) {
  const int layers = model.num_layers();
  validate_strategy(strategy, layers);

  // Static strategies know their exit layer up front and never read the head
  // before it (unless a trace was requested).
  const ExitDecision plan = std::visit(
      overloaded{
          [&](const FullInference&) { return ExitDecision{layers, false}; },
          [&](const FixedExit& s) { return ExitDecision{s.layer, false}; },
          [&](const FixedFraction& s) { return ExitDecision{fixed_fraction_layer(s.fraction, layers), false}; },
          [&](const ConfidenceThreshold&) { return ExitDecision{layers, true}; },
          [&](const StablePrediction&) { return ExitDecision{layers, true}; },
      },
      strategy);

  InferenceResult result;
  result.strategy = strategy;
  LayerCounter counter;
  HiddenState state = model.embed(x);
  std::vector<Label> labels;
  HeadOutput out{};

  for (int l = 1; l <= plan.exit_layer; ++l) {
    model.step(state, &counter);
    const bool at_planned_exit = l == plan.exit_layer;
    if (!(plan.needs_head || trace || at_planned_exit)) continue;

    out = model.head(state);
    labels.push_back(out.label);
    if (trace) result.trace.push_back({l, out.label, out.confidence});

    bool exit_now = at_planned_exit;
    if (const auto* s = std::get_if<ConfidenceThreshold>(&strategy)) {
      exit_now = exit_now || (l >= s->min_layer && out.confidence >= s->threshold);
    } else if (const auto* s = std::get_if<StablePrediction>(&strategy)) {
      if (l >= s->min_layer && l >= s->window) {
        bool stable = true;
        for (int i = 1; i < s->window; ++i)
          stable = stable && labels[labels.size() - 1 - i] == out.label;
        exit_now = exit_now || stable;
      }
    }
    if (exit_now) {
      result.exit_layer = l;
      break;
    }
  }
  result.predicted = out.label;
  result.layers_executed = counter.applications;
  return result;
}

namespace {

BatchResult summarize(std::span<const Sample> samples, std::vector<InferenceResult> results) {
  BatchResult batch;
  std::int64_t correct = 0, layers = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].predicted == samples[i].label) ++correct;
    layers += results[i].layers_executed;
  }
  const double n = static_cast<double>(results.size());
  batch.accuracy = static_cast<double>(correct) / n;
  batch.mean_layers_executed = static_cast<double>(layers) / n;
  batch.results = std::move(results);
  return batch;
}

}  // namespace

BatchResult batch_run_serial(const LayeredModel& model, std::span<const Sample> samples,
                             const ExitStrategy& strategy, bool trace) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "batch has no samples");
  std::vector<InferenceResult> results;
  results.reserve(samples.size());
  for (const auto& s : samples) results.push_back(run(model, s, strategy, trace));
  return summarize(samples, std::move(results));
}

BatchResult batch_run(const LayeredModel& model, std::span<const Sample> samples,
                      const ExitStrategy& strategy, bool trace) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "batch has no samples");
  validate_strategy(strategy, model.num_layers());
  std::vector<InferenceResult> results(samples.size());
  const auto n = static_cast<std::int64_t>(samples.size());
  ExceptionSlot failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      results[i] = run(model, samples[i], strategy, trace);
    } catch (...) {
      failure.capture();
    }
  }
  failure.rethrow_if_set();
  return summarize(samples, std::move(results));
}

}  // namespace navee
