#include "navee/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "navee/error.hpp"

namespace navee {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchReport bench(const LayeredModel& model, std::span<const Sample> samples,
                  std::span<const ExitStrategy> strategies, int reps, int warmup) {
  if (!model.is_synthetic())
    throw Error(ErrorKind::UnsupportedBackend, "bench needs the synthetic transformer backend");
  if (reps < 1) throw Error(ErrorKind::Domain, "bench needs at least one repetition");
  if (warmup < 0) throw Error(ErrorKind::Domain, "warmup must be >= 0");
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "bench needs at least one sample");

  std::vector<ExitStrategy> timed{FullInference{}};
  timed.insert(timed.end(), strategies.begin(), strategies.end());
  for (const auto& s : timed) validate_strategy(s, model.num_layers());

  std::vector<std::vector<double>> times(timed.size());
  std::vector<long long> layers(timed.size(), 0);
  volatile Label sink = 0;
  for (int rep = -warmup; rep < reps; ++rep) {
    const Sample& x = samples[static_cast<std::size_t>(rep + warmup) % samples.size()];
    for (std::size_t k = 0; k < timed.size(); ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const InferenceResult r = run(model, x, timed[k]);
      const auto t1 = std::chrono::steady_clock::now();
      sink = r.predicted;
      if (rep < 0) continue;
      times[k].push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
      layers[k] += r.layers_executed;
    }
  }
  (void)sink;

  BenchReport report;
  report.reps = reps;
  report.warmup = warmup;
  report.full_median_us = median(times[0]);
  for (std::size_t k = 1; k < timed.size(); ++k) {
    BenchEntry e;
    e.strategy = format_strategy(timed[k]);
    e.median_us = median(times[k]);
    e.ratio_to_full = e.median_us / report.full_median_us;
    e.mean_layers = static_cast<double>(layers[k]) / reps;
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::string format_bench(const BenchReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "reps %d  warmup %d  full median %.2f us\n", report.reps,
                report.warmup, report.full_median_us);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-16s %14s %10s %10s\n", "strategy", "median_us", "ratio", "layers");
  out << buf;
  for (const auto& e : report.entries) {
    std::snprintf(buf, sizeof buf, "%-16s %14.2f %10.3f %10.2f\n", e.strategy.c_str(), e.median_us,
                  e.ratio_to_full, e.mean_layers);
    out << buf;
  }
  return out.str();
}

}  // namespace navee
