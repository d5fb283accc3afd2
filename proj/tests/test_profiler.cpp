#include <algorithm>
#include <random>

#include "doctest.h"
#include "navee/error.hpp"
#include "navee/parallel.hpp"
#include "navee/profiler.hpp"
#include "support.hpp"

using namespace navee;
using navee::testing::random_table;
using navee::testing::synthetic_spec;
using navee::testing::table_case;

namespace {

AccuracyProfile counts_profile(std::vector<std::int64_t> counts, std::int64_t n) {
  AccuracyProfile p;
  p.task_id = "t";
  p.num_layers = static_cast<int>(counts.size());
  p.sample_count = n;
  p.correct_counts = std::move(counts);
  return p;
}

}  // namespace

TEST_CASE("two-sample table by hand") {
  // Rows ([a,a], truth a) and ([b,a], truth a).
  auto tc = table_case(2, 2, {{0, 0}, {1, 0}}, {0, 0});
  const auto p = layerwise_accuracy(tc.model, tc.samples, "t");
  CHECK(p.acc_by_layer() == std::vector<double>{0.5, 1.0});
  CHECK(p.full_accuracy() == 1.0);
  CHECK(select_exit_layer(p).exit_layer == 2);
  CHECK_FALSE(select_exit_layer(p).satisfied_strictly);
}

TEST_CASE("perfect table is 1.0 everywhere and exits at layer 1") {
  auto tc = table_case(4, 3, {{2, 2, 2, 2}, {1, 1, 1, 1}}, {2, 1});
  const auto p = layerwise_accuracy(tc.model, tc.samples, "t");
  for (double a : p.acc_by_layer()) CHECK(a == 1.0);
  CHECK(select_exit_layer(p).exit_layer == 1);
}

TEST_CASE("worked example: L=12 selects layer 9") {
  // Acc(6)=0.70, Acc(8)=0.83, Acc(9)=0.85=Acc(12), with a later dip to 0.84.
  const auto p = counts_profile({40, 50, 55, 60, 65, 70, 78, 83, 85, 84, 85, 85}, 100);
  const auto sel = select_exit_layer(p);
  CHECK(sel.exit_layer == 9);
  CHECK(sel.satisfied_strictly);
  CHECK(sel.acc_at_exit == doctest::Approx(0.85));
  CHECK(100.0 * (12 - sel.exit_layer) / 12 == doctest::Approx(25.0));
}

TEST_CASE("a later dip does not disqualify an earlier layer") {
  const auto p = counts_profile({9, 10, 7, 10}, 10);
  CHECK(select_exit_layer(p).exit_layer == 2);
}

TEST_CASE("constant accuracy exits at layer 1") {
  CHECK(select_exit_layer(counts_profile({3, 3, 3}, 5)).exit_layer == 1);
}

TEST_CASE("equality is exact for fractions that round differently in floating point") {
  // 1/3 at both layers; comparing counts avoids any float hazard.
  CHECK(select_exit_layer(counts_profile({1, 0, 1}, 3)).exit_layer == 1);
}

TEST_CASE("errors: empty input, label domain, mis-tagged samples, failing task named") {
  auto tc = table_case(2, 2, {{0, 0}}, {0});
  CHECK_THROWS_WITH_AS(layerwise_accuracy(tc.model, std::span<const Sample>{}, "t"),
                       doctest::Contains("no samples"), Error);
  auto bad = tc.samples;
  bad[0].label = 7;
  try {
    layerwise_accuracy(tc.model, bad, "t");
    FAIL("expected label-domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LabelDomain);
  }
  TaskPartitions parts{{"pedestrian", {}}};
  try {
    profile_tasks(tc.model, parts);
    FAIL("expected empty-input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
    CHECK(std::string(e.what()).find("pedestrian") != std::string::npos);
  }
}

TEST_CASE("oracle equivalence on random tables, with minimality and safety bound") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 300; ++trial) {
    auto tc = random_table(rng);
    const int L = tc.model.num_layers();
    const auto& rows = std::get<PredictionTable>(tc.model.backend()).rows();
    const auto p = layerwise_accuracy(tc.model, tc.samples, "t");
    const auto sel = select_exit_layer(p);

    std::vector<double> acc(L);
    for (int l = 0; l < L; ++l) {
      int c = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) c += rows[i][l] == tc.samples[i].label;
      acc[l] = static_cast<double>(c) / static_cast<double>(rows.size());
    }
    int oracle = L;
    for (int l = 1; l <= L; ++l)
      if (acc[l - 1] >= acc[L - 1]) {
        oracle = l;
        break;
      }
    REQUIRE(p.acc_by_layer() == acc);
    REQUIRE(sel.exit_layer == oracle);
    for (int l = 1; l < sel.exit_layer; ++l) REQUIRE(p.accuracy(l) < p.full_accuracy());
    REQUIRE(sel.acc_at_exit >= p.full_accuracy());
    REQUIRE(sel.satisfied_strictly == (sel.exit_layer < L));
  }
}

TEST_CASE("shuffling the dataset changes nothing") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    auto tc = random_table(rng);
    const auto a = layerwise_accuracy(tc.model, tc.samples, "t");
    std::shuffle(tc.samples.begin(), tc.samples.end(), rng);
    CHECK(layerwise_accuracy(tc.model, tc.samples, "t") == a);
  }
}

TEST_CASE("parallel profile equals the serial reference at any thread count") {
  const auto f = gen_synthetic(synthetic_spec(64, 10, {{"a", 3}, {"b", 7}}, 4, 0.25, 60));
  const auto parts = partition_by_task(f.dataset);
  const int before = max_threads();
  for (const auto& [task, samples] : parts) {
    const auto serial = layerwise_accuracy_serial(f.model, samples, task);
    for (int threads : {1, 2, 4}) {
      set_threads(threads);
      CHECK(layerwise_accuracy(f.model, samples, task) == serial);
    }
  }
  set_threads(before);
}

TEST_CASE("profile_tasks on a planted fixture") {
  const auto f = gen_synthetic(synthetic_spec(64, 10, {{"taskA", 3}, {"taskB", 7}}, 3, 0.0, 100));
  const auto art = profile_tasks(f.model, partition_by_task(f.dataset));
  REQUIRE(art.selections.size() == 2);
  CHECK(art.selection("taskA")->exit_layer == 3);
  CHECK(art.selection("taskB")->exit_layer == 7);
  CHECK(art.selection("taskC") == nullptr);
  CHECK(art.profile("taskA")->sample_count == 100);
}
