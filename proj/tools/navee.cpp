// navee: command-line front end for profiling, exit selection, inference,
// trace simulation, reporting and benchmarking.
//
// Exit codes: 0 success, 1 domain or validation error, 2 usage error.

#include <cstdio>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "navee/bench.hpp"
#include "navee/error.hpp"
#include "navee/executor.hpp"
#include "navee/fixtures.hpp"
#include "navee/io.hpp"
#include "navee/parallel.hpp"
#include "navee/profiler.hpp"
#include "navee/router.hpp"
#include "navee/simulator.hpp"
#include "navee/validate.hpp"

namespace {

using namespace navee;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Loaded {
  LayeredModel model;
  std::string model_fingerprint;
  std::vector<Sample> dataset;
};

Loaded load_model_and_data(const std::string& model_path, const std::string& data_path) {
  const std::string model_bytes = io::read_file(model_path);
  LayeredModel model = io::decode_model(model_bytes);
  auto dataset = io::decode_dataset(io::read_file(data_path), model.labels());
  return {std::move(model), io::fingerprint_bytes(model_bytes), std::move(dataset)};
}

void require_fingerprint(std::string_view artifact, const std::string& recorded,
                         const std::string& actual) {
  if (recorded != actual)
    throw Error(ErrorKind::Fingerprint, std::string(artifact) + " was built for model " + recorded +
                                            " but the supplied model is " + actual +
                                            "; re-run profile against this model");
}

std::string read_input(const std::string& path) {
  if (path != "-") return io::read_file(path);
  return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
}

void emit(const std::optional<std::string>& out, const std::string& text) {
  if (out)
    io::write_file(*out, text);
  else
    std::cout << text;
}

// --- subcommands -----------------------------------------------------------

struct GenArgs {
  std::string spec, out_model, out_data;
};

int cmd_gen(const GenArgs& a) {
  const Fixture f = gen_synthetic(parse_fixture_spec(io::read_file(a.spec)));
  const std::string model_bytes = io::encode_model(f.model);
  const std::string data_bytes = io::encode_dataset(f.dataset, f.model.labels());
  io::write_file(a.out_model, model_bytes);
  io::write_file(a.out_data, data_bytes);
  std::cout << "model   " << a.out_model << "  " << io::fingerprint_bytes(model_bytes) << "\n"
            << "dataset " << a.out_data << "  " << io::fingerprint_bytes(data_bytes) << "  ("
            << f.dataset.size() << " samples)\n";
  return kExitOk;
}

struct ProfileArgs {
  std::string model, dataset, out;
  int parallel = 0;
};

int cmd_profile(const ProfileArgs& a) {
  if (a.parallel > 0) set_threads(a.parallel);
  const Loaded in = load_model_and_data(a.model, a.dataset);
  ProfileArtifact artifact = profile_tasks(in.model, partition_by_task(in.dataset));
  artifact.model_fingerprint = in.model_fingerprint;
  artifact.dataset_fingerprint = io::fingerprint_file(a.dataset);
  io::write_file(a.out, io::encode_profile(artifact));
  for (const auto& s : artifact.selections)
    std::cout << s.task_id << ": exit layer " << s.exit_layer << "\n";
  return kExitOk;
}

struct SelectArgs {
  std::string profile;
  std::optional<std::string> task, scene_map, out, model;
};

int cmd_select(const SelectArgs& a) {
  const ProfileArtifact profile = io::decode_profile(io::read_file(a.profile));
  if (a.model) require_fingerprint("profile", profile.model_fingerprint, io::fingerprint_file(*a.model));

  if (a.scene_map) {
    ExitConfigTable table = load_config(profile, io::decode_scene_task_map(io::read_file(*a.scene_map)));
    const std::string text = io::encode_exit_config({profile.model_fingerprint, std::move(table)});
    emit(a.out, text);
    return kExitOk;
  }

  std::string text = "task\texit_layer\tacc_at_exit\tfull_accuracy\tsatisfied_strictly\n";
  bool found = false;
  for (std::size_t i = 0; i < profile.selections.size(); ++i) {
    const auto& s = profile.selections[i];
    if (a.task && s.task_id != *a.task) continue;
    found = true;
    char buf[64];
    std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t", s.acc_at_exit,
                  profile.profiles[i].full_accuracy());
    text += s.task_id + "\t" + std::to_string(s.exit_layer) + buf +
            (s.satisfied_strictly ? "true" : "false") + "\n";
  }
  if (a.task && !found)
    throw Error(ErrorKind::Validation, "task '" + *a.task + "' is not in the profile");
  emit(a.out, text);
  return kExitOk;
}

struct RunArgs {
  std::string model, dataset, strategy;
  std::optional<std::string> profile, out;
  bool trace = false;
};

int cmd_run(const RunArgs& a) {
  const Loaded in = load_model_and_data(a.model, a.dataset);
  std::vector<InferenceResult> results(in.dataset.size());

  if (a.strategy == "profile") {
    // Per-task exit layers from a profile: the offline half of the method.
    if (!a.profile) throw Error(ErrorKind::StrategyConfig, "strategy 'profile' needs --profile");
    const ProfileArtifact profile = io::decode_profile(io::read_file(*a.profile));
    require_fingerprint("profile", profile.model_fingerprint, in.model_fingerprint);
    std::map<std::string, std::vector<std::size_t>> by_task;
    for (std::size_t i = 0; i < in.dataset.size(); ++i) by_task[in.dataset[i].task].push_back(i);
    for (const auto& [task, idx] : by_task) {
      const ExitSelection* sel = profile.selection(task);
      const ExitStrategy strategy = sel ? ExitStrategy{FixedExit{sel->exit_layer}} : FullInference{};
      std::vector<Sample> subset;
      subset.reserve(idx.size());
      for (auto i : idx) subset.push_back(in.dataset[i]);
      auto batch = batch_run(in.model, subset, strategy, a.trace);
      for (std::size_t k = 0; k < idx.size(); ++k) results[idx[k]] = std::move(batch.results[k]);
    }
  } else {
    if (a.profile) {
      const ProfileArtifact profile = io::decode_profile(io::read_file(*a.profile));
      require_fingerprint("profile", profile.model_fingerprint, in.model_fingerprint);
    }
    results = batch_run(in.model, in.dataset, parse_strategy(a.strategy), a.trace).results;
  }

  std::string text;
  std::int64_t correct = 0, layers = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    text += io::encode_result(in.dataset[i], results[i], in.model.labels());
    correct += results[i].predicted == in.dataset[i].label;
    layers += results[i].layers_executed;
  }
  emit(a.out, text);
  const double n = results.empty() ? 1.0 : static_cast<double>(results.size());
  std::fprintf(stderr, "samples %zu  accuracy %.4f  mean layers %.3f\n", results.size(),
               static_cast<double>(correct) / n, static_cast<double>(layers) / n);
  return kExitOk;
}

struct SimulateArgs {
  std::string model, dataset, trace, config, latency, out;
  std::optional<std::string> profile;
  std::string compare = "full";
  bool no_requests = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const Loaded in = load_model_and_data(a.model, a.dataset);
  const std::string config_text = io::read_file(a.config);

  ExitConfigTable table;
  if (config_text.find("\"scene_task_map\"") != std::string::npos) {
    if (!a.profile)
      throw Error(ErrorKind::ConfigValidation, "a scene-task map config needs --profile");
    const ProfileArtifact profile = io::decode_profile(io::read_file(*a.profile));
    require_fingerprint("profile", profile.model_fingerprint, in.model_fingerprint);
    table = load_config(profile, io::decode_scene_task_map(config_text));
  } else {
    io::ExitConfigArtifact config = io::decode_exit_config(config_text);
    require_fingerprint("exit config", config.model_fingerprint, in.model_fingerprint);
    table = std::move(config.table);
  }
  if (!table.entries.empty() && table.num_layers != in.model.num_layers())
    throw Error(ErrorKind::ConfigValidation, "config was built for " +
                                                 std::to_string(table.num_layers) +
                                                 " layers, model has " +
                                                 std::to_string(in.model.num_layers()));

  const DriveTrace trace = io::decode_trace(read_input(a.trace));
  const LatencyModel latency = io::decode_latency_model(io::read_file(a.latency));
  const auto comparisons = parse_strategy_list(a.compare);
  SimOptions options;
  options.record_requests = !a.no_requests;
  const SimReport report = simulate(trace, in.dataset, in.model, make_router_state(std::move(table)),
                                    latency, comparisons, options);
  io::write_file(a.out, io::encode_sim_report(report));
  std::cout << io::sim_report_text(report);
  return kExitOk;
}

struct ReportArgs {
  std::string in, format = "text";
  std::optional<std::string> out;
};

int cmd_report(const ReportArgs& a) {
  const SimReport report = io::decode_sim_report(io::read_file(a.in));
  if (a.format == "csv") {
    emit(a.out, io::sim_report_csv(report));
  } else {
    const auto table = compare_strategies(report, report.strategies);
    emit(a.out, io::sim_report_text(report) + "\n" + format_comparison(table));
  }
  return kExitOk;
}

struct BenchArgs {
  std::string model, dataset, strategies;
  int reps = 100, warmup = 10;
  int max_samples = 64;
};

int cmd_bench(const BenchArgs& a) {
  const Loaded in = load_model_and_data(a.model, a.dataset);
  if (in.dataset.empty()) throw Error(ErrorKind::EmptyInput, "dataset is empty");
  std::vector<Sample> samples(in.dataset.begin(),
                              in.dataset.begin() + std::min<std::size_t>(in.dataset.size(), a.max_samples));
  const auto strategies = parse_strategy_list(a.strategies);
  std::cout << format_bench(bench(in.model, samples, strategies, a.reps, a.warmup));
  return kExitOk;
}

struct ValidateArgs {
  std::string in;
  std::optional<std::string> model;
};

int cmd_validate(const ValidateArgs& a) {
  std::optional<std::filesystem::path> model;
  if (a.model) model = *a.model;
  const ValidationReport report = validate_artifact(a.in, model);
  std::cout << report.format();
  return report.ok() ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    apply_thread_env();
  } catch (const navee::Error& e) {
    std::cerr << "navee: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Navigation-guided early-exit inference toolkit"};
  app.require_subcommand(1);
  app.footer(std::string("Environment: ") + kThreadsEnv +
             "=N pins the worker thread count for every parallel kernel.\n"
             "Exit codes: 0 success, 1 domain/validation error, 2 usage error.");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a model file and dataset from a fixture spec");
  gen_cmd->add_option("--spec", gen.spec, "Fixture spec JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out-model", gen.out_model, "Output model file")->required();
  gen_cmd->add_option("--out-data", gen.out_data, "Output dataset (JSON Lines)")->required();

  ProfileArgs prof;
  auto* prof_cmd = app.add_subcommand("profile", "Layer-wise accuracy and exit layer per task");
  prof_cmd->add_option("--model", prof.model, "Model file")->required()->check(CLI::ExistingFile);
  prof_cmd->add_option("--dataset", prof.dataset, "Profiling dataset")->required()->check(CLI::ExistingFile);
  prof_cmd->add_option("--out", prof.out, "Output profile artifact")->required();
  prof_cmd->add_option("--parallel", prof.parallel, "Worker threads (overrides the environment)")
      ->check(CLI::PositiveNumber);

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Show exit layers, or build an exit config from a scene-task map");
  sel_cmd->add_option("--profile", sel.profile, "Profile artifact")->required()->check(CLI::ExistingFile);
  sel_cmd->add_option("--task", sel.task, "Show only this task");
  sel_cmd->add_option("--scene-map", sel.scene_map, "Scene-task map; emits an exit config")->check(CLI::ExistingFile);
  sel_cmd->add_option("--model", sel.model, "Check the profile against this model file")->check(CLI::ExistingFile);
  sel_cmd->add_option("--out", sel.out, "Write output here instead of stdout");

  RunArgs run_a;
  auto* run_cmd = app.add_subcommand("run", "Run inference over a dataset under one exit strategy");
  run_cmd->add_option("--model", run_a.model, "Model file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--dataset", run_a.dataset, "Dataset")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--strategy", run_a.strategy,
                      "full | fixed:L | conf:T[:min] | stable:K[:min] | frac:R | profile")
      ->required();
  run_cmd->add_option("--profile", run_a.profile, "Profile for strategy 'profile'; fingerprint-checked")
      ->check(CLI::ExistingFile);
  run_cmd->add_flag("--trace", run_a.trace, "Include per-layer labels and confidences");
  run_cmd->add_option("--out", run_a.out, "Write JSON Lines results here instead of stdout");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Replay a drive trace through router and executor");
  sim_cmd->add_option("--model", sim.model, "Model file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--dataset", sim.dataset, "Dataset the frames refer to")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--trace", sim.trace, "Drive trace (JSON Lines); '-' reads stdin")->required();
  sim_cmd->add_option("--config", sim.config, "Exit config, or a scene-task map together with --profile")
      ->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--profile", sim.profile, "Profile used with a scene-task map config")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--latency", sim.latency, "Latency model JSON")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out, "Output report JSON")->required();
  sim_cmd->add_option("--compare", sim.compare, "Comparison strategies, comma separated")->capture_default_str();
  sim_cmd->add_flag("--no-requests", sim.no_requests, "Omit the per-request log from the report");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Render a simulation report");
  rep_cmd->add_option("--in", rep.in, "Report JSON")->required()->check(CLI::ExistingFile);
  rep_cmd->add_option("--format", rep.format, "csv | text")->capture_default_str()->check(CLI::IsMember({"csv", "text"}));
  rep_cmd->add_option("--out", rep.out, "Write here instead of stdout");

  BenchArgs ben;
  auto* ben_cmd = app.add_subcommand("bench", "Wall-clock median per inference, relative to full depth");
  ben_cmd->add_option("--model", ben.model, "Synthetic model file")->required()->check(CLI::ExistingFile);
  ben_cmd->add_option("--dataset", ben.dataset, "Dataset")->required()->check(CLI::ExistingFile);
  ben_cmd->add_option("--strategies", ben.strategies, "Strategies, comma separated")->required();
  ben_cmd->add_option("--reps", ben.reps, "Timed repetitions per strategy (>= 1)")->capture_default_str()->check(CLI::Range(1, 100000000));
  ben_cmd->add_option("--warmup", ben.warmup, "Untimed warmup repetitions")->capture_default_str()->check(CLI::NonNegativeNumber);
  ben_cmd->add_option("--samples", ben.max_samples, "Samples cycled through")->capture_default_str()->check(CLI::PositiveNumber);

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Check an artifact's schema and invariants");
  val_cmd->add_option("--in", val.in, "Artifact file")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--model", val.model, "Cross-check fingerprints against this model")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*prof_cmd) return cmd_profile(prof);
    if (*sel_cmd) return cmd_select(sel);
    if (*run_cmd) return cmd_run(run_a);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*rep_cmd) return cmd_report(rep);
    if (*ben_cmd) return cmd_bench(ben);
    if (*val_cmd) return cmd_validate(val);
  } catch (const navee::Error& e) {
    std::cerr << "navee: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "navee: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}
