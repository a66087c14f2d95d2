// Batch runner for the pick-and-drop simulator.
#include "pickdrop/pickdrop.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(pd_status status, const std::string& context) {
  if (status != PD_OK)
    throw HarnessError(context + ": " + pd_status_string(status) + ": " + pd_last_error());
}

std::string take(char* text) {
  std::string out = text ? text : "";
  pd_string_free(text);
  return out;
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Template = std::unique_ptr<pd_template, Deleter<pd_template, pd_template_free>>;
using ScenarioPtr = std::unique_ptr<pd_scenario, Deleter<pd_scenario, pd_scenario_free>>;
using Records = std::unique_ptr<pd_records, Deleter<pd_records, pd_records_free>>;
using ReportPtr = std::unique_ptr<pd_report, Deleter<pd_report, pd_report_free>>;

Template make_template(const std::string& path, const std::string& mode, const std::string& noise, int objects) {
  pd_template* raw = nullptr;
  if (path.empty())
    check(pd_template_default(&raw), "default template");
  else
    check(pd_template_load(path.c_str(), &raw), path);
  Template tpl(raw);
  if (!mode.empty()) check(pd_template_set_mode(tpl.get(), mode.c_str()), "--mode");
  if (!noise.empty()) check(pd_template_set_profile(tpl.get(), noise.c_str()), "--noise");
  if (objects >= 0) check(pd_template_set_object_count(tpl.get(), objects), "--objects");
  return tpl;
}

std::vector<ScenarioPtr> generate(const pd_template* tpl, std::uint64_t seed, int count) {
  std::vector<ScenarioPtr> out;
  for (int i = 0; i < count; ++i) {
    pd_scenario* raw = nullptr;
    check(pd_scenario_generate(tpl, seed + static_cast<std::uint64_t>(i), &raw),
          "generating scenario with seed " + std::to_string(seed + i));
    out.emplace_back(raw);
  }
  return out;
}

void report(const pd_records* records, const std::string& formats, const std::string& dir,
            const std::vector<ScenarioPtr>& scenarios) {
  pd_report* raw = nullptr;
  check(pd_aggregate(records, &raw), "aggregating records");
  ReportPtr rep(raw);
  std::vector<const pd_scenario*> maps;
  for (const auto& s : scenarios) maps.push_back(s.get());
  check(pd_report_emit(rep.get(), formats.c_str(), dir.c_str(), maps.data(), maps.size()), dir);
  char* summary = nullptr;
  check(pd_report_summary(rep.get(), &summary), "summary");
  std::fputs(take(summary).c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pick-and-drop task simulator and batch runner"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run trials and write reports");
  std::vector<std::string> run_files;
  std::string run_template, run_mode, run_noise, run_out = "out", run_formats = "csv,txt,svg", run_set = "default";
  std::uint64_t run_seed = 1;
  int run_trials = 1, run_parallel = 1, run_objects = -1;
  double run_density = 0.0;
  bool run_log = false;
  run->add_option("scenarios", run_files, "Scenario files; without any, scenarios are generated");
  run->add_option("--template", run_template, "Template for generated scenarios (default built in)");
  run->add_option("--mode", run_mode, "collect-all or one-by-one")
      ->check(CLI::IsMember({"collect-all", "one-by-one"}));
  run->add_option("--seed", run_seed, "Seed of the first trial");
  run->add_option("--trials", run_trials, "Trials per scenario file, or generated scenarios")
      ->check(CLI::PositiveNumber);
  run->add_option("--noise", run_noise, "Noise profile: none or field");
  run->add_option("--objects", run_objects, "Objects per generated scenario");
  run->add_option("--parallel", run_parallel, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--density", run_density, "Render density in samples per square meter");
  run->add_option("--set", run_set, "Set name used to group metrics");
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--format", run_formats, "Comma-separated subset of csv,txt,svg");
  run->add_flag("--log", run_log, "Also write one event log per trial");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate scenario files from a template");
  std::string gen_template, gen_mode, gen_noise, gen_out = "scenarios";
  std::uint64_t gen_seed = 1;
  int gen_count = 1, gen_objects = -1;
  gen->add_option("--template", gen_template, "Template file (default built in)");
  gen->add_option("--mode", gen_mode, "collect-all or one-by-one")
      ->check(CLI::IsMember({"collect-all", "one-by-one"}));
  gen->add_option("--noise", gen_noise, "Noise profile: none or field");
  gen->add_option("--objects", gen_objects, "Objects per scenario");
  gen->add_option("--seed", gen_seed, "Seed of the first scenario");
  gen->add_option("--count", gen_count, "Number of scenarios")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-aggregate stored trial records");
  std::vector<std::string> replay_files;
  std::string replay_out = "out", replay_formats = "csv,txt";
  replay->add_option("records", replay_files, "Record files (JSON lines)")->required();
  replay->add_option("--out", replay_out, "Output directory");
  replay->add_option("--format", replay_formats, "Comma-separated subset of csv,txt,svg");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      std::vector<ScenarioPtr> scenarios;
      if (run_files.empty()) {
        const Template tpl = make_template(run_template, run_mode, run_noise, run_objects);
        scenarios = generate(tpl.get(), run_seed, run_trials);
      } else {
        for (const auto& file : run_files)
          for (int i = 0; i < run_trials; ++i) {
            pd_scenario* raw = nullptr;
            check(pd_scenario_load(file.c_str(), &raw), file);
            ScenarioPtr sc(raw);
            if (!run_noise.empty()) check(pd_scenario_set_profile(sc.get(), run_noise.c_str()), "--noise");
            check(pd_scenario_set_seed(sc.get(), run_seed + static_cast<std::uint64_t>(i)), "--seed");
            scenarios.push_back(std::move(sc));
          }
      }
      std::vector<const pd_scenario*> list;
      for (const auto& s : scenarios) list.push_back(s.get());
      pd_batch_options opts{};
      opts.mode = run_mode.empty() ? nullptr : run_mode.c_str();
      opts.set = run_set.c_str();
      opts.parallelism = run_parallel;
      opts.density = run_density;
      pd_records* raw = nullptr;
      check(pd_run_batch(list.data(), list.size(), &opts, &raw), "running batch");
      Records records(raw);

      std::filesystem::create_directories(run_out);
      const std::string records_path = (std::filesystem::path(run_out) / "records.jsonl").string();
      check(pd_records_save(records.get(), records_path.c_str()), records_path);
      if (run_log)
        for (std::size_t i = 0; i < list.size(); ++i) {
          char* log = nullptr;
          check(pd_run_event_log(list[i], &opts, &log), "event log");
          const auto path = std::filesystem::path(run_out) / ("trial_" + std::to_string(i + 1) + ".log.jsonl");
          std::FILE* f = std::fopen(path.c_str(), "wb");
          if (!f) throw HarnessError("cannot write " + path.string());
          const std::string text = take(log);
          std::fwrite(text.data(), 1, text.size(), f);
          std::fclose(f);
        }
      report(records.get(), run_formats, run_out, scenarios);
      std::printf("%zu/%zu trials succeeded; records in %s\n", pd_records_task_successes(records.get()),
                  pd_records_count(records.get()), records_path.c_str());
    } else if (*gen) {
      const Template tpl = make_template(gen_template, gen_mode, gen_noise, gen_objects);
      const auto scenarios = generate(tpl.get(), gen_seed, gen_count);
      std::filesystem::create_directories(gen_out);
      for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto path =
            (std::filesystem::path(gen_out) / ("scenario_" + std::to_string(gen_seed + i) + ".json")).string();
        check(pd_scenario_save(scenarios[i].get(), path.c_str()), path);
        std::printf("%s\n", path.c_str());
      }
    } else if (*replay) {
      pd_records* raw = nullptr;
      check(pd_records_create(&raw), "records");
      Records all(raw);
      for (const auto& file : replay_files) {
        pd_records* part = nullptr;
        check(pd_records_load(file.c_str(), &part), file);
        Records loaded(part);
        check(pd_records_append(all.get(), loaded.get()), file);
      }
      report(all.get(), replay_formats, replay_out, {});
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pickdrop: %s\n", e.what());
    return 1;
  }
  return 0;
}
