#include "pickdrop/pickdrop.h"

#include "pickdrop/harness.hpp"
#include "pickdrop/report.hpp"
#include "pickdrop/scenario_io.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

struct pd_template {
  pickdrop::ScenarioTemplate value;
};
struct pd_scenario {
  pickdrop::Scenario value;
};
struct pd_records {
  std::vector<pickdrop::TrialRecord> value;
};
struct pd_report {
  pickdrop::Report value;
};

namespace {

thread_local std::string g_last_error;

pd_status fail(pd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
pd_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PD_OK;
  } catch (const pickdrop::ScenarioError& e) {
    return fail(e.kind() == pickdrop::ScenarioError::Kind::Io ? PD_IO_ERROR : PD_PARSE_ERROR, e.what());
  } catch (const pickdrop::GenerationError& e) {
    return fail(PD_GENERATION_ERROR, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PD_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PD_RUNTIME_ERROR, e.what());
  } catch (...) {
    return fail(PD_RUNTIME_ERROR, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " must not be null");
}

pickdrop::BatchOptions batch_options(const pd_batch_options* o) {
  pickdrop::BatchOptions opts;
  if (!o) return opts;
  if (o->mode) opts.mode = pickdrop::task_mode_from_string(o->mode);
  if (o->set) opts.set = o->set;
  opts.parallelism = o->parallelism > 0 ? o->parallelism : 1;
  if (o->density > 0.0) opts.task = pickdrop::TaskConfig::at_density(o->density);
  opts.task.keep_trajectory = o->drop_trajectories == 0;
  return opts;
}

}  // namespace

extern "C" {

PD_API const char* pd_version(void) { return "0.1.0"; }

PD_API const char* pd_last_error(void) { return g_last_error.c_str(); }

PD_API const char* pd_status_string(pd_status status) {
  switch (status) {
    case PD_OK: return "ok";
    case PD_INVALID_ARGUMENT: return "invalid argument";
    case PD_PARSE_ERROR: return "parse error";
    case PD_IO_ERROR: return "i/o error";
    case PD_GENERATION_ERROR: return "generation error";
    case PD_RUNTIME_ERROR: return "runtime error";
  }
  return "unknown status";
}

PD_API void pd_string_free(char* text) { std::free(text); }

PD_API pd_status pd_template_default(pd_template** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pd_template{};
  });
}

PD_API pd_status pd_template_parse(const char* json, pd_template** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new pd_template{pickdrop::parse_template(json)};
  });
}

PD_API pd_status pd_template_load(const char* path, pd_template** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pd_template{pickdrop::load_template(path)};
  });
}

PD_API pd_status pd_template_dump(const pd_template* tpl, char** out) {
  return guarded([&] {
    require(tpl, "template");
    require(out, "out");
    *out = copy_string(pickdrop::dump_template(tpl->value));
  });
}

PD_API pd_status pd_template_set_mode(pd_template* tpl, const char* mode) {
  return guarded([&] {
    require(tpl, "template");
    require(mode, "mode");
    tpl->value.mode = pickdrop::task_mode_from_string(mode);
  });
}

PD_API pd_status pd_template_set_profile(pd_template* tpl, const char* profile) {
  return guarded([&] {
    require(tpl, "template");
    require(profile, "profile");
    tpl->value.noise = pickdrop::noise_profile(profile);
    tpl->value.execution = pickdrop::execution_profile(profile);
  });
}

PD_API pd_status pd_template_set_object_count(pd_template* tpl, int count) {
  return guarded([&] {
    require(tpl, "template");
    if (count < 0) throw std::invalid_argument("object count must be non-negative");
    tpl->value.object_count = count;
  });
}

PD_API void pd_template_free(pd_template* tpl) { delete tpl; }

PD_API pd_status pd_scenario_generate(const pd_template* tpl, uint64_t seed, pd_scenario** out) {
  return guarded([&] {
    require(tpl, "template");
    require(out, "out");
    *out = new pd_scenario{pickdrop::generate_random_scenario(tpl->value, seed)};
  });
}

PD_API pd_status pd_scenario_parse(const char* json, pd_scenario** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new pd_scenario{pickdrop::parse_scenario(json)};
  });
}

PD_API pd_status pd_scenario_load(const char* path, pd_scenario** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new pd_scenario{pickdrop::load_scenario(path)};
  });
}

PD_API pd_status pd_scenario_dump(const pd_scenario* scenario, char** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    *out = copy_string(pickdrop::dump_scenario(scenario->value));
  });
}

PD_API pd_status pd_scenario_save(const pd_scenario* scenario, const char* path) {
  return guarded([&] {
    require(scenario, "scenario");
    require(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pickdrop::ScenarioError(pickdrop::ScenarioError::Kind::Io, std::string("cannot write '") + path + "'");
    out << pickdrop::dump_scenario(scenario->value);
    out.flush();
    if (!out) throw pickdrop::ScenarioError(pickdrop::ScenarioError::Kind::Io, std::string("failed writing '") + path + "'");
  });
}

PD_API pd_status pd_scenario_set_profile(pd_scenario* scenario, const char* profile) {
  return guarded([&] {
    require(scenario, "scenario");
    require(profile, "profile");
    scenario->value.noise = pickdrop::noise_profile(profile);
    scenario->value.execution = pickdrop::execution_profile(profile);
  });
}

PD_API pd_status pd_scenario_set_seed(pd_scenario* scenario, uint64_t seed) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->value.seed = seed;
  });
}

PD_API const char* pd_scenario_name(const pd_scenario* scenario) {
  return scenario ? scenario->value.name.c_str() : "";
}

PD_API size_t pd_scenario_object_count(const pd_scenario* scenario) {
  return scenario ? scenario->value.objects.size() : 0;
}

PD_API void pd_scenario_free(pd_scenario* scenario) { delete scenario; }

PD_API pd_status pd_run_batch(const pd_scenario* const* scenarios, size_t count,
                              const pd_batch_options* options, pd_records** out) {
  return guarded([&] {
    require(scenarios, "scenarios");
    require(out, "out");
    std::vector<pickdrop::Scenario> list;
    list.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(scenarios[i], "scenario");
      list.push_back(scenarios[i]->value);
    }
    *out = new pd_records{pickdrop::run_batch(list, batch_options(options))};
  });
}

PD_API pd_status pd_run_event_log(const pd_scenario* scenario, const pd_batch_options* options, char** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    const pickdrop::BatchOptions opts = batch_options(options);
    pickdrop::TaskSpec spec = pickdrop::TaskSpec::from(scenario->value);
    if (opts.mode) spec.mode = *opts.mode;
    const auto result = pickdrop::run_task(scenario->value, spec, opts.task);
    std::ostringstream log;
    pickdrop::write_event_log(log, result.state.log);
    *out = copy_string(log.str());
  });
}

PD_API pd_status pd_records_create(pd_records** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pd_records{};
  });
}

PD_API pd_status pd_records_load(const char* path, pd_records** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    if (!std::filesystem::exists(path))
      throw pickdrop::ScenarioError(pickdrop::ScenarioError::Kind::Io, std::string("no such file '") + path + "'");
    try {
      *out = new pd_records{pickdrop::load_records(path)};
    } catch (const std::runtime_error& e) {
      throw pickdrop::ScenarioError(pickdrop::ScenarioError::Kind::Schema, e.what());
    }
  });
}

PD_API pd_status pd_records_save(const pd_records* records, const char* path) {
  return guarded([&] {
    require(records, "records");
    require(path, "path");
    try {
      pickdrop::save_records(path, records->value);
    } catch (const std::runtime_error& e) {
      throw pickdrop::ScenarioError(pickdrop::ScenarioError::Kind::Io, e.what());
    }
  });
}

PD_API pd_status pd_records_append(pd_records* dst, const pd_records* src) {
  return guarded([&] {
    require(dst, "destination");
    require(src, "source");
    dst->value.insert(dst->value.end(), src->value.begin(), src->value.end());
  });
}

PD_API size_t pd_records_count(const pd_records* records) { return records ? records->value.size() : 0; }

PD_API size_t pd_records_task_successes(const pd_records* records) {
  size_t n = 0;
  if (records)
    for (const auto& r : records->value) n += r.task_success ? 1 : 0;
  return n;
}

PD_API pd_status pd_records_get_json(const pd_records* records, size_t index, char** out) {
  return guarded([&] {
    require(records, "records");
    require(out, "out");
    if (index >= records->value.size()) throw std::invalid_argument("record index out of range");
    *out = copy_string(pickdrop::record_to_json(records->value[index]));
  });
}

PD_API void pd_records_free(pd_records* records) { delete records; }

PD_API pd_status pd_aggregate(const pd_records* records, pd_report** out) {
  return guarded([&] {
    require(records, "records");
    require(out, "out");
    *out = new pd_report{pickdrop::aggregate_metrics(records->value)};
  });
}

PD_API pd_status pd_report_summary(const pd_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(pickdrop::summary_text(report->value));
  });
}

PD_API pd_status pd_report_metrics_csv(const pd_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = copy_string(pickdrop::metrics_csv(report->value));
  });
}

PD_API pd_status pd_report_emit(const pd_report* report, const char* formats, const char* dir,
                                const pd_scenario* const* scenarios, size_t scenario_count) {
  return guarded([&] {
    require(report, "report");
    require(formats, "formats");
    require(dir, "dir");
    std::map<std::string, pickdrop::OccupancyGrid> maps;
    for (size_t i = 0; scenarios && i < scenario_count; ++i)
      if (scenarios[i]) maps.emplace(scenarios[i]->value.name, scenarios[i]->value.grid);
    try {
      pickdrop::emit_report(report->value, pickdrop::parse_formats(formats), dir, maps);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw pickdrop::ScenarioError(pickdrop::ScenarioError::Kind::Io, e.what());
    }
  });
}

PD_API void pd_report_free(pd_report* report) { delete report; }

}  // extern "C"
