#include "pickdrop/pickdrop.h"

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <string>

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  pd_string_free(s);
  return out;
}

pd_scenario* generate(std::uint64_t seed, int objects) {
  pd_template* tpl = nullptr;
  REQUIRE(pd_template_default(&tpl) == PD_OK);
  REQUIRE(pd_template_set_object_count(tpl, objects) == PD_OK);
  pd_scenario* sc = nullptr;
  REQUIRE(pd_scenario_generate(tpl, seed, &sc) == PD_OK);
  pd_template_free(tpl);
  return sc;
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strlen(pd_version()) > 0);
  CHECK(std::string(pd_status_string(PD_OK)) != std::string(pd_status_string(PD_PARSE_ERROR)));
}

TEST_CASE("bad input maps to status codes") {
  pd_scenario* sc = nullptr;
  CHECK(pd_scenario_parse("{not json", &sc) == PD_PARSE_ERROR);
  CHECK(sc == nullptr);
  CHECK(std::strlen(pd_last_error()) > 0);
  CHECK(pd_scenario_load("/nonexistent/scenario.json", &sc) == PD_IO_ERROR);
  CHECK(pd_scenario_parse(nullptr, &sc) == PD_INVALID_ARGUMENT);

  pd_template* tpl = nullptr;
  REQUIRE(pd_template_default(&tpl) == PD_OK);
  CHECK(pd_template_set_mode(tpl, "sideways") == PD_INVALID_ARGUMENT);
  CHECK(pd_template_set_profile(tpl, "storm") == PD_INVALID_ARGUMENT);
  CHECK(pd_template_set_object_count(tpl, -1) == PD_INVALID_ARGUMENT);
  pd_template_free(tpl);

  const char* walled =
      "{\"kind\": \"template\", \"map\": {\"width_m\": 4, \"height_m\": 4, "
      "\"walls\": [[[0,0],[4,0],[4,4],[0,4]]]}}";
  REQUIRE(pd_template_parse(walled, &tpl) == PD_OK);
  CHECK(pd_scenario_generate(tpl, 1, &sc) == PD_GENERATION_ERROR);
  pd_template_free(tpl);
}

TEST_CASE("scenarios round-trip through the C API") {
  pd_scenario* sc = generate(7, 3);
  CHECK(pd_scenario_object_count(sc) == 3);
  char* text = nullptr;
  REQUIRE(pd_scenario_dump(sc, &text) == PD_OK);
  const std::string doc = take(text);
  pd_scenario* back = nullptr;
  REQUIRE(pd_scenario_parse(doc.c_str(), &back) == PD_OK);
  REQUIRE(pd_scenario_dump(back, &text) == PD_OK);
  CHECK(take(text) == doc);
  CHECK(std::string(pd_scenario_name(back)) == pd_scenario_name(sc));

  REQUIRE(pd_scenario_save(sc, "c_api_scenario.json") == PD_OK);
  pd_scenario* loaded = nullptr;
  REQUIRE(pd_scenario_load("c_api_scenario.json", &loaded) == PD_OK);
  CHECK(pd_scenario_object_count(loaded) == 3);
  std::remove("c_api_scenario.json");
  pd_scenario_free(loaded);
  pd_scenario_free(back);
  pd_scenario_free(sc);
}

TEST_CASE("batch, records and report") {
  pd_scenario* scenarios[2] = {generate(300, 1), generate(301, 1)};
  pd_batch_options opts{};
  opts.set = "capi";
  opts.parallelism = 2;
  pd_records* recs = nullptr;
  REQUIRE(pd_run_batch(scenarios, 2, &opts, &recs) == PD_OK);
  CHECK(pd_records_count(recs) == 2);
  CHECK(pd_records_task_successes(recs) <= 2);

  char* line = nullptr;
  REQUIRE(pd_records_get_json(recs, 0, &line) == PD_OK);
  CHECK(take(line).find("\"capi\"") != std::string::npos);
  CHECK(pd_records_get_json(recs, 5, &line) == PD_INVALID_ARGUMENT);

  REQUIRE(pd_records_save(recs, "c_api_records.jsonl") == PD_OK);
  pd_records* loaded = nullptr;
  REQUIRE(pd_records_load("c_api_records.jsonl", &loaded) == PD_OK);
  CHECK(pd_records_count(loaded) == 2);
  pd_records* merged = nullptr;
  REQUIRE(pd_records_create(&merged) == PD_OK);
  REQUIRE(pd_records_append(merged, recs) == PD_OK);
  REQUIRE(pd_records_append(merged, loaded) == PD_OK);
  CHECK(pd_records_count(merged) == 4);
  std::remove("c_api_records.jsonl");

  pd_report* report = nullptr;
  REQUIRE(pd_aggregate(merged, &report) == PD_OK);
  char* summary = nullptr;
  REQUIRE(pd_report_summary(report, &summary) == PD_OK);
  CHECK(take(summary).find("capi") != std::string::npos);
  char* csv = nullptr;
  REQUIRE(pd_report_metrics_csv(report, &csv) == PD_OK);
  CHECK(take(csv).rfind("set,trials", 0) == 0);
  CHECK(pd_report_emit(report, "csv,bogus", ".", nullptr, 0) == PD_INVALID_ARGUMENT);
  CHECK(pd_report_emit(report, "", ".", nullptr, 0) == PD_OK);

  pd_records* empty = nullptr;
  REQUIRE(pd_records_create(&empty) == PD_OK);
  pd_report* none = nullptr;
  CHECK(pd_aggregate(empty, &none) == PD_INVALID_ARGUMENT);

  char* log = nullptr;
  REQUIRE(pd_run_event_log(scenarios[0], &opts, &log) == PD_OK);
  CHECK(take(log).find("\"event\"") != std::string::npos);

  pd_records_free(empty);
  pd_report_free(report);
  pd_records_free(merged);
  pd_records_free(loaded);
  pd_records_free(recs);
  for (auto* s : scenarios) pd_scenario_free(s);
}
