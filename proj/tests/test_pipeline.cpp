#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <sstream>

#include "popdiv/io.hpp"
#include "popdiv/pipeline.hpp"
#include "popdiv/synthetic.hpp"
#include "test_helpers.hpp"

using namespace popdiv;
namespace fs = std::filesystem;

namespace {

nlohmann::json smoke_json() {
  return {{"run_id", "smoke"},       {"domain", "color"},
          {"seed", 3},               {"n_subjects", 5},
          {"conditions", {"none"}},  {"temperatures", {"t0"}},
          {"words", {"tomato", "chalk", "optimism"}},
          {"backend", {{"kind", "synthetic"}}},
          {"bootstrap", {{"n_boot", 200}}}};
}

nlohmann::json concept_json() {
  return {{"run_id", "cc"},
          {"domain", "concept"},
          {"seed", 5},
          {"n_subjects", 6},
          {"conditions", {"none"}},
          {"temperatures", {1.0}},
          {"categories", {{{"name", "animals"}, {"words", {"cat", "dog", "eel", "fox", "yak"}}}}},
          {"backend", {{"kind", "synthetic"}}},
          {"synthetic_world", {{"n_groups", 2}, {"epsilon", 0.05}}},
          {"crp", {{"burn_in", 50}, {"samples", 200}}},
          {"bootstrap", {{"n_boot", 100}}}};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

// Drops the per-entry timestamp so cache contents compare across runs.
std::string strip_timestamp(const std::string& text) {
  auto j = nlohmann::ordered_json::parse(text);
  j["meta"].erase("timestamp");
  return j.dump();
}

int full_run(const RunDir& dir, const nlohmann::json& cfg_json) {
  std::ostringstream log;
  cmd_plan(RunConfig::from_json(cfg_json, dir.root), dir, log);
  const int code = cmd_run(dir, log);
  cmd_analyze(dir, log, 2);
  return code;
}

int run_cli(const std::string& args) {
  const char* bin = std::getenv("POPDIV_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "POPDIV_BIN is not set");
  const int status = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Wraps a backend and fails one manifest position permanently.
class FailingOne : public Backend {
 public:
  FailingOne(Backend& inner, std::string subject, std::string word) : inner_(inner), subject_(std::move(subject)), word_(std::move(word)) {}
  std::string id() const override { return inner_.id(); }
  std::string model() const override { return inner_.model(); }
  nlohmann::json request_for(const QueryRecord& r) const override { return inner_.request_for(r); }
  Completion complete(const QueryRecord& r) override {
    ++calls;
    if (r.subject_id == subject_ && r.word == word_ && r.block == 1) {
      throw BackendFailure(ErrorCode::kPermanentHttpError, "HTTP 400", false, 400);
    }
    return inner_.complete(r);
  }
  std::atomic<int> calls{0};

 private:
  Backend& inner_;
  std::string subject_;
  std::string word_;
};

}  // namespace

TEST_CASE("configs validate, resolve t0 and reject unknown keys") {
  const auto cfg = RunConfig::from_json(smoke_json(), ".");
  CHECK(cfg.temperatures == std::vector<double>{1.0});
  CHECK(cfg.synthetic_world.seed == 3);
  CHECK(cfg.crp.seed == 3);
  CHECK(RunConfig::from_json(cfg.to_json(), "/").to_json() == cfg.to_json());

  auto j = smoke_json();
  j["backend"]["default_temperature"] = 0.7;
  j["temperatures"] = {"t0", 1.5, 2.0};
  CHECK(RunConfig::from_json(j, ".").temperatures == std::vector<double>{0.7, 1.5, 2.0});

  j = smoke_json();
  j["temperatures"] = nlohmann::json::array();
  CHECK_THROWS_CODE(RunConfig::from_json(j, "."), ErrorCode::kInvalidPlan);
  j = smoke_json();
  j["temprature"] = 1;
  CHECK_THROWS_CODE(RunConfig::from_json(j, "."), ErrorCode::kInvalidConfig);
  j = smoke_json();
  j["words_file"] = "words.txt";
  CHECK_THROWS_CODE(RunConfig::from_json(j, "."), ErrorCode::kInvalidConfig);
  j = smoke_json();
  j["run_id"] = "baseline";
  CHECK_THROWS_CODE(RunConfig::from_json(j, "."), ErrorCode::kInvalidConfig);
  j = smoke_json();
  j["temperatures"] = {"hot"};
  CHECK_THROWS_CODE(RunConfig::from_json(j, "."), ErrorCode::kInvalidConfig);
  j = smoke_json();
  j["conditions"] = {"persona"};
  CHECK_THROWS_CODE(RunConfig::from_json(j, "."), ErrorCode::kEmptyPool);

  ConfigOverrides o;
  o.seed = 42;
  o.out = "elsewhere";
  const auto over = apply_overrides(smoke_json(), o);
  CHECK(over["seed"] == 42);
  // Overrides come from the command line, so relative paths resolve against the working directory.
  CHECK(fs::path(over["out"].get<std::string>()).is_absolute());
  CHECK(fs::path(over["out"].get<std::string>()).filename() == "elsewhere");
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"smoke.json", "color_synthetic.json", "concept_synthetic.json", "color_http.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(RunConfig::load(testing::data_dir() / "configs" / name));
  }
}

TEST_CASE("color defaults plan 59,700 queries per condition") {
  testing::TempDir dir("defaults");
  auto j = smoke_json();
  j.erase("n_subjects");
  std::vector<std::string> words;
  for (int i = 0; i < 199; ++i) words.push_back("word" + std::to_string(i));
  j["words"] = words;
  std::ostringstream log;
  CHECK(cmd_plan(RunConfig::from_json(j, "."), RunDir{dir.path()}, log) == 59700);
  CHECK(log.str().find("59700 queries") != std::string::npos);
}

TEST_CASE("the smoke run is fast, complete and deterministic") {
  testing::TempDir a("smoke-a"), b("smoke-b");
  const auto start = std::chrono::steady_clock::now();
  CHECK(full_run(RunDir{a.path()}, smoke_json()) == kExitOk);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
  CHECK(full_run(RunDir{b.path()}, smoke_json()) == kExitOk);

  const auto sa = snapshot(a.path());
  const auto sb = snapshot(b.path());
  REQUIRE(sa.size() == sb.size());
  for (const auto& [name, text] : sa) {
    CAPTURE(name);
    REQUIRE(sb.count(name) == 1);
    if (name.rfind("cache", 0) == 0) {
      CHECK(strip_timestamp(text) == strip_timestamp(sb.at(name)));
    } else if (name != "config.json") {
      CHECK(text == sb.at(name));
    }
  }
  CHECK(sa.count("report/report.json") == 1);
  CHECK(sa.count("parsed/color_responses.csv") == 1);
  CHECK(sa.at("errors.jsonl").empty());
  // 5 subjects x 3 words x 2 blocks.
  CHECK(read_manifest(RunDir{a.path()}.manifest()).size() == 30);
}

TEST_CASE("an interrupted run resumes with only the missing keys") {
  testing::TempDir dir("resume");
  const RunDir rd{dir.path()};
  std::ostringstream log;
  const auto cfg = RunConfig::from_json(smoke_json(), ".");
  cmd_plan(cfg, rd, log);
  REQUIRE(cmd_run(rd, log) == kExitOk);

  const auto ident = backend_identity(cfg);
  const auto manifest = read_manifest(rd.manifest());
  GenerationCache cache(rd.cache());
  for (std::size_t i : {0u, 7u, 19u}) fs::remove(cache.path_for(cache_key(manifest[i], ident.id, ident.model)));

  auto inner = make_backend(cfg);
  FailingOne counting(*inner, "nobody", "nothing");
  CHECK(run_with_backend(rd, counting, ExecutorOptions::from(cfg.backend), log) == kExitOk);
  CHECK(counting.calls == 3);
  CHECK(run_with_backend(rd, counting, ExecutorOptions::from(cfg.backend), log) == kExitOk);
  CHECK(counting.calls == 3);
}

TEST_CASE("one permanent failure gives a partial exit and one error record") {
  testing::TempDir dir("partial");
  const RunDir rd{dir.path()};
  std::ostringstream log;
  const auto cfg = RunConfig::from_json(smoke_json(), ".");
  cmd_plan(cfg, rd, log);
  auto inner = make_backend(cfg);
  FailingOne failing(*inner, subject_id_for(Condition::kNone, 1.0, 2), "chalk");
  CHECK(run_with_backend(rd, failing, ExecutorOptions::from(cfg.backend), log) == kExitPartial);
  const auto errors = read_file(rd.errors());
  CHECK(std::count(errors.begin(), errors.end(), '\n') == 1);
  CHECK(nlohmann::json::parse(errors)["http_status"] == 400);

  const auto validity = cmd_parse(rd, log);
  REQUIRE(validity.cells.size() == 1);
  CHECK(validity.cells[0].backend_error == 1);
  const auto report = cmd_analyze(rd, log);
  REQUIRE(report.color.size() == 1);
  CHECK(report.color[0].excluded_pairs == 1);
}

TEST_CASE("a degenerate world gives zero heterogeneity and one concept") {
  testing::TempDir c("degenerate-c"), k("degenerate-k");
  auto cj = smoke_json();
  cj["synthetic_world"] = {{"sigma_int", 0}};
  full_run(RunDir{c.path()}, cj);
  const auto color = DiversityReport::from_json(nlohmann::json::parse(read_file(c.path() / "report" / "report.json")));
  REQUIRE(color.color[0].mean_d_w.has_value());
  CHECK(color.color[0].mean_d_w->mean == 0.0);

  auto kj = concept_json();
  kj["synthetic_world"] = {{"n_groups", 1}, {"epsilon", 0}};
  full_run(RunDir{k.path()}, kj);
  const auto concepts =
      DiversityReport::from_json(nlohmann::json::parse(read_file(k.path() / "report" / "report.json")));
  REQUIRE(concepts.concepts.size() == 1);
  // Identical answers from 6 subjects on 6 pairs; the exact posterior is the reference.
  std::vector<JudgmentVector> same(6, JudgmentVector{"s", "t", "c", std::vector<Judgment>(6, Judgment::kOne)});
  CrpConfig crp;
  crp.alpha = RunConfig::from_json(kj, ".").crp.alpha;
  const double exact = exact_posterior(same, crp).p_one_concept;
  CHECK(exact > 0.9);
  for (const auto& t : concepts.concepts[0].targets) {
    CHECK(t.n_subjects == 6);
    CHECK(std::abs(t.p_one_concept - exact) < 0.03);
    CHECK(t.reliability == 1.0);
  }
}

TEST_CASE("analysis works with and without a baseline") {
  testing::TempDir model("with-baseline"), human("baseline-src");
  // A second synthetic run stands in for the human baseline file.
  auto hj = smoke_json();
  hj["run_id"] = "stand-in";
  hj["seed"] = 99;
  full_run(RunDir{human.path()}, hj);

  auto mj = smoke_json();
  mj["baseline"] = {{"color_csv", (human.path() / "parsed" / "color_responses.csv").string()}};
  mj["palette_file"] = (testing::data_dir() / "palette_sample88.csv").string();
  full_run(RunDir{model.path()}, mj);
  const auto report = DiversityReport::from_json(nlohmann::json::parse(read_file(model.path() / "report" / "report.json")));
  REQUIRE(report.color.size() == 2);
  CHECK(report.color[0].run_id == "baseline");
  CHECK(report.color[1].jsd.size() == 3);

  testing::TempDir none("no-baseline");
  std::ostringstream log;
  cmd_plan(RunConfig::from_json(smoke_json(), "."), RunDir{none.path()}, log);
  cmd_run(RunDir{none.path()}, log);
  CHECK_NOTHROW(cmd_analyze(RunDir{none.path()}, log));
}

TEST_CASE("report re-emission reproduces the analyze output") {
  testing::TempDir dir("reemit");
  const RunDir rd{dir.path()};
  full_run(rd, concept_json());
  const auto before = snapshot(rd.report());
  std::ostringstream log;
  cmd_report(rd, log);
  CHECK(snapshot(rd.report()) == before);
}

TEST_CASE("the CLI maps outcomes to exit codes") {
  testing::TempDir dir("cli");
  const auto cfg_path = dir.path() / "smoke.json";
  auto j = smoke_json();
  j["out"] = (dir.path() / "run").string();
  write_file_atomic(cfg_path, j.dump());
  CHECK(run_cli("plan --config " + cfg_path.string()) == 0);
  CHECK(run_cli("run --out " + (dir.path() / "run").string()) == 0);
  CHECK(run_cli("analyze --threads 1 --out " + (dir.path() / "run").string()) == 0);
  CHECK(run_cli("report --out " + (dir.path() / "run").string()) == 0);
  CHECK(fs::exists(dir.path() / "run" / "report" / "report.json"));

  j["temperatures"] = nlohmann::json::array();
  write_file_atomic(dir.path() / "bad.json", j.dump());
  CHECK(run_cli("plan --config " + (dir.path() / "bad.json").string()) == 2);
  CHECK(run_cli("analyze --out " + (dir.path() / "never-planned").string()) == 1);
  CHECK(run_cli("frobnicate") != 0);
  // Later stages refuse a config that differs from the planned one.
  j["temperatures"] = {1.5};
  write_file_atomic(dir.path() / "changed.json", j.dump());
  CHECK(run_cli("analyze --config " + (dir.path() / "changed.json").string()) == 2);
}
