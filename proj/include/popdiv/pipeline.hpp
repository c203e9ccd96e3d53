#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>

#include "popdiv/llm_io.hpp"
#include "popdiv/parse_responses.hpp"
#include "popdiv/run_config.hpp"
#include "popdiv/stats_report.hpp"

namespace popdiv {

/// Run directory layout.
struct RunDir {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path manifest() const { return root / "manifest.jsonl"; }
  std::filesystem::path cache() const { return root / "cache"; }
  std::filesystem::path errors() const { return root / "errors.jsonl"; }
  std::filesystem::path parsed() const { return root / "parsed"; }
  std::filesystem::path color_csv() const { return parsed() / "color_responses.csv"; }
  std::filesystem::path judgments_csv() const { return parsed() / "judgments.csv"; }
  std::filesystem::path validity_csv() const { return parsed() / "validity.csv"; }
  std::filesystem::path report() const { return root / "report"; }
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPartial = 3;

/// Reads `<root>/config.json`; throws IoError if the run was never planned.
RunConfig load_run_config(const RunDir& dir);

struct BackendIdentity {
  std::string id;
  std::string model;
};

/// Identity used in cache keys, computed without contacting the backend or
/// reading credentials.
BackendIdentity backend_identity(const RunConfig& cfg);

/// Throws AuthMissing for an http backend whose key variable is unset.
std::unique_ptr<Backend> make_backend(const RunConfig& cfg);

/// Writes config.json and manifest.jsonl; returns the query count.
std::size_t cmd_plan(const RunConfig& cfg, const RunDir& dir, std::ostream& log);

/// Executes the manifest against the configured backend. Returns kExitOk, or
/// kExitPartial when any query ended in an error record.
int cmd_run(const RunDir& dir, std::ostream& log);

/// cmd_run with an injected backend (its identity must match the config's
/// for parse to find the generations).
int run_with_backend(const RunDir& dir, Backend& backend, const ExecutorOptions& options, std::ostream& log);

/// Codes every manifest record from the cache (absent entries count as
/// backend errors) and writes parsed/*.csv.
ValidityReport cmd_parse(const RunDir& dir, std::ostream& log);

/// Parses first if needed, then writes report/. threads = 0 uses all cores.
DiversityReport cmd_analyze(const RunDir& dir, std::ostream& log, unsigned threads = 0);

/// Re-emits report/ from report/report.json.
void cmd_report(const RunDir& dir, std::ostream& log);

}  // namespace popdiv
