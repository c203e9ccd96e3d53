#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "popdiv/error.hpp"
#include "popdiv/io.hpp"
#include "popdiv/pipeline.hpp"

namespace {

using namespace popdiv;
namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string out;
};

ConfigOverrides overrides_from(const GlobalFlags& f) {
  ConfigOverrides o;
  o.seed = f.seed;
  if (!f.backend.empty()) o.backend = parse_backend_kind(f.backend);
  if (!f.out.empty()) o.out = f.out;
  return o;
}

std::optional<RunConfig> config_from_flags(const GlobalFlags& f) {
  if (f.config.empty()) return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(f.config));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, f.config + ": " + e.what());
  }
  return RunConfig::from_json(apply_overrides(std::move(j), overrides_from(f)), fs::path(f.config).parent_path());
}

RunDir run_dir_for(const GlobalFlags& f, const std::optional<RunConfig>& cfg) {
  if (!f.out.empty()) return RunDir{f.out};
  if (cfg && !cfg->out.empty()) return RunDir{cfg->out};
  throw Error(ErrorCode::kInvalidConfig, "no run directory: pass --out or set \"out\" in the config");
}

// Later stages read the run directory's own config; a --config given to them
// must agree with it.
RunDir checked_run_dir(const GlobalFlags& f) {
  if (!f.seed && f.backend.empty() && f.config.empty()) return run_dir_for(f, std::nullopt);
  const auto cfg = config_from_flags(f);
  const RunDir dir = run_dir_for(f, cfg);
  if (!cfg) {
    throw Error(ErrorCode::kInvalidConfig, "--seed and --backend take effect at `plan`; re-plan to change them");
  }
  if (cfg->to_json() != load_run_config(dir).to_json()) {
    throw Error(ErrorCode::kInvalidConfig,
                "config differs from the one this run directory was planned with; run `plan` again");
  }
  return dir;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidPlan:
    case ErrorCode::kEmptyPool:
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kAuthMissing:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population diversity toolkit: plan, run, parse and analyze simulated-population studies"};
  app.require_subcommand(1);

  GlobalFlags flags;
  auto add_globals = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Run config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Override the config seed");
    sub->add_option("--backend", flags.backend, "Override the backend kind")
        ->check(CLI::IsMember({"synthetic", "http"}));
    sub->add_option("--out", flags.out, "Run directory");
  };

  auto* plan = app.add_subcommand("plan", "Build the query manifest");
  add_globals(plan);
  plan->get_option("--config")->required();
  auto* run = app.add_subcommand("run", "Execute the manifest (resumable)");
  add_globals(run);
  auto* parse = app.add_subcommand("parse", "Extract answers and count invalid responses");
  add_globals(parse);
  unsigned threads = 0;
  auto* analyze = app.add_subcommand("analyze", "Compute metrics and write the report");
  add_globals(analyze);
  analyze->add_option("--threads", threads, "Worker threads for CRP chains (0: all cores)");
  auto* report = app.add_subcommand("report", "Re-emit report files from report.json");
  add_globals(report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      const auto cfg = config_from_flags(flags);
      cmd_plan(*cfg, run_dir_for(flags, cfg), std::cout);
      return kExitOk;
    }
    if (run->parsed()) return cmd_run(checked_run_dir(flags), std::cerr);
    if (parse->parsed()) {
      cmd_parse(checked_run_dir(flags), std::cerr);
      return kExitOk;
    }
    if (analyze->parsed()) {
      cmd_analyze(checked_run_dir(flags), std::cerr, threads);
      return kExitOk;
    }
    if (report->parsed()) {
      cmd_report(checked_run_dir(flags), std::cerr);
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
