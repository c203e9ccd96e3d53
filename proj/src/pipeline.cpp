#include "popdiv/pipeline.hpp"

#include <mutex>

#include <fmt/format.h>

#include "popdiv/error.hpp"
#include "popdiv/io.hpp"
#include "popdiv/synthetic.hpp"

namespace popdiv {

namespace {

namespace fs = std::filesystem;

SyntheticWorld world_for(const RunConfig& cfg) {
  if (cfg.domain == Domain::kColor) return SyntheticWorld::generate(cfg.synthetic_world, cfg.words, {});
  return SyntheticWorld::generate(cfg.synthetic_world, {}, cfg.categories);
}

void require(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(ErrorCode::kIoError, fmt::format("{} not found at {}", what, p.string()));
}

}  // namespace

RunConfig load_run_config(const RunDir& dir) {
  require(dir.config(), "run config (run `plan` first)");
  return RunConfig::load(dir.config());
}

BackendIdentity backend_identity(const RunConfig& cfg) {
  if (cfg.backend.kind == BackendKind::kSynthetic) {
    SyntheticBackend b(world_for(cfg));
    return {b.id(), b.model()};
  }
  return {http_backend_id(cfg.backend), cfg.backend.model_name};
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend.kind == BackendKind::kSynthetic) return std::make_unique<SyntheticBackend>(world_for(cfg));
  return std::make_unique<HttpBackend>(cfg.backend);
}

std::size_t cmd_plan(const RunConfig& cfg, const RunDir& dir, std::ostream& log) {
  cfg.validate();
  const auto queries = build_queries(cfg.plan());
  write_file_atomic(dir.config(), cfg.to_json().dump(2) + "\n");
  write_manifest(dir.manifest(), queries);
  log << fmt::format("plan: {} queries ({} conditions x {} temperatures x {} subjects) -> {}\n", queries.size(),
                     cfg.conditions.size(), cfg.temperatures.size(), cfg.plan().n_subjects,
                     dir.manifest().string());
  return queries.size();
}

int cmd_run(const RunDir& dir, std::ostream& log) {
  const auto cfg = load_run_config(dir);
  auto backend = make_backend(cfg);
  return run_with_backend(dir, *backend, ExecutorOptions::from(cfg.backend), log);
}

int run_with_backend(const RunDir& dir, Backend& backend, const ExecutorOptions& options, std::ostream& log) {
  require(dir.manifest(), "manifest (run `plan` first)");
  const auto manifest = read_manifest(dir.manifest());
  GenerationCache cache(dir.cache());

  ExecutorOptions opts = options;
  std::mutex log_mutex;
  std::size_t last_decile = 0;
  opts.progress = [&](std::size_t done, std::size_t total) {
    const std::size_t decile = total == 0 ? 10 : done * 10 / total;
    std::lock_guard lock(log_mutex);
    if (decile > last_decile || done == total) {
      last_decile = decile;
      log << fmt::format("run: {}/{} queries\n", done, total);
    }
  };
  const auto result = execute_manifest(manifest, backend, cache, opts);

  std::string errors;
  for (const auto& o : result.outcomes) {
    if (const auto* e = std::get_if<GenerationError>(&o)) errors += e->to_json().dump() + "\n";
  }
  write_file_atomic(dir.errors(), errors);

  const auto& s = result.stats;
  log << fmt::format("run: {} total, {} cached, {} generated, {} failed, {} backend calls\n", manifest.size(),
                     s.cache_hits, s.fresh, s.failed, s.backend_calls);
  if (s.failed > 0) {
    log << fmt::format("run: {} permanent failures recorded in {}\n", s.failed, dir.errors().string());
    return kExitPartial;
  }
  return kExitOk;
}

ValidityReport cmd_parse(const RunDir& dir, std::ostream& log) {
  const auto cfg = load_run_config(dir);
  require(dir.manifest(), "manifest (run `plan` first)");
  const auto manifest = read_manifest(dir.manifest());
  const auto ident = backend_identity(cfg);
  const GenerationCache cache(dir.cache());

  std::vector<ParsedRecord> parsed;
  parsed.reserve(manifest.size());
  std::size_t missing = 0;
  for (const auto& q : manifest) {
    const auto gen = cache.get(cache_key(q, ident.id, ident.model));
    if (!gen) {
      ++missing;
      parsed.push_back(backend_error_record(cfg.run_id, q));
    } else if (q.domain == Domain::kColor) {
      parsed.push_back(parse_color(cfg.run_id, q, gen->completion));
    } else {
      parsed.push_back(parse_choice(cfg.run_id, q, gen->completion));
    }
  }

  if (cfg.domain == Domain::kColor) {
    write_color_csv(dir.color_csv(), parsed);
  } else {
    write_judgment_csv(dir.judgments_csv(), parsed);
  }
  auto report = validity_report(parsed);
  write_validity_csv(dir.validity_csv(), report);

  std::size_t invalid = 0;
  for (const auto& c : report.cells) invalid += c.invalid;
  log << fmt::format("parse: {} records, {} invalid ({} without a cached generation)\n", parsed.size(), invalid,
                     missing);
  for (const auto& e : report.exclusions) {
    if (e.excluded) {
      log << fmt::format("parse: {} {} flagged: mean invalid {:.1f}% >= {:.0f}%\n", e.run_id, to_string(e.domain),
                         e.mean_invalid_percent, kExclusionPercent);
    }
  }
  return report;
}

DiversityReport cmd_analyze(const RunDir& dir, std::ostream& log, unsigned threads) {
  const auto cfg = load_run_config(dir);
  const fs::path parsed_path = cfg.domain == Domain::kColor ? dir.color_csv() : dir.judgments_csv();
  if (!fs::exists(parsed_path)) cmd_parse(dir, log);

  const auto records = cfg.domain == Domain::kColor ? read_color_csv(parsed_path) : read_judgment_csv(parsed_path);
  std::vector<ParsedRecord> baseline;
  if (cfg.domain == Domain::kColor && !cfg.baseline_color_csv.empty()) {
    baseline = read_color_csv(cfg.baseline_color_csv);
  }
  if (cfg.domain == Domain::kConcept && !cfg.baseline_judgments_csv.empty()) {
    baseline = read_judgment_csv(cfg.baseline_judgments_csv);
  }

  AnalysisOptions opts;
  opts.formula = cfg.delta_e;
  opts.crp = cfg.crp;
  opts.n_boot = cfg.n_boot;
  opts.seed = cfg.seed;
  opts.palette = cfg.chip_palette();
  opts.threads = threads;

  auto report = build_report(records, baseline, opts);
  report.metadata["run_id"] = cfg.run_id;
  report.metadata["domain"] = to_string(cfg.domain);
  emit_report(report, dir.report());

  for (const auto& c : report.color) {
    if (c.mean_d_w) {
      log << fmt::format("analyze: {} {} t={} mean d_w {:.2f} [{:.2f}, {:.2f}] over {} words\n", c.run_id,
                         c.condition, c.temperature, c.mean_d_w->mean, c.mean_d_w->lo, c.mean_d_w->hi, c.words.size());
    }
  }
  for (const auto& c : report.concepts) {
    for (const auto& s : c.categories) {
      log << fmt::format("analyze: {} {} t={} {} mean P(multiple) {:.3f} over {} targets\n", c.run_id, c.condition,
                         c.temperature, s.category, s.mean_p_multiple, s.n_targets);
    }
  }
  log << "analyze: report written to " << dir.report().string() << "\n";
  return report;
}

void cmd_report(const RunDir& dir, std::ostream& log) {
  const fs::path path = dir.report() / "report.json";
  require(path, "report (run `analyze` first)");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaError, path.string() + ": " + e.what());
  }
  emit_report(DiversityReport::from_json(j), dir.report());
  log << "report: re-emitted " << dir.report().string() << "\n";
}

}  // namespace popdiv
