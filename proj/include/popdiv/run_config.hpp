#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdiv/colorlab.hpp"
#include "popdiv/crp_cluster.hpp"
#include "popdiv/llm_io.hpp"
#include "popdiv/popsim.hpp"
#include "popdiv/synthetic.hpp"

namespace popdiv {

/// Everything a run needs, with file references already loaded.
///
/// Input keys: run_id, domain, conditions, temperatures (numbers or "t0"),
/// n_subjects, seed, words | words_file, categories | categories_file,
/// persona_pools | persona_pools_file, contexts | contexts_file,
/// palette | palette_file, backend, synthetic_world, crp, bootstrap,
/// delta_e, baseline {color_csv, judgments_csv}, out. Relative paths are
/// resolved against the config file's directory. Unknown keys are rejected.
struct RunConfig {
  std::string run_id = "run";
  Domain domain = Domain::kColor;
  std::vector<Condition> conditions{Condition::kNone, Condition::kPersona, Condition::kRandom, Condition::kNonsense};
  std::vector<double> temperatures;  // "t0" resolved to backend.default_temperature
  std::size_t n_subjects = 0;        // 0: domain default
  std::uint64_t seed = 0;

  std::vector<std::string> words;
  std::vector<CategorySpec> categories;
  PersonaPools persona_pools;
  std::vector<std::string> contexts;
  std::vector<std::pair<std::string, std::string>> palette;  // (chip id, hex)

  BackendConfig backend;
  SyntheticWorldSpec synthetic_world;  // seed defaults to `seed`
  CrpConfig crp;                       // seed defaults to `seed`
  std::size_t n_boot = 1000;
  DeltaEFormula delta_e = DeltaEFormula::kCie76;

  std::filesystem::path baseline_color_csv;
  std::filesystem::path baseline_judgments_csv;
  std::filesystem::path out;

  /// Throws InvalidConfig (or the loaders' errors) on bad input.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Self-contained resolved form; from_json(to_json()) round-trips.
  nlohmann::ordered_json to_json() const;

  /// Throws InvalidPlan / InvalidConfig.
  void validate() const;

  RunPlan plan() const;
  std::optional<ChipPalette> chip_palette() const;
};

/// Command-line overrides; unset fields leave the file value alone.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<BackendKind> backend;
  std::optional<std::filesystem::path> out;
};

/// Applies overrides to raw config JSON before resolution, so that a seed
/// override also reseeds the synthetic world and CRP chains unless those
/// set their own seeds.
nlohmann::json apply_overrides(nlohmann::json j, const ConfigOverrides& o);

}  // namespace popdiv
