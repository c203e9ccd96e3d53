#include "popdiv/run_config.hpp"

#include <algorithm>
#include <set>

#include "popdiv/csv.hpp"
#include "popdiv/error.hpp"
#include "popdiv/io.hpp"

namespace popdiv {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kInvalidConfig, std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

void reject_both(const nlohmann::json& j, const char* inline_key, const char* file_key) {
  if (j.contains(inline_key) && j.contains(file_key)) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("give either '") + inline_key + "' or '" + file_key + "', not both");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<CategorySpec> categories_from_json(const nlohmann::json& j) {
  std::vector<CategorySpec> out;
  if (j.is_array()) {
    for (const auto& c : j) {
      reject_unknown(c, {"name", "words"}, "category");
      out.push_back({c.at("name").get<std::string>(), c.at("words").get<std::vector<std::string>>()});
    }
  } else if (j.is_object()) {
    for (const auto& [name, words] : j.items()) out.push_back({name, words.get<std::vector<std::string>>()});
  } else {
    throw Error(ErrorCode::kInvalidConfig, "categories must be an array of {name, words} or a name -> words object");
  }
  return out;
}

ojson pools_to_json(const PersonaPools& p) {
  return ojson{{"race", p.race},
               {"gender", p.gender},
               {"hometown", p.hometown},
               {"state", p.state},
               {"age", {{"min", p.age_min}, {"max", p.age_max}}},
               {"occupation", p.occupation}};
}

std::vector<std::pair<std::string, std::string>> palette_from_csv(const fs::path& path) {
  const auto t = csv::read_table(path, {"chip_id", "hex"});
  const auto id = t.column("chip_id");
  const auto hex = t.column("hex");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& row : t.rows) out.emplace_back(row[id], row[hex]);
  return out;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"run_id", "domain", "conditions", "temperatures", "n_subjects", "seed", "words", "words_file",
                  "categories", "categories_file", "persona_pools", "persona_pools_file", "contexts", "contexts_file",
                  "palette", "palette_file", "backend", "synthetic_world", "crp", "bootstrap", "delta_e", "baseline",
                  "out"},
                 "config");
  reject_both(j, "words", "words_file");
  reject_both(j, "categories", "categories_file");
  reject_both(j, "persona_pools", "persona_pools_file");
  reject_both(j, "contexts", "contexts_file");
  reject_both(j, "palette", "palette_file");

  RunConfig c;
  try {
    c.run_id = j.value("run_id", c.run_id);
    if (j.contains("domain")) c.domain = parse_domain(j["domain"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.n_subjects = j.value("n_subjects", c.n_subjects);
    if (j.contains("backend")) c.backend = BackendConfig::from_json(j["backend"]);
    if (j.contains("conditions")) {
      c.conditions.clear();
      for (const auto& s : j["conditions"]) c.conditions.push_back(parse_condition(s.get<std::string>()));
    }
    if (j.contains("temperatures")) {
      for (const auto& t : j["temperatures"]) {
        if (t.is_string()) {
          if (t.get<std::string>() != "t0") {
            throw Error(ErrorCode::kInvalidConfig, "temperature strings other than \"t0\" are not allowed");
          }
          c.temperatures.push_back(c.backend.default_temperature);
        } else {
          c.temperatures.push_back(t.get<double>());
        }
      }
    } else {
      c.temperatures = {c.backend.default_temperature};
    }

    if (j.contains("words")) c.words = j["words"].get<std::vector<std::string>>();
    if (j.contains("words_file")) c.words = read_lines(resolve(base_dir, j["words_file"]));
    if (j.contains("categories")) c.categories = categories_from_json(j["categories"]);
    if (j.contains("categories_file")) {
      c.categories = categories_from_json(nlohmann::json::parse(read_file(resolve(base_dir, j["categories_file"]))));
    }
    if (j.contains("persona_pools")) c.persona_pools = PersonaPools::from_json(j["persona_pools"]);
    if (j.contains("persona_pools_file")) {
      c.persona_pools = PersonaPools::load(resolve(base_dir, j["persona_pools_file"]));
    }
    if (j.contains("contexts")) c.contexts = j["contexts"].get<std::vector<std::string>>();
    if (j.contains("contexts_file")) c.contexts = read_lines(resolve(base_dir, j["contexts_file"]));
    if (j.contains("palette")) {
      for (const auto& chip : j["palette"]) {
        reject_unknown(chip, {"chip_id", "hex"}, "palette entry");
        c.palette.emplace_back(chip.at("chip_id").get<std::string>(), chip.at("hex").get<std::string>());
      }
    }
    if (j.contains("palette_file")) c.palette = palette_from_csv(resolve(base_dir, j["palette_file"]));

    nlohmann::json world = j.value("synthetic_world", nlohmann::json::object());
    if (!world.contains("seed")) world["seed"] = c.seed;
    c.synthetic_world = SyntheticWorldSpec::from_json(world);

    c.crp.seed = c.seed;
    if (j.contains("crp")) {
      const auto& k = j["crp"];
      reject_unknown(k, {"alpha", "beta_a", "beta_b", "burn_in", "samples", "seed"}, "crp");
      c.crp.alpha = k.value("alpha", c.crp.alpha);
      c.crp.beta_a = k.value("beta_a", c.crp.beta_a);
      c.crp.beta_b = k.value("beta_b", c.crp.beta_b);
      c.crp.burn_in = k.value("burn_in", c.crp.burn_in);
      c.crp.samples = k.value("samples", c.crp.samples);
      c.crp.seed = k.value("seed", c.crp.seed);
    }
    if (j.contains("bootstrap")) {
      reject_unknown(j["bootstrap"], {"n_boot"}, "bootstrap");
      c.n_boot = j["bootstrap"].value("n_boot", c.n_boot);
    }
    if (j.contains("delta_e")) c.delta_e = parse_delta_e_formula(j["delta_e"].get<std::string>());
    if (j.contains("baseline")) {
      const auto& b = j["baseline"];
      reject_unknown(b, {"color_csv", "judgments_csv"}, "baseline");
      if (b.contains("color_csv")) c.baseline_color_csv = resolve(base_dir, b["color_csv"]);
      if (b.contains("judgments_csv")) c.baseline_judgments_csv = resolve(base_dir, b["judgments_csv"]);
    }
    if (j.contains("out")) c.out = resolve(base_dir, j["out"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

ojson RunConfig::to_json() const {
  ojson j;
  j["run_id"] = run_id;
  j["domain"] = to_string(domain);
  auto& conds = j["conditions"] = ojson::array();
  for (auto c : conditions) conds.push_back(to_string(c));
  j["temperatures"] = temperatures;
  j["n_subjects"] = n_subjects;
  j["seed"] = seed;
  if (!words.empty()) j["words"] = words;
  if (!categories.empty()) {
    auto& cats = j["categories"] = ojson::array();
    for (const auto& c : categories) cats.push_back({{"name", c.name}, {"words", c.words}});
  }
  if (!persona_pools.race.empty()) j["persona_pools"] = pools_to_json(persona_pools);
  if (!contexts.empty()) j["contexts"] = contexts;
  if (!palette.empty()) {
    auto& p = j["palette"] = ojson::array();
    for (const auto& [id, hex] : palette) p.push_back({{"chip_id", id}, {"hex", hex}});
  }
  j["backend"] = backend.to_json();
  j["synthetic_world"] = synthetic_world.to_json();
  j["crp"] = {{"alpha", crp.alpha},     {"beta_a", crp.beta_a},   {"beta_b", crp.beta_b},
              {"burn_in", crp.burn_in}, {"samples", crp.samples}, {"seed", crp.seed}};
  j["bootstrap"] = {{"n_boot", n_boot}};
  j["delta_e"] = to_string(delta_e);
  if (!baseline_color_csv.empty() || !baseline_judgments_csv.empty()) {
    auto& b = j["baseline"] = ojson::object();
    if (!baseline_color_csv.empty()) b["color_csv"] = fs::absolute(baseline_color_csv).lexically_normal().string();
    if (!baseline_judgments_csv.empty()) {
      b["judgments_csv"] = fs::absolute(baseline_judgments_csv).lexically_normal().string();
    }
  }
  if (!out.empty()) j["out"] = fs::absolute(out).lexically_normal().string();
  return j;
}

void RunConfig::validate() const {
  if (run_id.empty() || run_id == "baseline") {
    throw Error(ErrorCode::kInvalidConfig, "run_id must be non-empty and not \"baseline\"");
  }
  backend.validate();
  synthetic_world.validate();
  crp.validate();
  if (n_boot == 0) throw Error(ErrorCode::kInvalidConfig, "bootstrap.n_boot must be positive");
  if (!palette.empty()) (void)ChipPalette::from_hex_codes(palette);
  plan().validate();
}

RunPlan RunConfig::plan() const {
  RunPlan p;
  p.domain = domain;
  p.conditions = conditions;
  p.temperatures = temperatures;
  p.n_subjects = n_subjects != 0 ? n_subjects
                                 : (domain == Domain::kColor ? RunPlan::kDefaultColorSubjects
                                                             : RunPlan::kDefaultConceptSubjects);
  if (domain == Domain::kColor) p.words = words;
  else p.categories = categories;
  p.seed = seed;
  p.persona_pools = persona_pools;
  p.corpus = contexts;
  return p;
}

std::optional<ChipPalette> RunConfig::chip_palette() const {
  if (palette.empty()) return std::nullopt;
  return ChipPalette::from_hex_codes(palette);
}

nlohmann::json apply_overrides(nlohmann::json j, const ConfigOverrides& o) {
  if (o.seed) j["seed"] = *o.seed;
  if (o.backend) {
    if (!j.contains("backend") || !j["backend"].is_object()) j["backend"] = nlohmann::json::object();
    j["backend"]["kind"] = std::string(to_string(*o.backend));
  }
  if (o.out) j["out"] = fs::absolute(*o.out).lexically_normal().string();
  return j;
}

}  // namespace popdiv
