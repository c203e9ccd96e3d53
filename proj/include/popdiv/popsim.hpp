#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdiv/random.hpp"

namespace popdiv {

enum class Domain { kColor, kConcept };
enum class Condition { kNone, kPersona, kRandom, kNonsense };

std::string_view to_string(Domain d);
std::string_view to_string(Condition c);
Domain parse_domain(std::string_view s);
Condition parse_condition(std::string_view s);

/// Value pools for persona fields. Ages are drawn uniformly from
/// [age_min, age_max].
struct PersonaPools {
  std::vector<std::string> race;
  std::vector<std::string> gender;
  std::vector<std::string> hometown;
  std::vector<std::string> state;
  int age_min = 18;
  int age_max = 80;
  std::vector<std::string> occupation;

  /// Throws EmptyPool if any pool is empty or the age range is invalid.
  void validate() const;

  static PersonaPools from_json(const nlohmann::json& j);
  static PersonaPools load(const std::filesystem::path& path);
};

struct PersonaSpec {
  std::string race;
  std::string gender;
  std::string hometown;
  std::string state;
  int age = 0;
  std::string occupation;

  friend bool operator==(const PersonaSpec&, const PersonaSpec&) = default;
};

/// Independent uniform draw per field, in declaration order.
PersonaSpec sample_persona(const PersonaPools& pools, Rng& rng);

/// "You are a [race] [gender] from [hometown] in [state] who is [age] and
/// works as a [occupation]." with whitespace runs collapsed to one space.
std::string render_persona(const PersonaSpec& p);

struct PromptContext {
  Condition condition = Condition::kNone;
  std::string text;
  std::string context_id;
};

/// Uniformly samples one candidate sentence. Throws EmptyCorpus.
PromptContext make_random_context(std::span<const std::string> corpus, Rng& rng);

/// Uniform permutation of the words of a random context, lower-cased, with
/// the first word capitalized. Throws InvalidPlan unless the input is a
/// random context.
PromptContext make_nonsense_context(const PromptContext& random_ctx, Rng& rng);

/// The bare elicitation templates.
std::string color_query(std::string_view word);
std::string concept_query(std::string_view target, std::string_view choice1, std::string_view choice2);

struct CategorySpec {
  std::string name;
  std::vector<std::string> words;
};

struct RunPlan {
  Domain domain = Domain::kColor;
  std::vector<Condition> conditions;
  std::vector<double> temperatures;
  std::size_t n_subjects = 0;
  std::vector<std::string> words;           // color domain
  std::vector<CategorySpec> categories;     // concept domain
  std::uint64_t seed = 0;
  PersonaPools persona_pools;
  std::vector<std::string> corpus;

  static constexpr std::size_t kDefaultColorSubjects = 150;
  static constexpr std::size_t kDefaultConceptSubjects = 1800;

  /// Throws InvalidPlan on empty condition/temperature/word lists,
  /// non-positive temperatures, zero subjects, duplicate words, categories
  /// with fewer than three words, or missing persona pools / corpus for the
  /// conditions that need them.
  void validate() const;
};

/// One manifest line. Color records carry `word` and `block` (1 or 2);
/// concept records carry `category`, `target`, and the presented
/// `choice1`/`choice2`.
struct QueryRecord {
  std::size_t index = 0;
  std::string subject_id;
  Condition condition = Condition::kNone;
  std::string context_id;
  std::string context_text;
  Domain domain = Domain::kColor;
  std::string word;
  std::string category;
  std::string target;
  std::string choice1;
  std::string choice2;
  int block = 0;
  double temperature = 1.0;
  std::string query_text;

  nlohmann::ordered_json to_json() const;
  static QueryRecord from_json(const nlohmann::json& j);
};

/// Subject ids look like "persona-t1.5-s0007".
std::string subject_id_for(Condition c, double temperature, std::size_t index);

/// Context for subject `index` under condition `c`. Contexts depend only on
/// (seed, condition, index), so subject i keeps the same context across
/// temperatures, and nonsense subject i scrambles random subject i's text.
PromptContext context_for(const RunPlan& plan, Condition c, std::size_t index);

/// Manifest in deterministic order: condition, temperature, subject, then
/// block and word (color) or category, target and canonical pair (concept).
/// Concept choice order is randomized per query from the subject's stream.
std::vector<QueryRecord> build_queries(const RunPlan& plan);

void write_manifest(const std::filesystem::path& path, std::span<const QueryRecord> records);
std::vector<QueryRecord> read_manifest(const std::filesystem::path& path);

}  // namespace popdiv
