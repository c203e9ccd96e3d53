#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "popdiv/colorlab.hpp"
#include "popdiv/crp_cluster.hpp"
#include "popdiv/diversity_color.hpp"
#include "popdiv/popsim.hpp"

namespace popdiv {

enum class InvalidReason { kNone, kNoHex, kNoMatch, kAmbiguous, kBackendError };

std::string_view to_string(InvalidReason r);
InvalidReason parse_invalid_reason(std::string_view s);

/// One coded answer. Condition and temperature are kept as labels so that
/// baseline files ("human", "") share the schema with model runs.
struct ParsedRecord {
  std::string run_id;
  std::string subject_id;
  std::string condition;
  std::string temperature;
  Domain domain = Domain::kColor;
  // color
  std::string word;
  int block = 0;
  std::optional<HexColor> hex;
  // concept
  std::string category;
  std::string target;
  std::string choice_a;  // as presented
  std::string choice_b;
  std::string picked;

  InvalidReason invalid_reason = InvalidReason::kNone;

  bool valid() const { return invalid_reason == InvalidReason::kNone; }
};

/// Copies the manifest fields of `q` into a record with no answer yet.
ParsedRecord record_for(std::string_view run_id, const QueryRecord& q);

struct ChoiceResult {
  std::string picked;
  InvalidReason reason = InvalidReason::kNone;
};

/// The first sentence ends at the first '.', '!' or '?' that does not fall
/// inside an occurrence of either choice (so "George W. Bush" survives), or
/// at the end of the text. Within it, each choice is searched for
/// case-insensitively as a whole word: exactly one present picks it, both
/// give kAmbiguous, neither gives kNoMatch.
ChoiceResult parse_choice(std::string_view text, std::string_view choice1, std::string_view choice2);

ParsedRecord parse_color(std::string_view run_id, const QueryRecord& q, std::string_view text);
ParsedRecord parse_choice(std::string_view run_id, const QueryRecord& q, std::string_view text);
ParsedRecord backend_error_record(std::string_view run_id, const QueryRecord& q);

/// Color answers of one (run, condition, temperature) cell after block
/// pairing.
struct PairedColorCell {
  std::string run_id;
  std::string condition;
  std::string temperature;
  std::vector<ColorResponse> responses;  // both blocks of every surviving (subject, word)
  std::size_t excluded_pairs = 0;        // (subject, word) pairs missing a valid block
};

/// A (subject, word) survives iff both blocks parsed; cells come back sorted
/// by (run, condition, temperature). Throws DuplicateResponse if a
/// (subject, word, block) appears twice.
std::vector<PairedColorCell> pair_blocks(std::span<const ParsedRecord> records);

/// Judgment vectors for one target within one cell.
struct JudgmentSet {
  std::string run_id;
  std::string condition;
  std::string temperature;
  std::string category;
  std::string target;
  std::vector<JudgmentVector> vectors;  // sorted by subject id
  std::size_t dropped_subjects = 0;     // missing fraction above the cap
};

inline constexpr double kMaxMissingFraction = 0.5;

/// Codes concept answers against the canonical pairs of each target. A
/// category's word list is the union of every target and choice seen for it
/// across all records. Subjects with more than kMaxMissingFraction missing
/// answers for a target are dropped for that target.
std::vector<JudgmentSet> build_judgment_sets(std::span<const ParsedRecord> records);

struct ValidityCell {
  std::string run_id;
  Domain domain = Domain::kColor;
  std::string condition;
  std::string temperature;
  std::size_t total = 0;
  std::size_t invalid = 0;
  std::size_t no_hex = 0;
  std::size_t no_match = 0;
  std::size_t ambiguous = 0;
  std::size_t backend_error = 0;

  std::size_t valid() const { return total - invalid; }
  double invalid_percent() const;
};

struct DomainExclusion {
  std::string run_id;
  Domain domain = Domain::kColor;
  double mean_invalid_percent = 0.0;  // unweighted over cells
  bool excluded = false;
};

inline constexpr double kExclusionPercent = 70.0;

struct ValidityReport {
  std::vector<ValidityCell> cells;  // sorted by (run, domain, condition, temperature)
  std::vector<DomainExclusion> exclusions;
};

ValidityReport validity_report(std::span<const ParsedRecord> records);

inline const std::vector<std::string> kColorCsvHeader{
    "run_id", "subject_id", "condition", "temperature", "word", "block", "hex", "valid", "invalid_reason"};
inline const std::vector<std::string> kJudgmentCsvHeader{
    "run_id", "subject_id", "condition", "temperature", "category", "target",
    "choiceA", "choiceB", "picked", "valid", "invalid_reason"};

void write_color_csv(const std::filesystem::path& path, std::span<const ParsedRecord> records);
void write_judgment_csv(const std::filesystem::path& path, std::span<const ParsedRecord> records);

/// Throw SchemaError on missing columns, malformed fields or a record whose
/// `valid` flag disagrees with its answer.
std::vector<ParsedRecord> read_color_csv(const std::filesystem::path& path);
std::vector<ParsedRecord> read_judgment_csv(const std::filesystem::path& path);

void write_validity_csv(const std::filesystem::path& path, const ValidityReport& report);

}  // namespace popdiv
