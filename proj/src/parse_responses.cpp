#include "popdiv/parse_responses.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <tuple>
#include <utility>

#include "popdiv/csv.hpp"
#include "popdiv/error.hpp"
#include "popdiv/io.hpp"

namespace popdiv {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

// Whole-word, case-insensitive occurrences as [begin, end) offsets.
std::vector<std::pair<std::size_t, std::size_t>> occurrences(const std::string& lower_text,
                                                             const std::string& lower_needle) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (lower_needle.empty()) return out;
  for (auto pos = lower_text.find(lower_needle); pos != std::string::npos;
       pos = lower_text.find(lower_needle, pos + 1)) {
    const std::size_t end = pos + lower_needle.size();
    const bool left_ok = pos == 0 || !is_word_char(lower_text[pos - 1]) || !is_word_char(lower_needle.front());
    const bool right_ok =
        end == lower_text.size() || !is_word_char(lower_text[end]) || !is_word_char(lower_needle.back());
    if (left_ok && right_ok) out.emplace_back(pos, end);
  }
  return out;
}

std::string bool_field(bool b) { return b ? "true" : "false"; }

bool parse_bool_field(const std::string& s, std::string_view what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error(ErrorCode::kSchemaError, std::string(what) + ": expected true/false, got '" + s + "'");
}

void check_validity_fields(ParsedRecord& r, bool valid_flag, bool has_answer, std::string_view where) {
  if (valid_flag != has_answer || valid_flag != r.valid()) {
    throw Error(ErrorCode::kSchemaError, std::string(where) + ": valid flag disagrees with answer/invalid_reason");
  }
}

using CellKey = std::tuple<std::string, std::string, std::string>;

}  // namespace

std::string_view to_string(InvalidReason r) {
  switch (r) {
    case InvalidReason::kNone: return "";
    case InvalidReason::kNoHex: return "no_hex";
    case InvalidReason::kNoMatch: return "no_match";
    case InvalidReason::kAmbiguous: return "ambiguous";
    case InvalidReason::kBackendError: return "backend_error";
  }
  return "";
}

InvalidReason parse_invalid_reason(std::string_view s) {
  for (auto r : {InvalidReason::kNone, InvalidReason::kNoHex, InvalidReason::kNoMatch, InvalidReason::kAmbiguous,
                 InvalidReason::kBackendError}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::kSchemaError, "unknown invalid_reason '" + std::string(s) + "'");
}

ParsedRecord record_for(std::string_view run_id, const QueryRecord& q) {
  ParsedRecord r;
  r.run_id = run_id;
  r.subject_id = q.subject_id;
  r.condition = to_string(q.condition);
  r.temperature = format_number(q.temperature);
  r.domain = q.domain;
  if (q.domain == Domain::kColor) {
    r.word = q.word;
    r.block = q.block;
  } else {
    r.category = q.category;
    r.target = q.target;
    r.choice_a = q.choice1;
    r.choice_b = q.choice2;
  }
  return r;
}

ChoiceResult parse_choice(std::string_view text, std::string_view choice1, std::string_view choice2) {
  const std::string lower = to_lower(text);
  const auto occ1 = occurrences(lower, to_lower(choice1));
  const auto occ2 = occurrences(lower, to_lower(choice2));

  auto protected_at = [&](std::size_t i) {
    for (const auto* occ : {&occ1, &occ2}) {
      for (const auto& [b, e] : *occ) {
        if (b <= i && i < e) return true;
      }
    }
    return false;
  };
  std::size_t end = lower.size();
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (is_sentence_end(lower[i]) && !protected_at(i)) {
      end = i;
      break;
    }
  }
  auto within = [end](const auto& occ) {
    return std::any_of(occ.begin(), occ.end(), [end](const auto& span) { return span.second <= end; });
  };
  // A choice that contains the other ("Bush" / "George W. Bush") only counts
  // as the longer one where they overlap.
  auto strictly_within = [&](const auto& shorter, const auto& longer) {
    return std::any_of(shorter.begin(), shorter.end(), [&](const auto& s) {
      if (s.second > end) return false;
      return std::none_of(longer.begin(), longer.end(),
                          [&](const auto& l) { return l.first <= s.first && s.second <= l.second && l != s; });
    });
  };
  bool has1 = within(occ1);
  bool has2 = within(occ2);
  if (has1 && has2) {
    if (choice1.size() < choice2.size()) has1 = strictly_within(occ1, occ2);
    else if (choice2.size() < choice1.size()) has2 = strictly_within(occ2, occ1);
  }
  if (has1 && has2) return {"", InvalidReason::kAmbiguous};
  if (has1) return {std::string(choice1), InvalidReason::kNone};
  if (has2) return {std::string(choice2), InvalidReason::kNone};
  return {"", InvalidReason::kNoMatch};
}

ParsedRecord parse_color(std::string_view run_id, const QueryRecord& q, std::string_view text) {
  ParsedRecord r = record_for(run_id, q);
  r.hex = find_hex(text);
  if (!r.hex) r.invalid_reason = InvalidReason::kNoHex;
  return r;
}

ParsedRecord parse_choice(std::string_view run_id, const QueryRecord& q, std::string_view text) {
  ParsedRecord r = record_for(run_id, q);
  auto res = parse_choice(text, q.choice1, q.choice2);
  r.picked = std::move(res.picked);
  r.invalid_reason = res.reason;
  return r;
}

ParsedRecord backend_error_record(std::string_view run_id, const QueryRecord& q) {
  ParsedRecord r = record_for(run_id, q);
  r.invalid_reason = InvalidReason::kBackendError;
  return r;
}

std::vector<PairedColorCell> pair_blocks(std::span<const ParsedRecord> records) {
  using PairKey = std::pair<std::string, std::string>;  // subject, word
  struct Blocks {
    const ParsedRecord* b1 = nullptr;
    const ParsedRecord* b2 = nullptr;
  };
  std::map<CellKey, std::map<PairKey, Blocks>> cells;
  for (const auto& r : records) {
    if (r.domain != Domain::kColor) continue;
    if (r.block != 1 && r.block != 2) {
      throw Error(ErrorCode::kInvalidPlan, "block must be 1 or 2, got " + std::to_string(r.block));
    }
    auto& slot = cells[{r.run_id, r.condition, r.temperature}][{r.subject_id, r.word}];
    auto& b = r.block == 1 ? slot.b1 : slot.b2;
    if (b != nullptr) {
      throw Error(ErrorCode::kDuplicateResponse, "subject " + r.subject_id + " answered '" + r.word + "' block " +
                                                     std::to_string(r.block) + " twice");
    }
    b = &r;
  }

  std::vector<PairedColorCell> out;
  for (const auto& [key, pairs] : cells) {
    PairedColorCell cell{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}, 0};
    for (const auto& [pk, blocks] : pairs) {
      const bool ok = blocks.b1 && blocks.b2 && blocks.b1->valid() && blocks.b2->valid();
      if (!ok) {
        ++cell.excluded_pairs;
        continue;
      }
      for (const ParsedRecord* r : {blocks.b1, blocks.b2}) {
        cell.responses.push_back({r->subject_id, r->word, r->block, hex_to_lab(*r->hex), true, ""});
      }
    }
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<JudgmentSet> build_judgment_sets(std::span<const ParsedRecord> records) {
  std::map<std::string, std::set<std::string>> category_words;
  for (const auto& r : records) {
    if (r.domain != Domain::kConcept) continue;
    auto& words = category_words[r.category];
    words.insert(r.target);
    words.insert(r.choice_a);
    words.insert(r.choice_b);
  }

  using TargetKey = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::map<TargetKey, std::map<std::string, std::vector<const ParsedRecord*>>> grouped;
  for (const auto& r : records) {
    if (r.domain != Domain::kConcept) continue;
    grouped[{r.run_id, r.condition, r.temperature, r.category, r.target}][r.subject_id].push_back(&r);
  }

  std::map<std::pair<std::string, std::string>, std::vector<PairQuestion>> pairs_cache;
  std::vector<JudgmentSet> out;
  for (const auto& [key, subjects] : grouped) {
    const auto& [run_id, condition, temperature, category, target] = key;
    auto pit = pairs_cache.find({category, target});
    if (pit == pairs_cache.end()) {
      const auto& ws = category_words.at(category);
      const std::vector<std::string> words(ws.begin(), ws.end());
      pit = pairs_cache.emplace(std::pair{category, target}, canonical_pairs(words, target)).first;
    }
    const auto& pairs = pit->second;

    JudgmentSet set{run_id, condition, temperature, category, target, {}, 0};
    for (const auto& [subject, recs] : subjects) {
      JudgmentVector v{subject, target, category, std::vector<Judgment>(pairs.size(), Judgment::kMissing)};
      std::vector<bool> seen(pairs.size(), false);
      for (const ParsedRecord* r : recs) {
        const PairQuestion q = r->choice_a < r->choice_b ? PairQuestion{r->choice_a, r->choice_b}
                                                         : PairQuestion{r->choice_b, r->choice_a};
        const auto it = std::lower_bound(pairs.begin(), pairs.end(), q, [](const auto& a, const auto& b) {
          return std::tie(a.first, a.second) < std::tie(b.first, b.second);
        });
        if (it == pairs.end() || !(*it == q)) {
          throw Error(ErrorCode::kSchemaError,
                      "pair (" + q.first + ", " + q.second + ") is not a question for target '" + target + "'");
        }
        const auto d = static_cast<std::size_t>(it - pairs.begin());
        if (seen[d]) {
          throw Error(ErrorCode::kDuplicateResponse,
                      "subject " + subject + " answered (" + q.first + ", " + q.second + ") for '" + target + "' twice");
        }
        seen[d] = true;
        if (r->valid()) v.bits[d] = r->picked == q.first ? Judgment::kOne : Judgment::kZero;
      }
      if (v.missing_fraction() > kMaxMissingFraction) {
        ++set.dropped_subjects;
      } else {
        set.vectors.push_back(std::move(v));
      }
    }
    out.push_back(std::move(set));
  }
  return out;
}

double ValidityCell::invalid_percent() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(invalid) / static_cast<double>(total);
}

ValidityReport validity_report(std::span<const ParsedRecord> records) {
  using Key = std::tuple<std::string, int, std::string, std::string>;
  std::map<Key, ValidityCell> cells;
  for (const auto& r : records) {
    auto& c = cells[{r.run_id, static_cast<int>(r.domain), r.condition, r.temperature}];
    c.run_id = r.run_id;
    c.domain = r.domain;
    c.condition = r.condition;
    c.temperature = r.temperature;
    ++c.total;
    switch (r.invalid_reason) {
      case InvalidReason::kNone: continue;
      case InvalidReason::kNoHex: ++c.no_hex; break;
      case InvalidReason::kNoMatch: ++c.no_match; break;
      case InvalidReason::kAmbiguous: ++c.ambiguous; break;
      case InvalidReason::kBackendError: ++c.backend_error; break;
    }
    ++c.invalid;
  }

  ValidityReport report;
  std::map<std::pair<std::string, int>, std::pair<double, std::size_t>> per_domain;
  for (auto& [key, cell] : cells) {
    auto& acc = per_domain[{cell.run_id, static_cast<int>(cell.domain)}];
    acc.first += cell.invalid_percent();
    ++acc.second;
    report.cells.push_back(std::move(cell));
  }
  for (const auto& [key, acc] : per_domain) {
    const double mean = acc.first / static_cast<double>(acc.second);
    report.exclusions.push_back({key.first, static_cast<Domain>(key.second), mean, mean >= kExclusionPercent});
  }
  return report;
}

void write_color_csv(const std::filesystem::path& path, std::span<const ParsedRecord> records) {
  std::vector<csv::Row> rows;
  for (const auto& r : records) {
    if (r.domain != Domain::kColor) continue;
    rows.push_back({r.run_id, r.subject_id, r.condition, r.temperature, r.word, std::to_string(r.block),
                    r.hex ? r.hex->code() : "", bool_field(r.valid()), std::string(to_string(r.invalid_reason))});
  }
  csv::write_table(path, kColorCsvHeader, rows);
}

void write_judgment_csv(const std::filesystem::path& path, std::span<const ParsedRecord> records) {
  std::vector<csv::Row> rows;
  for (const auto& r : records) {
    if (r.domain != Domain::kConcept) continue;
    rows.push_back({r.run_id, r.subject_id, r.condition, r.temperature, r.category, r.target, r.choice_a, r.choice_b,
                    r.picked, bool_field(r.valid()), std::string(to_string(r.invalid_reason))});
  }
  csv::write_table(path, kJudgmentCsvHeader, rows);
}

std::vector<ParsedRecord> read_color_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path, kColorCsvHeader);
  std::vector<std::size_t> col;
  for (const auto& name : kColorCsvHeader) col.push_back(table.column(name));
  std::vector<ParsedRecord> out;
  std::size_t line = 1;
  for (const auto& row : table.rows) {
    ++line;
    const std::string where = path.string() + ":" + std::to_string(line);
    ParsedRecord r;
    r.domain = Domain::kColor;
    r.run_id = row[col[0]];
    r.subject_id = row[col[1]];
    r.condition = row[col[2]];
    r.temperature = row[col[3]];
    r.word = row[col[4]];
    try {
      std::size_t used = 0;
      r.block = std::stoi(row[col[5]], &used);
      if (used != row[col[5]].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kSchemaError, where + ": bad block '" + row[col[5]] + "'");
    }
    const std::string hex = trim(row[col[6]]);
    if (!hex.empty()) {
      const auto h = find_hex(hex);
      if (!h || (hex.size() != 6 && hex.size() != 7)) {
        throw Error(ErrorCode::kSchemaError, where + ": bad hex '" + hex + "'");
      }
      r.hex = h;
    }
    r.invalid_reason = parse_invalid_reason(row[col[8]]);
    check_validity_fields(r, parse_bool_field(row[col[7]], where), r.hex.has_value(), where);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ParsedRecord> read_judgment_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path, kJudgmentCsvHeader);
  std::vector<std::size_t> col;
  for (const auto& name : kJudgmentCsvHeader) col.push_back(table.column(name));
  std::vector<ParsedRecord> out;
  std::size_t line = 1;
  for (const auto& row : table.rows) {
    ++line;
    const std::string where = path.string() + ":" + std::to_string(line);
    ParsedRecord r;
    r.domain = Domain::kConcept;
    r.run_id = row[col[0]];
    r.subject_id = row[col[1]];
    r.condition = row[col[2]];
    r.temperature = row[col[3]];
    r.category = row[col[4]];
    r.target = row[col[5]];
    r.choice_a = row[col[6]];
    r.choice_b = row[col[7]];
    r.picked = row[col[8]];
    r.invalid_reason = parse_invalid_reason(row[col[10]]);
    if (!r.picked.empty() && r.picked != r.choice_a && r.picked != r.choice_b) {
      throw Error(ErrorCode::kSchemaError, where + ": picked '" + r.picked + "' is neither choice");
    }
    if (r.choice_a == r.choice_b || r.choice_a.empty() || r.target.empty()) {
      throw Error(ErrorCode::kSchemaError, where + ": malformed pair");
    }
    check_validity_fields(r, parse_bool_field(row[col[9]], where), !r.picked.empty(), where);
    out.push_back(std::move(r));
  }
  return out;
}

void write_validity_csv(const std::filesystem::path& path, const ValidityReport& report) {
  std::vector<csv::Row> rows;
  for (const auto& c : report.cells) {
    rows.push_back({c.run_id, std::string(to_string(c.domain)), c.condition, c.temperature, std::to_string(c.total),
                    std::to_string(c.valid()), std::to_string(c.invalid), format_number(c.invalid_percent()),
                    std::to_string(c.no_hex), std::to_string(c.no_match), std::to_string(c.ambiguous),
                    std::to_string(c.backend_error)});
  }
  csv::write_table(path,
                   {"run_id", "domain", "condition", "temperature", "total", "valid", "invalid", "invalid_percent",
                    "no_hex", "no_match", "ambiguous", "backend_error"},
                   rows);
}

}  // namespace popdiv
