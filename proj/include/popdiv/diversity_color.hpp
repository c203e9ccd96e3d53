#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "popdiv/colorlab.hpp"

namespace popdiv {

/// One subject's color answer for one word in one block (1 or 2).
struct ColorResponse {
  std::string subject_id;
  std::string word;
  int block = 1;
  LabColor lab;
  bool valid = true;
  std::string raw_text;
};

/// A subject with valid answers in both blocks for a word.
struct CompleteSubject {
  std::string subject_id;
  LabColor first;
  LabColor second;
};

/// All complete subjects for one word, ordered by subject id.
///
/// Subjects lacking a valid answer in either block are dropped for this word
/// only and counted in excluded().
class WordPopulation {
 public:
  WordPopulation(std::string word, std::vector<CompleteSubject> subjects, std::size_t excluded = 0);

  /// Builds the population for `word` from a response set that may mix
  /// words. Throws DuplicateResponse if a subject answers the same
  /// (word, block) twice, and InvalidPlan for blocks outside {1, 2}.
  static WordPopulation from_responses(std::string_view word, std::span<const ColorResponse> responses);

  const std::string& word() const { return word_; }
  const std::vector<CompleteSubject>& subjects() const { return subjects_; }
  std::size_t size() const { return subjects_.size(); }
  std::size_t excluded() const { return excluded_; }

  /// Index into subjects(), or throws SubjectIncomplete.
  std::size_t index_of(std::string_view subject_id) const;

 private:
  std::string word_;
  std::vector<CompleteSubject> subjects_;
  std::size_t excluded_ = 0;
};

/// Splits a mixed response set into per-word populations, sorted by word.
std::vector<WordPopulation> group_by_word(std::span<const ColorResponse> responses);

double internal_delta_e(const WordPopulation& p, std::string_view subject_id,
                        DeltaEFormula formula = DeltaEFormula::kCie76);

/// Mean distance from this subject's two answers to both answers of every
/// other complete subject (4 pairings per other subject).
double population_delta_e(const WordPopulation& p, std::string_view subject_id,
                          DeltaEFormula formula = DeltaEFormula::kCie76);

/// Per-subject (internal, population) terms, in subjects() order.
struct SubjectTerms {
  double internal = 0.0;
  double population = 0.0;
};
std::vector<SubjectTerms> subject_terms(const WordPopulation& p,
                                        DeltaEFormula formula = DeltaEFormula::kCie76);

/// d_w: mean over complete subjects of |internal - population| / sqrt(2),
/// the mean perpendicular distance from the line of unity.
double heterogeneity_d(const WordPopulation& p, DeltaEFormula formula = DeltaEFormula::kCie76);

struct ScatterPoint {
  std::string subject_id;
  double population = 0.0;
  double internal = 0.0;
};
std::vector<ScatterPoint> scatter_points(const WordPopulation& p,
                                         DeltaEFormula formula = DeltaEFormula::kCie76);

struct WordMetrics {
  std::string word;
  std::size_t n_subjects = 0;
  double d_w = 0.0;
  double mean_internal = 0.0;
  double mean_population = 0.0;
};
WordMetrics word_metrics(const WordPopulation& p, DeltaEFormula formula = DeltaEFormula::kCie76);

}  // namespace popdiv
