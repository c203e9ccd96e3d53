#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdiv/colorlab.hpp"
#include "popdiv/crp_cluster.hpp"
#include "popdiv/diversity_color.hpp"
#include "popdiv/parse_responses.hpp"

namespace popdiv {

struct ConfidenceInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::size_t kDefaultBootstrapSamples = 1000;

/// Linear-interpolation quantile of ascending `sorted` (p in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double p);

/// Percentile bootstrap of an arbitrary statistic over n units. Each
/// replicate draws n indices with Rng(seed).uniform_index(n), replicates in
/// sequence from one stream. The point estimate is the statistic on
/// 0..n-1; the interval is the 2.5/97.5 percentiles of the replicates,
/// widened if needed to contain the point estimate. Throws TooFewValues for
/// n < 2 and InvalidConfig for n_boot == 0.
ConfidenceInterval bootstrap_statistic(std::size_t n,
                                       const std::function<double(std::span<const std::size_t>)>& statistic,
                                       std::size_t n_boot, std::uint64_t seed);

/// Mean with its percentile bootstrap interval.
ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t n_boot = kDefaultBootstrapSamples,
                                std::uint64_t seed = 0);

/// Mean d_w over words with a bootstrap over subjects. Per-subject terms
/// |internal - population| / sqrt(2) are computed once on the full sample;
/// a replicate resamples subjects and averages each word's terms over the
/// drawn subjects that are complete for it.
ConfidenceInterval mean_dw_ci(std::span<const WordPopulation> words, DeltaEFormula formula, std::size_t n_boot,
                              std::uint64_t seed);

/// Base-2 Jensen-Shannon divergence. Throws SupportMismatch unless both are
/// non-negative, equally long and sum to 1 within 1e-9.
double js_divergence(std::span<const double> p, std::span<const double> q);

/// Empirical distribution of colors snapped to the palette. Throws
/// EmptyPopulation for no colors.
std::vector<double> chip_distribution(std::span<const LabColor> colors, const ChipPalette& palette);

/// Probability that two distinct subjects agree on a question, averaged over
/// questions answered by at least two subjects. Throws PopulationTooSmall
/// with fewer than two subjects or no such question, SchemaError on ragged
/// vectors.
double between_subjects_reliability(std::span<const JudgmentVector> vectors);

struct ScatterRow {
  std::string word;
  std::string subject_id;
  double population = 0.0;
  double internal = 0.0;
};

struct WordJsd {
  std::string word;
  double jsd = 0.0;
};

struct ColorCellReport {
  std::string run_id;
  std::string condition;
  std::string temperature;
  std::optional<ConfidenceInterval> mean_d_w;
  std::vector<WordMetrics> words;
  std::vector<WordJsd> jsd;
  std::vector<ScatterRow> scatter;
  std::size_t excluded_pairs = 0;
};

struct TargetRow {
  std::string category;
  std::string target;
  std::size_t n_subjects = 0;
  std::size_t dropped_subjects = 0;
  double p_one_concept = 0.0;
  double p_multiple = 0.0;
  std::size_t posterior_mode_k = 0;
  std::optional<double> reliability;
};

struct CategorySummary {
  std::string category;
  std::size_t n_targets = 0;
  double mean_p_multiple = 0.0;
  std::optional<ConfidenceInterval> p_multiple_ci;
  std::optional<double> mean_reliability;
};

struct ConceptCellReport {
  std::string run_id;
  std::string condition;
  std::string temperature;
  std::vector<TargetRow> targets;
  std::vector<CategorySummary> categories;
};

/// All analysis results. Baseline cells (run_id "baseline") come first,
/// then model cells in (run, condition, temperature) order.
struct DiversityReport {
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<ColorCellReport> color;
  std::vector<ConceptCellReport> concepts;
  std::optional<ValidityReport> validity;

  /// Reals are rounded to 1e-9; empty sections are omitted.
  nlohmann::ordered_json to_json() const;
  static DiversityReport from_json(const nlohmann::json& j);
};

struct AnalysisOptions {
  DeltaEFormula formula = DeltaEFormula::kCie76;
  CrpConfig crp;                 // seed is the base for per-target chains
  std::size_t n_boot = kDefaultBootstrapSamples;
  std::uint64_t seed = 0;
  std::optional<ChipPalette> palette;  // enables JSD against a color baseline
  unsigned threads = 0;                // 0: hardware concurrency
  bool scatter = true;
};

inline constexpr std::string_view kBaselineRunId = "baseline";

/// Builds the report from parsed records of one or more model runs and an
/// optional human baseline (run_id is forced to "baseline"). CRP chains run
/// in parallel, each seeded from (crp.seed, cell, category, target).
DiversityReport build_report(std::span<const ParsedRecord> records, std::span<const ParsedRecord> baseline,
                             const AnalysisOptions& options);

/// Writes report.json, validity.csv, long-format tidy_color.csv (one row
/// per subject and word) and tidy_concept.csv (one row per target) for
/// external regression tools, per-cell word_metrics.csv /
/// scatter.csv / scatter.svg (color) and target_posteriors.csv (concept),
/// and bar charts color_dw.svg and concept_p_multiple.svg. Previous
/// color/ and concept/ subdirectories are replaced. Throws IoError.
void emit_report(const DiversityReport& report, const std::filesystem::path& dir);

inline const std::vector<std::string> kWordMetricsHeader{"word", "n_subjects", "d_w", "mean_internal",
                                                          "mean_population"};
inline const std::vector<std::string> kTargetPosteriorHeader{"category",   "target_word", "n_subjects",
                                                              "p_one_concept", "p_multiple", "posterior_mode_K"};

inline const std::vector<std::string> kTidyColorHeader{
    "run_id", "condition", "temperature", "word", "subject_id", "internal_delta_e", "population_delta_e", "deviation"};
inline const std::vector<std::string> kTidyConceptHeader{"run_id", "condition", "temperature", "category", "target",
                                                          "n_subjects", "p_multiple", "reliability"};

}  // namespace popdiv
