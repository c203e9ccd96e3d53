#include "popdiv/stats_report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "popdiv/csv.hpp"
#include "popdiv/error.hpp"
#include "popdiv/io.hpp"
#include "popdiv/random.hpp"
#include "popdiv/svg.hpp"

namespace popdiv {

namespace {

using ojson = nlohmann::ordered_json;

double round9(double v) {
  const double r = std::round(v * 1e9) / 1e9;
  return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

ojson ci_json(const ConfidenceInterval& ci) {
  return ojson{{"mean", round9(ci.mean)}, {"lo", round9(ci.lo)}, {"hi", round9(ci.hi)}};
}

ConfidenceInterval ci_from(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("lo").get<double>(), j.at("hi").get<double>()};
}

std::string cell_dir_name(const std::string& run, const std::string& cond, const std::string& temp) {
  std::string name = run + "_" + cond + (temp.empty() ? "" : "_t" + temp);
  for (char& c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.' || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return name;
}

std::string cell_label(const std::string& run, const std::string& cond, const std::string& temp) {
  std::string s = run == kBaselineRunId ? std::string(kBaselineRunId) : run + "/" + cond;
  if (!temp.empty()) s += " t=" + temp;
  return s;
}

template <class Cell>
void baseline_first(std::vector<Cell>& cells) {
  std::stable_partition(cells.begin(), cells.end(), [](const Cell& c) { return c.run_id == kBaselineRunId; });
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

ColorCellReport color_cell(const PairedColorCell& cell, const AnalysisOptions& options) {
  ColorCellReport out;
  out.run_id = cell.run_id;
  out.condition = cell.condition;
  out.temperature = cell.temperature;
  out.excluded_pairs = cell.excluded_pairs;

  std::vector<WordPopulation> usable;
  for (auto& pop : group_by_word(cell.responses)) {
    if (pop.size() < 2) continue;
    out.words.push_back(word_metrics(pop, options.formula));
    if (options.scatter) {
      for (const auto& p : scatter_points(pop, options.formula)) {
        out.scatter.push_back({pop.word(), p.subject_id, p.population, p.internal});
      }
    }
    usable.push_back(std::move(pop));
  }
  std::set<std::string> subjects;
  for (const auto& pop : usable) {
    for (const auto& s : pop.subjects()) subjects.insert(s.subject_id);
  }
  if (!usable.empty() && subjects.size() >= 2) {
    out.mean_d_w = mean_dw_ci(usable, options.formula, options.n_boot,
                              derive_seed(options.seed, {"bootstrap-color", cell.run_id, cell.condition,
                                                         cell.temperature}));
  }
  return out;
}

void add_jsd(std::vector<ColorCellReport>& cells, std::span<const ParsedRecord> records, const ChipPalette& palette) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;  // run, cond, temp, word
  std::map<std::string, std::vector<LabColor>> human;
  std::map<Key, std::vector<LabColor>> model;
  for (const auto& r : records) {
    if (r.domain != Domain::kColor || !r.valid()) continue;
    if (r.run_id == kBaselineRunId) {
      human[r.word].push_back(hex_to_lab(*r.hex));
    } else {
      model[{r.run_id, r.condition, r.temperature, r.word}].push_back(hex_to_lab(*r.hex));
    }
  }
  std::map<std::string, std::vector<double>> human_dist;
  for (const auto& [word, labs] : human) human_dist.emplace(word, chip_distribution(labs, palette));

  for (auto& cell : cells) {
    if (cell.run_id == kBaselineRunId) continue;
    for (const auto& [word, q] : human_dist) {
      auto it = model.find({cell.run_id, cell.condition, cell.temperature, word});
      if (it == model.end()) continue;
      cell.jsd.push_back({word, js_divergence(chip_distribution(it->second, palette), q)});
    }
  }
}

std::vector<ConceptCellReport> concept_cells(std::span<const ParsedRecord> records, const AnalysisOptions& options) {
  const auto sets = build_judgment_sets(records);
  std::vector<TargetRow> rows(sets.size());
  parallel_for(sets.size(), options.threads, [&](std::size_t i) {
    const auto& s = sets[i];
    TargetRow& row = rows[i];
    row.category = s.category;
    row.target = s.target;
    row.n_subjects = s.vectors.size();
    row.dropped_subjects = s.dropped_subjects;
    if (s.vectors.empty()) return;
    CrpConfig cfg = options.crp;
    cfg.seed = derive_seed(options.crp.seed, {"crp", s.run_id, s.condition, s.temperature, s.category, s.target});
    const auto post = run_chain(s.vectors, cfg);
    row.p_one_concept = post.p_one_concept;
    row.p_multiple = post.p_multiple;
    row.posterior_mode_k = post.mode_k();
    try {
      row.reliability = between_subjects_reliability(s.vectors);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPopulationTooSmall) throw;
    }
  });

  std::vector<ConceptCellReport> cells;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& s = sets[i];
    if (rows[i].n_subjects == 0) continue;
    if (cells.empty() || cells.back().run_id != s.run_id || cells.back().condition != s.condition ||
        cells.back().temperature != s.temperature) {
      cells.push_back({s.run_id, s.condition, s.temperature, {}, {}});
    }
    cells.back().targets.push_back(rows[i]);
  }

  for (auto& cell : cells) {
    std::map<std::string, std::vector<const TargetRow*>> by_category;
    for (const auto& t : cell.targets) by_category[t.category].push_back(&t);
    for (const auto& [category, targets] : by_category) {
      CategorySummary sum;
      sum.category = category;
      sum.n_targets = targets.size();
      std::vector<double> pm;
      std::vector<double> rel;
      for (const auto* t : targets) {
        pm.push_back(t->p_multiple);
        if (t->reliability) rel.push_back(*t->reliability);
      }
      sum.mean_p_multiple = std::accumulate(pm.begin(), pm.end(), 0.0) / static_cast<double>(pm.size());
      if (pm.size() >= 2) {
        sum.p_multiple_ci = bootstrap_ci(pm, options.n_boot,
                                         derive_seed(options.seed, {"bootstrap-concept", cell.run_id, cell.condition,
                                                                    cell.temperature, category}));
      }
      if (!rel.empty()) sum.mean_reliability = std::accumulate(rel.begin(), rel.end(), 0.0) / rel.size();
      cell.categories.push_back(std::move(sum));
    }
  }
  return cells;
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::kTooFewValues, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

ConfidenceInterval bootstrap_statistic(std::size_t n,
                                       const std::function<double(std::span<const std::size_t>)>& statistic,
                                       std::size_t n_boot, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kTooFewValues, "bootstrap needs at least 2 values, got " + std::to_string(n));
  if (n_boot == 0) throw Error(ErrorCode::kInvalidConfig, "n_boot must be positive");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  ConfidenceInterval ci;
  ci.mean = statistic(idx);

  Rng rng(seed);
  std::vector<double> reps(n_boot);
  for (auto& rep : reps) {
    for (auto& i : idx) i = rng.uniform_index(n);
    rep = statistic(idx);
  }
  std::sort(reps.begin(), reps.end());
  ci.lo = std::min(quantile_sorted(reps, 0.025), ci.mean);
  ci.hi = std::max(quantile_sorted(reps, 0.975), ci.mean);
  return ci;
}

ConfidenceInterval bootstrap_ci(std::span<const double> values, std::size_t n_boot, std::uint64_t seed) {
  return bootstrap_statistic(
      values.size(),
      [values](std::span<const std::size_t> idx) {
        double s = 0.0;
        for (auto i : idx) s += values[i];
        return s / static_cast<double>(idx.size());
      },
      n_boot, seed);
}

ConfidenceInterval mean_dw_ci(std::span<const WordPopulation> words, DeltaEFormula formula, std::size_t n_boot,
                              std::uint64_t seed) {
  std::set<std::string> ids;
  for (const auto& w : words) {
    for (const auto& s : w.subjects()) ids.insert(s.subject_id);
  }
  const std::vector<std::string> universe(ids.begin(), ids.end());

  // term[w][u]: subject u's deviation for word w, NaN where incomplete.
  std::vector<std::vector<double>> term(words.size(), std::vector<double>(universe.size(), std::nan("")));
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto terms = subject_terms(words[w], formula);
    const auto& subs = words[w].subjects();
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const auto u = static_cast<std::size_t>(
          std::lower_bound(universe.begin(), universe.end(), subs[k].subject_id) - universe.begin());
      term[w][u] = std::abs(terms[k].internal - terms[k].population) / std::numbers::sqrt2;
    }
  }

  return bootstrap_statistic(
      universe.size(),
      [&term](std::span<const std::size_t> idx) {
        double total = 0.0;
        std::size_t n_words = 0;
        for (const auto& row : term) {
          double s = 0.0;
          std::size_t c = 0;
          for (auto u : idx) {
            if (!std::isnan(row[u])) {
              s += row[u];
              ++c;
            }
          }
          if (c > 0) {
            total += s / static_cast<double>(c);
            ++n_words;
          }
        }
        return n_words == 0 ? 0.0 : total / static_cast<double>(n_words);
      },
      n_boot, seed);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    throw Error(ErrorCode::kSupportMismatch,
                "distributions have " + std::to_string(p.size()) + " and " + std::to_string(q.size()) + " outcomes");
  }
  auto check = [](std::span<const double> d, const char* name) {
    double sum = 0.0;
    for (double v : d) {
      if (!(v >= 0.0)) throw Error(ErrorCode::kSupportMismatch, std::string(name) + " has a negative mass");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kSupportMismatch, std::string(name) + " sums to " + format_number(sum));
    }
  };
  check(p, "p");
  check(q, "q");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::clamp(js, 0.0, 1.0);
}

std::vector<double> chip_distribution(std::span<const LabColor> colors, const ChipPalette& palette) {
  if (colors.empty()) throw Error(ErrorCode::kEmptyPopulation, "no colors to distribute over chips");
  std::vector<double> dist(palette.size(), 0.0);
  for (const auto& c : colors) dist[snap_to_chip_index(c, palette)] += 1.0;
  for (auto& v : dist) v /= static_cast<double>(colors.size());
  return dist;
}

double between_subjects_reliability(std::span<const JudgmentVector> vectors) {
  if (vectors.size() < 2) {
    throw Error(ErrorCode::kPopulationTooSmall,
                "reliability needs at least 2 subjects, got " + std::to_string(vectors.size()));
  }
  const std::size_t dims = vectors.front().bits.size();
  for (const auto& v : vectors) {
    if (v.bits.size() != dims) throw Error(ErrorCode::kSchemaError, "judgment vectors differ in length");
  }
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t d = 0; d < dims; ++d) {
    double ones = 0.0;
    double zeros = 0.0;
    for (const auto& v : vectors) {
      if (v.bits[d] == Judgment::kOne) ones += 1.0;
      else if (v.bits[d] == Judgment::kZero) zeros += 1.0;
    }
    const double n = ones + zeros;
    if (n < 2.0) continue;
    total += (ones * (ones - 1.0) + zeros * (zeros - 1.0)) / (n * (n - 1.0));
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::kPopulationTooSmall, "no question was answered by two subjects");
  return total / static_cast<double>(used);
}

ojson DiversityReport::to_json() const {
  ojson j;
  j["schema"] = "popdiv.report/1";
  // Sorted keys, so a report re-read through nlohmann::json re-emits identically.
  j["metadata"] = ojson::parse(nlohmann::json::parse(metadata.dump()).dump());
  if (!color.empty()) {
    auto& arr = j["color"] = ojson::array();
    for (const auto& c : color) {
      ojson cj{{"run_id", c.run_id}, {"condition", c.condition}, {"temperature", c.temperature},
               {"excluded_pairs", c.excluded_pairs}};
      if (c.mean_d_w) cj["mean_d_w"] = ci_json(*c.mean_d_w);
      if (!c.words.empty()) {
        auto& words = cj["words"] = ojson::array();
        for (const auto& w : c.words) {
          words.push_back({{"word", w.word}, {"n_subjects", w.n_subjects}, {"d_w", round9(w.d_w)},
                           {"mean_internal", round9(w.mean_internal)}, {"mean_population", round9(w.mean_population)}});
        }
      }
      if (!c.jsd.empty()) {
        auto& jsd = cj["jsd"] = ojson::array();
        for (const auto& w : c.jsd) jsd.push_back({{"word", w.word}, {"jsd", round9(w.jsd)}});
      }
      if (!c.scatter.empty()) {
        auto& sc = cj["scatter"] = ojson::array();
        for (const auto& p : c.scatter) {
          sc.push_back({{"word", p.word}, {"subject_id", p.subject_id}, {"population", round9(p.population)},
                        {"internal", round9(p.internal)}});
        }
      }
      arr.push_back(std::move(cj));
    }
  }
  if (!concepts.empty()) {
    auto& arr = j["concept"] = ojson::array();
    for (const auto& c : concepts) {
      ojson cj{{"run_id", c.run_id}, {"condition", c.condition}, {"temperature", c.temperature}};
      auto& targets = cj["targets"] = ojson::array();
      for (const auto& t : c.targets) {
        ojson tj{{"category", t.category},
                 {"target", t.target},
                 {"n_subjects", t.n_subjects},
                 {"dropped_subjects", t.dropped_subjects},
                 {"p_one_concept", round9(t.p_one_concept)},
                 {"p_multiple", round9(t.p_multiple)},
                 {"posterior_mode_K", t.posterior_mode_k}};
        if (t.reliability) tj["reliability"] = round9(*t.reliability);
        targets.push_back(std::move(tj));
      }
      auto& cats = cj["categories"] = ojson::array();
      for (const auto& s : c.categories) {
        ojson sj{{"category", s.category}, {"n_targets", s.n_targets}, {"mean_p_multiple", round9(s.mean_p_multiple)}};
        if (s.p_multiple_ci) sj["p_multiple_ci"] = ci_json(*s.p_multiple_ci);
        if (s.mean_reliability) sj["mean_reliability"] = round9(*s.mean_reliability);
        cats.push_back(std::move(sj));
      }
      arr.push_back(std::move(cj));
    }
  }
  if (validity && !validity->cells.empty()) {
    ojson v;
    auto& cells = v["cells"] = ojson::array();
    for (const auto& c : validity->cells) {
      cells.push_back({{"run_id", c.run_id},
                       {"domain", to_string(c.domain)},
                       {"condition", c.condition},
                       {"temperature", c.temperature},
                       {"total", c.total},
                       {"valid", c.valid()},
                       {"invalid", c.invalid},
                       {"invalid_percent", round9(c.invalid_percent())},
                       {"no_hex", c.no_hex},
                       {"no_match", c.no_match},
                       {"ambiguous", c.ambiguous},
                       {"backend_error", c.backend_error}});
    }
    auto& ex = v["exclusions"] = ojson::array();
    for (const auto& e : validity->exclusions) {
      ex.push_back({{"run_id", e.run_id},
                    {"domain", to_string(e.domain)},
                    {"mean_invalid_percent", round9(e.mean_invalid_percent)},
                    {"excluded", e.excluded}});
    }
    j["validity"] = std::move(v);
  }
  return j;
}

DiversityReport DiversityReport::from_json(const nlohmann::json& j) {
  DiversityReport r;
  try {
    if (j.at("schema") != "popdiv.report/1") throw Error(ErrorCode::kSchemaError, "unsupported report schema");
    r.metadata = j.at("metadata");
    for (const auto& cj : j.value("color", nlohmann::json::array())) {
      ColorCellReport c;
      c.run_id = cj.at("run_id");
      c.condition = cj.at("condition");
      c.temperature = cj.at("temperature");
      c.excluded_pairs = cj.at("excluded_pairs");
      if (cj.contains("mean_d_w")) c.mean_d_w = ci_from(cj["mean_d_w"]);
      for (const auto& w : cj.value("words", nlohmann::json::array())) {
        c.words.push_back({w.at("word"), w.at("n_subjects"), w.at("d_w"), w.at("mean_internal"),
                           w.at("mean_population")});
      }
      for (const auto& w : cj.value("jsd", nlohmann::json::array())) c.jsd.push_back({w.at("word"), w.at("jsd")});
      for (const auto& p : cj.value("scatter", nlohmann::json::array())) {
        c.scatter.push_back({p.at("word"), p.at("subject_id"), p.at("population"), p.at("internal")});
      }
      r.color.push_back(std::move(c));
    }
    for (const auto& cj : j.value("concept", nlohmann::json::array())) {
      ConceptCellReport c;
      c.run_id = cj.at("run_id");
      c.condition = cj.at("condition");
      c.temperature = cj.at("temperature");
      for (const auto& tj : cj.at("targets")) {
        TargetRow t;
        t.category = tj.at("category");
        t.target = tj.at("target");
        t.n_subjects = tj.at("n_subjects");
        t.dropped_subjects = tj.at("dropped_subjects");
        t.p_one_concept = tj.at("p_one_concept");
        t.p_multiple = tj.at("p_multiple");
        t.posterior_mode_k = tj.at("posterior_mode_K");
        if (tj.contains("reliability")) t.reliability = tj["reliability"].get<double>();
        c.targets.push_back(std::move(t));
      }
      for (const auto& sj : cj.at("categories")) {
        CategorySummary s;
        s.category = sj.at("category");
        s.n_targets = sj.at("n_targets");
        s.mean_p_multiple = sj.at("mean_p_multiple");
        if (sj.contains("p_multiple_ci")) s.p_multiple_ci = ci_from(sj["p_multiple_ci"]);
        if (sj.contains("mean_reliability")) s.mean_reliability = sj["mean_reliability"].get<double>();
        c.categories.push_back(std::move(s));
      }
      r.concepts.push_back(std::move(c));
    }
    if (j.contains("validity")) {
      ValidityReport v;
      for (const auto& cj : j["validity"].at("cells")) {
        ValidityCell c;
        c.run_id = cj.at("run_id");
        c.domain = parse_domain(cj.at("domain").get<std::string>());
        c.condition = cj.at("condition");
        c.temperature = cj.at("temperature");
        c.total = cj.at("total");
        c.invalid = cj.at("invalid");
        c.no_hex = cj.at("no_hex");
        c.no_match = cj.at("no_match");
        c.ambiguous = cj.at("ambiguous");
        c.backend_error = cj.at("backend_error");
        if (c.invalid > c.total) throw Error(ErrorCode::kSchemaError, "validity cell has invalid > total");
        v.cells.push_back(std::move(c));
      }
      for (const auto& ej : j["validity"].at("exclusions")) {
        v.exclusions.push_back({ej.at("run_id"), parse_domain(ej.at("domain").get<std::string>()),
                                ej.at("mean_invalid_percent"), ej.at("excluded")});
      }
      r.validity = std::move(v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("report JSON: ") + e.what());
  }
  return r;
}

DiversityReport build_report(std::span<const ParsedRecord> records, std::span<const ParsedRecord> baseline,
                             const AnalysisOptions& options) {
  options.crp.validate();
  std::vector<ParsedRecord> all;
  all.reserve(records.size() + baseline.size());
  for (auto r : baseline) {
    r.run_id = kBaselineRunId;
    all.push_back(std::move(r));
  }
  for (const auto& r : records) {
    if (r.run_id == kBaselineRunId) {
      throw Error(ErrorCode::kSchemaError, "run id '" + std::string(kBaselineRunId) + "' is reserved");
    }
    all.push_back(r);
  }

  DiversityReport report;
  auto& md = report.metadata;
  md["delta_e"] = to_string(options.formula);
  md["seed"] = options.seed;
  md["bootstrap"] = {{"n_boot", options.n_boot},
                     {"method", "percentile"},
                     {"color_units", "subjects; per-subject deviation terms fixed at full-sample values"},
                     {"concept_units", "targets within a category"},
                     {"note", "reference intervals of unknown method; this interval is a percentile bootstrap"}};
  md["crp"] = {{"alpha", options.crp.alpha},     {"beta_a", options.crp.beta_a},
               {"beta_b", options.crp.beta_b},   {"burn_in", options.crp.burn_in},
               {"samples", options.crp.samples}, {"seed", options.crp.seed}};
  md["max_missing_fraction"] = kMaxMissingFraction;
  md["has_baseline"] = !baseline.empty();

  for (const auto& cell : pair_blocks(all)) report.color.push_back(color_cell(cell, options));
  if (options.palette && !baseline.empty()) add_jsd(report.color, all, *options.palette);
  report.concepts = concept_cells(all, options);
  baseline_first(report.color);
  baseline_first(report.concepts);

  if (!records.empty()) report.validity = validity_report(records);
  return report;
}

void emit_report(const DiversityReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"color", "concept"}) {
    fs::remove_all(dir / sub, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot clear " + (dir / sub).string() + ": " + ec.message());
  }
  for (const char* f : {"color_dw.svg", "concept_p_multiple.svg", "validity.csv", "tidy_color.csv", "tidy_concept.csv"}) {
    fs::remove(dir / f, ec);
  }

  write_file_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
  auto num = [](double v) { return format_number(round9(v)); };

  std::vector<svg::Bar> dw_bars;
  std::vector<csv::Row> tidy_color;
  for (const auto& c : report.color) {
    const auto cdir = dir / "color" / cell_dir_name(c.run_id, c.condition, c.temperature);
    std::vector<csv::Row> rows;
    for (const auto& w : c.words) {
      rows.push_back({w.word, std::to_string(w.n_subjects), num(w.d_w), num(w.mean_internal), num(w.mean_population)});
    }
    csv::write_table(cdir / "word_metrics.csv", kWordMetricsHeader, rows);
    if (!c.scatter.empty()) {
      std::vector<csv::Row> srows;
      std::vector<svg::Point> pts;
      for (const auto& p : c.scatter) {
        srows.push_back({p.word, p.subject_id, num(p.population), num(p.internal)});
        tidy_color.push_back({c.run_id, c.condition, c.temperature, p.word, p.subject_id, num(p.internal),
                              num(p.population), num(std::abs(round9(p.internal) - round9(p.population)) / std::sqrt(2.0))});
        pts.push_back({p.population, p.internal});
      }
      csv::write_table(cdir / "scatter.csv", {"word", "subject_id", "population_delta_e", "internal_delta_e"}, srows);
      write_file_atomic(cdir / "scatter.svg",
                        svg::scatter(pts, cell_label(c.run_id, c.condition, c.temperature), "Population ΔE",
                                     "Internal ΔE"));
    }
    if (!c.jsd.empty()) {
      std::vector<csv::Row> jrows;
      for (const auto& w : c.jsd) jrows.push_back({w.word, num(w.jsd)});
      csv::write_table(cdir / "jsd.csv", {"word", "jsd"}, jrows);
    }
    if (c.mean_d_w) {
      dw_bars.push_back({cell_label(c.run_id, c.condition, c.temperature), c.mean_d_w->mean, c.mean_d_w->lo,
                         c.mean_d_w->hi});
    }
  }
  if (!dw_bars.empty()) {
    write_file_atomic(dir / "color_dw.svg", svg::bar_chart(dw_bars, "Heterogeneity of color associations", "mean d_w"));
  }

  if (!tidy_color.empty()) {
    csv::write_table(dir / "tidy_color.csv", kTidyColorHeader, tidy_color);
  }

  std::vector<svg::Bar> pm_bars;
  std::vector<csv::Row> tidy_concept;
  for (const auto& c : report.concepts) {
    const auto cdir = dir / "concept" / cell_dir_name(c.run_id, c.condition, c.temperature);
    std::vector<csv::Row> rows;
    for (const auto& t : c.targets) {
      rows.push_back({t.category, t.target, std::to_string(t.n_subjects), num(t.p_one_concept), num(t.p_multiple),
                      std::to_string(t.posterior_mode_k)});
      tidy_concept.push_back({c.run_id, c.condition, c.temperature, t.category, t.target,
                              std::to_string(t.n_subjects), num(t.p_multiple),
                              t.reliability ? num(*t.reliability) : ""});
    }
    csv::write_table(cdir / "target_posteriors.csv", kTargetPosteriorHeader, rows);
    for (const auto& s : c.categories) {
      svg::Bar b{cell_label(c.run_id, c.condition, c.temperature) + " " + s.category, s.mean_p_multiple, {}, {}};
      if (s.p_multiple_ci) {
        b.lo = s.p_multiple_ci->lo;
        b.hi = s.p_multiple_ci->hi;
      }
      pm_bars.push_back(std::move(b));
    }
  }
  if (!pm_bars.empty()) {
    write_file_atomic(dir / "concept_p_multiple.svg",
                      svg::bar_chart(pm_bars, "P(multiple concepts)", "P(multiple)", 1.0));
  }
  if (!tidy_concept.empty()) csv::write_table(dir / "tidy_concept.csv", kTidyConceptHeader, tidy_concept);
  if (report.validity) write_validity_csv(dir / "validity.csv", *report.validity);
}

}  // namespace popdiv
