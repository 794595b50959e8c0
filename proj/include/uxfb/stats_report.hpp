#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uxfb/corpus.hpp"
#include "uxfb/stats.hpp"

// The per-survey statistics battery: sentiment x metric table, chi-squared,
// Cramer's V with bootstrap CI, conditional probabilities with Wilson
// intervals, a one-tailed binomial test, score curves and group summaries.

namespace uxfb::stats {

struct ReportConfig {
  double level = 0.95;
  BootstrapOptions bootstrap;
  std::vector<double> tutorial_grid;  // empty: 0, 0.5, ..., 10
  std::vector<double> uxlite_grid;    // empty: 0, 12.5, ..., 100
};

struct ConditionalEntry {
  std::string given;
  std::string target;
  std::int64_t count = 0;
  std::int64_t total = 0;
  IntervalEstimate estimate;
};

struct ShareEntry {
  std::string given;
  std::vector<std::string> categories;
  std::int64_t count = 0;
  std::int64_t total = 0;
  IntervalEstimate estimate;
};

struct DifferenceEntry {
  std::string given;
  std::vector<std::string> a;
  std::vector<std::string> b;
  double percentage_points = 0.0;
};

struct SurveyReport {
  SurveyKind kind = SurveyKind::Tutorial;
  std::size_t responses = 0;
  std::size_t with_comment = 0;  // responses linked to a comment with a sentiment
  ContingencyTable table;
  std::optional<TestResult> chi_squared;
  std::optional<double> cramers_v;
  std::optional<IntervalEstimate> cramers_v_ci;
  std::vector<ConditionalEntry> conditionals;
  std::optional<TestResult> binomial;
  std::string binomial_hypothesis;
  std::vector<ShareEntry> shares;
  std::vector<DifferenceEntry> differences;
  std::string score_name;
  std::vector<double> grid;
  std::vector<CumulativeCurve> curves;
  std::vector<GroupSummary> score_summary;
  std::vector<GroupSummary> length_summary;  // comment length in characters
  std::vector<std::string> warnings;
};

/// Runs the battery over the responses of one survey kind. Throws
/// NoResponses when the corpus holds none of that kind.
SurveyReport analyze_survey(const Corpus& corpus, SurveyKind kind, const ReportConfig& config);

nlohmann::json to_json(const SurveyReport& report);
std::string to_markdown(const SurveyReport& report);
/// group,x,cumulative_fraction rows; groups with no scores are omitted.
std::string curves_csv(const SurveyReport& report);

}  // namespace uxfb::stats
