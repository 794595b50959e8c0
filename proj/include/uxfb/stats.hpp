#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uxfb::stats {

// ---- scoring --------------------------------------------------------------

enum class NpsCategory { Detractor, Passive, Promoter };
std::string_view to_string(NpsCategory c);
inline const std::vector<std::string> kNpsColumns = {"Detractor", "Passive", "Promoter"};

/// 0-6 Detractor, 7-8 Passive, 9-10 Promoter. Throws OutOfRange.
NpsCategory nps_categorize(int rating);

/// Mean of the answered items (each 0-10). Throws AllMissing, OutOfRange.
double tutorial_quality_score(std::span<const std::optional<int>> items);

/// ((does_what - 1) + (ease - 1)) / 8 * 100. Throws OutOfRange.
double uxlite_score(int ease, int does_what);

/// Five-point satisfaction scale, 1 = very dissatisfied.
inline const std::vector<std::string> kSatisfactionColumns = {"Very Dissatisfied", "Dissatisfied",
                                                              "Neither", "Satisfied", "Very Satisfied"};
/// Column name for a 1-5 rating. Throws OutOfRange.
const std::string& satisfaction_category(int rating);

// ---- contingency tables -----------------------------------------------------

struct ContingencyTable {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<std::int64_t>> counts;  // rows x cols

  std::int64_t total() const;
  std::int64_t row_total(std::size_t r) const;
  std::int64_t col_total(std::size_t c) const;
  std::size_t row_index(std::string_view name) const;  // throws UnknownCategory
  std::size_t col_index(std::string_view name) const;
  std::int64_t at(std::string_view row, std::string_view col) const;

  static ContingencyTable from_counts(std::vector<std::string> rows, std::vector<std::string> cols,
                                      std::vector<std::vector<std::int64_t>> counts);
  bool operator==(const ContingencyTable&) const = default;
};

using Pair = std::pair<std::string, std::string>;  // (row category, column category)

/// Tallies pairs into a table with the declared row/column order.
/// Throws UnknownCategory.
ContingencyTable build_contingency(std::span<const Pair> pairs, const std::vector<std::string>& rows,
                                   const std::vector<std::string>& cols);

// ---- tests ----------------------------------------------------------------

enum class TestMethod { ChiSquared, BinomialOneTailedUpper };
std::string_view to_string(TestMethod m);

struct TestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  TestMethod method = TestMethod::ChiSquared;
  std::vector<std::string> warnings;
};

/// Pearson statistic without continuity correction. All-zero rows and
/// columns are dropped with a warning. Throws DegenerateTable when fewer
/// than two rows or columns remain.
TestResult chi_squared_test(const ContingencyTable& table);

/// sqrt(chi2 / (n (min(r, c) - 1))) on the table with empty rows/columns
/// dropped. Throws DegenerateTable.
double cramers_v(const ContingencyTable& table);

enum class IntervalMethod { Wilson, BootstrapPercentile };
std::string_view to_string(IntervalMethod m);

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::Wilson;
  std::size_t redrawn = 0;  // bootstrap replicates redrawn because they were degenerate
  std::vector<std::string> warnings;
};

struct BootstrapOptions {
  std::size_t replicates = 10000;
  double level = 0.95;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  int max_attempts = 100;  // per replicate
};

/// Percentile bootstrap for Cramer's V, resampling pairs with replacement.
/// Replicate i draws from its own RNG stream, so the result does not depend
/// on `jobs`. Throws DegenerateTable when a replicate stays degenerate after
/// max_attempts redraws.
IntervalEstimate bootstrap_ci_cramers_v(std::span<const Pair> pairs, const std::vector<std::string>& rows,
                                        const std::vector<std::string>& cols, const BootstrapOptions& options);

/// count(given, target) / row_total(given). Throws EmptyCondition.
double conditional_probability(const ContingencyTable& table, std::string_view given, std::string_view target);

/// Throws InvalidCounts unless 0 <= successes <= trials and trials >= 1.
IntervalEstimate wilson_interval(std::int64_t successes, std::int64_t trials, double level = 0.95);

/// P(X >= successes) under Binomial(trials, p0), summed exactly.
TestResult binomial_test_one_tailed(std::int64_t successes, std::int64_t trials, double p0);

/// (sum over A - sum over B) / row total, in percentage points.
/// Throws OverlappingSets, EmptyCondition.
double probability_difference(const ContingencyTable& table, std::string_view given,
                              const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Share of the row falling into any of `cols`, with its count.
std::pair<std::int64_t, std::int64_t> row_share_counts(const ContingencyTable& table, std::string_view given,
                                                       const std::vector<std::string>& cols);

// ---- distributions ----------------------------------------------------------

struct ScoreSeries {
  std::string group;
  std::vector<double> values;
};

struct CumulativeCurve {
  std::string group;
  std::size_t n = 0;
  std::optional<std::vector<double>> fraction;  // absent when the group is empty
};

/// Fraction of each group's scores <= x at every grid point. Throws
/// InvalidArgument unless the grid is strictly increasing.
std::vector<CumulativeCurve> cumulative_frequency(std::span<const ScoreSeries> series, std::span<const double> grid);

struct GroupSummary {
  std::string group;
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;  // sample SD, only for n >= 2
};

std::vector<GroupSummary> group_mean_sd(std::span<const ScoreSeries> series);

}  // namespace uxfb::stats
