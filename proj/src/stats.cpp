#include "uxfb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "uxfb/error.hpp"
#include "uxfb/parallel.hpp"
#include "uxfb/rng.hpp"
#include "uxfb/specfun.hpp"

namespace uxfb::stats {

std::string_view to_string(NpsCategory c) {
  switch (c) {
    case NpsCategory::Detractor: return "Detractor";
    case NpsCategory::Passive: return "Passive";
    case NpsCategory::Promoter: return "Promoter";
  }
  return "?";
}

std::string_view to_string(TestMethod m) {
  return m == TestMethod::ChiSquared ? "chi_squared" : "binomial_one_tailed_upper";
}

std::string_view to_string(IntervalMethod m) { return m == IntervalMethod::Wilson ? "wilson" : "bootstrap_percentile"; }

NpsCategory nps_categorize(int rating) {
  if (rating < 0 || rating > 10) throw Error(ErrorKind::OutOfRange, "NPS rating " + std::to_string(rating));
  if (rating >= 9) return NpsCategory::Promoter;
  if (rating >= 7) return NpsCategory::Passive;
  return NpsCategory::Detractor;
}

double tutorial_quality_score(std::span<const std::optional<int>> items) {
  double sum = 0.0;
  int answered = 0;
  for (const auto& item : items) {
    if (!item) continue;
    if (*item < 0 || *item > 10) throw Error(ErrorKind::OutOfRange, "tutorial rating " + std::to_string(*item));
    sum += *item;
    ++answered;
  }
  if (answered == 0) throw Error(ErrorKind::AllMissing, "no tutorial quality item answered");
  return sum / answered;
}

double uxlite_score(int ease, int does_what) {
  if (ease < 1 || ease > 5 || does_what < 1 || does_what > 5)
    throw Error(ErrorKind::OutOfRange, "UX-Lite items must be in [1, 5]");
  return static_cast<double>((does_what - 1) + (ease - 1)) / 8.0 * 100.0;
}

const std::string& satisfaction_category(int rating) {
  if (rating < 1 || rating > 5) throw Error(ErrorKind::OutOfRange, "satisfaction rating " + std::to_string(rating));
  return kSatisfactionColumns[static_cast<std::size_t>(rating - 1)];
}

// ---------------------------------------------------------------------------

std::int64_t ContingencyTable::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::int64_t ContingencyTable::row_total(std::size_t r) const {
  return std::accumulate(counts[r].begin(), counts[r].end(), std::int64_t{0});
}

std::int64_t ContingencyTable::col_total(std::size_t c) const {
  std::int64_t t = 0;
  for (const auto& row : counts) t += row[c];
  return t;
}

namespace {

std::size_t find_name(const std::vector<std::string>& names, std::string_view name, const char* what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::UnknownCategory, std::string(what) + " '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::size_t ContingencyTable::row_index(std::string_view name) const { return find_name(rows, name, "row category"); }
std::size_t ContingencyTable::col_index(std::string_view name) const { return find_name(cols, name, "column category"); }

std::int64_t ContingencyTable::at(std::string_view row, std::string_view col) const {
  return counts[row_index(row)][col_index(col)];
}

ContingencyTable ContingencyTable::from_counts(std::vector<std::string> rows, std::vector<std::string> cols,
                                               std::vector<std::vector<std::int64_t>> counts) {
  if (counts.size() != rows.size()) throw Error(ErrorKind::DimensionMismatch, "row count differs from row labels");
  for (const auto& row : counts) {
    if (row.size() != cols.size()) throw Error(ErrorKind::DimensionMismatch, "column count differs from column labels");
    for (auto v : row)
      if (v < 0) throw Error(ErrorKind::InvalidCounts, "negative count in contingency table");
  }
  return ContingencyTable{std::move(rows), std::move(cols), std::move(counts)};
}

ContingencyTable build_contingency(std::span<const Pair> pairs, const std::vector<std::string>& rows,
                                   const std::vector<std::string>& cols) {
  ContingencyTable t{rows, cols, std::vector<std::vector<std::int64_t>>(rows.size(), std::vector<std::int64_t>(cols.size(), 0))};
  for (const auto& [r, c] : pairs) ++t.counts[t.row_index(r)][t.col_index(c)];
  return t;
}

// ---------------------------------------------------------------------------

namespace {

struct Reduced {
  std::vector<std::vector<double>> counts;
  std::vector<double> row_totals, col_totals;
  double n = 0.0;
  std::vector<std::string> warnings;
};

template <typename Count>
Reduced reduce(const std::vector<std::vector<Count>>& counts, const std::vector<std::string>* rows,
               const std::vector<std::string>* cols) {
  const std::size_t r = counts.size();
  const std::size_t c = r == 0 ? 0 : counts[0].size();
  std::vector<double> rt(r, 0.0), ct(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      rt[i] += static_cast<double>(counts[i][j]);
      ct[j] += static_cast<double>(counts[i][j]);
    }
  Reduced out;
  std::vector<std::size_t> keep_r, keep_c;
  for (std::size_t i = 0; i < r; ++i) {
    if (rt[i] > 0) keep_r.push_back(i);
    else if (rows) out.warnings.push_back("dropped all-zero row '" + (*rows)[i] + "'");
  }
  for (std::size_t j = 0; j < c; ++j) {
    if (ct[j] > 0) keep_c.push_back(j);
    else if (cols) out.warnings.push_back("dropped all-zero column '" + (*cols)[j] + "'");
  }
  for (auto i : keep_r) {
    std::vector<double> row;
    for (auto j : keep_c) row.push_back(static_cast<double>(counts[i][j]));
    out.counts.push_back(std::move(row));
    out.row_totals.push_back(rt[i]);
    out.n += rt[i];
  }
  for (auto j : keep_c) out.col_totals.push_back(ct[j]);
  return out;
}

bool degenerate(const Reduced& t) { return t.row_totals.size() < 2 || t.col_totals.size() < 2; }

double pearson(const Reduced& t) {
  double stat = 0.0;
  for (std::size_t i = 0; i < t.row_totals.size(); ++i)
    for (std::size_t j = 0; j < t.col_totals.size(); ++j) {
      const double e = t.row_totals[i] * t.col_totals[j] / t.n;
      const double d = t.counts[i][j] - e;
      stat += d * d / e;
    }
  return stat;
}

double v_of(const Reduced& t) {
  const double m = static_cast<double>(std::min(t.row_totals.size(), t.col_totals.size()) - 1);
  return std::min(1.0, std::sqrt(pearson(t) / (t.n * m)));
}

}  // namespace

TestResult chi_squared_test(const ContingencyTable& table) {
  auto t = reduce(table.counts, &table.rows, &table.cols);
  if (degenerate(t))
    throw Error(ErrorKind::DegenerateTable, "chi-squared test needs at least two non-empty rows and columns");
  TestResult result;
  result.method = TestMethod::ChiSquared;
  result.statistic = pearson(t);
  result.df = static_cast<int>((t.row_totals.size() - 1) * (t.col_totals.size() - 1));
  result.p_value = specfun::chi_squared_sf(result.statistic, result.df);
  result.warnings = std::move(t.warnings);
  return result;
}

double cramers_v(const ContingencyTable& table) {
  const auto t = reduce(table.counts, &table.rows, &table.cols);
  if (degenerate(t))
    throw Error(ErrorKind::DegenerateTable, "Cramer's V needs at least two non-empty rows and columns");
  return v_of(t);
}

namespace {

// Type 7 sample quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

IntervalEstimate bootstrap_ci_cramers_v(std::span<const Pair> pairs, const std::vector<std::string>& rows,
                                        const std::vector<std::string>& cols, const BootstrapOptions& options) {
  if (options.replicates < 1) throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least one replicate");
  if (!(options.level > 0.0 && options.level < 1.0))
    throw Error(ErrorKind::InvalidArgument, "confidence level must lie in (0, 1)");
  if (pairs.empty()) throw Error(ErrorKind::DegenerateTable, "bootstrap needs at least one pair");

  const auto table = build_contingency(pairs, rows, cols);
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(pairs.size());
  for (const auto& [r, c] : pairs) cells.emplace_back(table.row_index(r), table.col_index(c));

  IntervalEstimate out;
  out.method = IntervalMethod::BootstrapPercentile;
  out.level = options.level;
  const auto plug_in = reduce(table.counts, nullptr, nullptr);
  out.point = degenerate(plug_in) ? std::nan("") : v_of(plug_in);

  std::vector<double> values(options.replicates);
  std::vector<int> redraws(options.replicates, 0);
  std::vector<char> failed(options.replicates, 0);
  const auto n = cells.size();
  parallel_for(options.replicates, options.jobs, [&](std::size_t rep) {
    std::vector<std::vector<std::int64_t>> counts(rows.size(), std::vector<std::int64_t>(cols.size(), 0));
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
      Rng rng(derive_seed({options.seed, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(attempt)}));
      for (auto& row : counts) std::fill(row.begin(), row.end(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& [r, c] = cells[static_cast<std::size_t>(rng.below(n))];
        ++counts[r][c];
      }
      const auto t = reduce(counts, nullptr, nullptr);
      if (!degenerate(t)) {
        values[rep] = v_of(t);
        redraws[rep] = attempt;
        return;
      }
    }
    failed[rep] = 1;
  });
  if (std::find(failed.begin(), failed.end(), 1) != failed.end())
    throw Error(ErrorKind::DegenerateTable, "bootstrap replicate still degenerate after " +
                                                std::to_string(options.max_attempts) + " redraws");
  out.redrawn = static_cast<std::size_t>(std::accumulate(redraws.begin(), redraws.end(), 0L));
  if (out.redrawn > 0) out.warnings.push_back("redrew " + std::to_string(out.redrawn) + " degenerate replicates");
  if (options.replicates < 1000)
    out.warnings.push_back("TooFewReplicates: " + std::to_string(options.replicates) + " bootstrap replicates (< 1000)");

  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - options.level;
  out.lower = quantile_sorted(values, alpha / 2.0);
  out.upper = quantile_sorted(values, 1.0 - alpha / 2.0);
  return out;
}

double conditional_probability(const ContingencyTable& table, std::string_view given, std::string_view target) {
  const auto r = table.row_index(given);
  const auto c = table.col_index(target);
  const auto total = table.row_total(r);
  if (total == 0) throw Error(ErrorKind::EmptyCondition, "no observations for '" + std::string(given) + "'");
  return static_cast<double>(table.counts[r][c]) / static_cast<double>(total);
}

IntervalEstimate wilson_interval(std::int64_t successes, std::int64_t trials, double level) {
  if (trials < 1 || successes < 0 || successes > trials)
    throw Error(ErrorKind::InvalidCounts, "Wilson interval needs 0 <= successes <= trials and trials >= 1");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "confidence level must lie in (0, 1)");
  const double z = specfun::normal_quantile(0.5 + level / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  IntervalEstimate out;
  out.method = IntervalMethod::Wilson;
  out.level = level;
  out.point = p;
  out.lower = successes == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
  out.upper = successes == trials ? 1.0 : std::clamp(center + half, p, 1.0);
  return out;
}

TestResult binomial_test_one_tailed(std::int64_t successes, std::int64_t trials, double p0) {
  TestResult out;
  out.method = TestMethod::BinomialOneTailedUpper;
  out.statistic = static_cast<double>(successes);
  out.df = 0;
  out.p_value = specfun::binomial_upper_tail(successes, trials, p0);
  return out;
}

std::pair<std::int64_t, std::int64_t> row_share_counts(const ContingencyTable& table, std::string_view given,
                                                       const std::vector<std::string>& cols) {
  const auto r = table.row_index(given);
  std::int64_t hit = 0;
  for (const auto& c : std::set<std::string>(cols.begin(), cols.end())) hit += table.counts[r][table.col_index(c)];
  return {hit, table.row_total(r)};
}

double probability_difference(const ContingencyTable& table, std::string_view given,
                              const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end())
      throw Error(ErrorKind::OverlappingSets, "category '" + x + "' appears in both sets");
  const auto [sa, total] = row_share_counts(table, given, a);
  const auto sb = row_share_counts(table, given, b).first;
  if (total == 0) throw Error(ErrorKind::EmptyCondition, "no observations for '" + std::string(given) + "'");
  return static_cast<double>(sa - sb) / static_cast<double>(total) * 100.0;
}

// ---------------------------------------------------------------------------

std::vector<CumulativeCurve> cumulative_frequency(std::span<const ScoreSeries> series, std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorKind::InvalidArgument, "cumulative grid must be strictly increasing");
  std::vector<CumulativeCurve> out;
  for (const auto& s : series) {
    CumulativeCurve curve{s.group, s.values.size(), std::nullopt};
    if (!s.values.empty()) {
      auto sorted = s.values;
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> fraction;
      fraction.reserve(grid.size());
      for (double x : grid) {
        const auto le = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
        fraction.push_back(static_cast<double>(le) / static_cast<double>(sorted.size()));
      }
      curve.fraction = std::move(fraction);
    }
    out.push_back(std::move(curve));
  }
  return out;
}

std::vector<GroupSummary> group_mean_sd(std::span<const ScoreSeries> series) {
  std::vector<GroupSummary> out;
  for (const auto& s : series) {
    GroupSummary g{s.group, s.values.size(), std::nullopt, std::nullopt};
    if (!s.values.empty()) {
      const double n = static_cast<double>(s.values.size());
      const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
      g.mean = mean;
      if (s.values.size() >= 2) {
        double ss = 0.0;
        for (double v : s.values) ss += (v - mean) * (v - mean);
        g.sd = std::sqrt(ss / (n - 1.0));
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace uxfb::stats
