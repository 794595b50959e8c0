#include "uxfb/stats_report.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "uxfb/error.hpp"

namespace uxfb::stats {

using nlohmann::json;

namespace {

std::vector<double> default_grid(double step, double max) {
  std::vector<double> grid;
  for (int i = 0; i * step <= max + 1e-9; ++i) grid.push_back(i * step);
  return grid;
}

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pct(double share) { return fmt("%.2f%%", share * 100.0); }

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> sentiment_rows() {
  std::vector<std::string> rows;
  for (auto s : kSentimentRows) rows.emplace_back(to_string(s));
  return rows;
}

}  // namespace

SurveyReport analyze_survey(const Corpus& corpus, SurveyKind kind, const ReportConfig& config) {
  SurveyReport report;
  report.kind = kind;
  const bool tutorial = kind == SurveyKind::Tutorial;
  const auto rows = sentiment_rows();
  const auto& cols = tutorial ? kNpsColumns : kSatisfactionColumns;
  const auto metric_key = tutorial ? question::kNps : question::kPsat;

  std::map<std::string, ScoreSeries> scores, lengths;
  for (const auto& r : rows) {
    scores[r] = {r, {}};
    lengths[r] = {r, {}};
  }
  ScoreSeries all_scores{"All respondents", {}};
  std::vector<Pair> pairs;

  for (const auto& resp : corpus.responses()) {
    if (resp.kind != kind) continue;
    ++report.responses;

    std::optional<double> score;
    if (tutorial) {
      std::vector<std::optional<int>> items;
      for (auto key : question::kTutorialQuality) items.push_back(resp.answer(key));
      if (std::any_of(items.begin(), items.end(), [](const auto& v) { return v.has_value(); }))
        score = tutorial_quality_score(items);
    } else {
      const auto ease = resp.answer(question::kUxLiteEase);
      const auto does = resp.answer(question::kUxLiteDoesWhat);
      if (ease && does) score = uxlite_score(*ease, *does);
    }
    if (score) all_scores.values.push_back(*score);

    if (!resp.comment_id) continue;
    const Comment* comment = corpus.find(*resp.comment_id);
    if (!comment || !comment->sentiment) continue;
    ++report.with_comment;
    const std::string group(to_string(*comment->sentiment));
    if (score) scores[group].values.push_back(*score);
    lengths[group].values.push_back(static_cast<double>(utf8_length(comment->text)));
    if (const auto metric = resp.answer(metric_key)) {
      pairs.emplace_back(group, tutorial ? std::string(to_string(nps_categorize(*metric))) : satisfaction_category(*metric));
    }
  }
  if (report.responses == 0)
    throw Error(ErrorKind::NoResponses, std::string("no ") + std::string(to_string(kind)) + " survey responses");

  report.table = build_contingency(pairs, rows, cols);
  try {
    report.chi_squared = chi_squared_test(report.table);
    report.cramers_v = cramers_v(report.table);
    auto boot = config.bootstrap;
    boot.level = config.level;
    report.cramers_v_ci = bootstrap_ci_cramers_v(pairs, rows, cols, boot);
    for (const auto& w : report.chi_squared->warnings) report.warnings.push_back(w);
    for (const auto& w : report.cramers_v_ci->warnings) report.warnings.push_back(w);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateTable) throw;
    report.warnings.push_back(std::string("association statistics skipped: ") + e.what());
  }

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto total = report.table.row_total(r);
    if (total == 0) continue;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto count = report.table.counts[r][c];
      report.conditionals.push_back({rows[r], cols[c], count, total, wilson_interval(count, total, config.level)});
    }
  }

  auto add_share = [&](const std::string& given, std::vector<std::string> cats) {
    const auto [count, total] = row_share_counts(report.table, given, cats);
    if (total > 0) report.shares.push_back({given, std::move(cats), count, total, wilson_interval(count, total, config.level)});
  };

  const std::string negative(to_string(Sentiment::Negative));
  if (tutorial) {
    const auto promoters = report.table.at(negative, "Promoter");
    const auto total = report.table.row_total(report.table.row_index(negative));
    report.binomial_hypothesis = "Pr(Promoter | Negative) > 0.5";
    if (total > 0) report.binomial = binomial_test_one_tailed(promoters, total, 0.5);
    report.score_name = "tutorial quality score";
    report.grid = config.tutorial_grid.empty() ? default_grid(0.5, 10.0) : config.tutorial_grid;
  } else {
    const std::vector<std::string> dissatisfied = {"Very Dissatisfied", "Dissatisfied"};
    const std::vector<std::string> satisfied = {"Satisfied", "Very Satisfied"};
    for (const auto& r : rows) {
      add_share(r, satisfied);
      add_share(r, dissatisfied);
      if (report.table.row_total(report.table.row_index(r)) > 0)
        report.differences.push_back({r, dissatisfied, satisfied, probability_difference(report.table, r, dissatisfied, satisfied)});
    }
    const auto d = row_share_counts(report.table, negative, dissatisfied).first;
    const auto s = row_share_counts(report.table, negative, satisfied).first;
    report.binomial_hypothesis = "Pr(dissatisfied | Negative, dissatisfied or satisfied) > 0.5";
    if (d + s > 0) report.binomial = binomial_test_one_tailed(d, d + s, 0.5);
    report.score_name = "UX-Lite score";
    report.grid = config.uxlite_grid.empty() ? default_grid(12.5, 100.0) : config.uxlite_grid;
  }

  std::vector<ScoreSeries> series;
  for (const auto& r : rows) series.push_back(scores[r]);
  series.push_back(all_scores);
  report.curves = cumulative_frequency(series, report.grid);
  report.score_summary = group_mean_sd(series);
  std::vector<ScoreSeries> length_series;
  for (const auto& r : rows) length_series.push_back(lengths[r]);
  report.length_summary = group_mean_sd(length_series);
  for (const auto& c : report.curves)
    if (!c.fraction) report.warnings.push_back("no " + report.score_name + " values for group '" + c.group + "'");
  return report;
}

// ---------------------------------------------------------------------------

namespace {

json interval_json(const IntervalEstimate& e) {
  json j = {{"point", e.point},   {"lower", e.lower},
            {"upper", e.upper},   {"level", e.level},
            {"method", std::string(to_string(e.method))}};
  if (e.method == IntervalMethod::BootstrapPercentile) j["redrawn"] = e.redrawn;
  return j;
}

json test_json(const TestResult& t) {
  return {{"statistic", t.statistic},
          {"df", t.df},
          {"p_value", t.p_value},
          {"method", std::string(to_string(t.method))}};
}

json summary_json(const std::vector<GroupSummary>& groups) {
  json out = json::array();
  for (const auto& g : groups) {
    json j = {{"group", g.group}, {"n", g.n}, {"mean", nullptr}, {"sd", nullptr}};
    if (g.mean) j["mean"] = *g.mean;
    if (g.sd) j["sd"] = *g.sd;
    out.push_back(j);
  }
  return out;
}

std::string summary_cell(const GroupSummary& g) {
  if (!g.mean) return "n/a";
  return fmt("%.2f", *g.mean) + (g.sd ? " (" + fmt("%.2f", *g.sd) + ")" : "");
}

}  // namespace

json to_json(const SurveyReport& r) {
  json j;
  j["survey"] = std::string(to_string(r.kind));
  j["responses"] = r.responses;
  j["responses_with_comment"] = r.with_comment;
  j["table"] = {{"rows", r.table.rows}, {"cols", r.table.cols}, {"counts", r.table.counts}};
  j["chi_squared"] = r.chi_squared ? test_json(*r.chi_squared) : json(nullptr);
  j["cramers_v"] = r.cramers_v ? json(*r.cramers_v) : json(nullptr);
  j["cramers_v_ci"] = r.cramers_v_ci ? interval_json(*r.cramers_v_ci) : json(nullptr);
  j["conditional_probabilities"] = json::array();
  for (const auto& c : r.conditionals)
    j["conditional_probabilities"].push_back(
        {{"given", c.given}, {"target", c.target}, {"count", c.count}, {"total", c.total}, {"estimate", interval_json(c.estimate)}});
  j["binomial_test"] = r.binomial ? test_json(*r.binomial) : json(nullptr);
  if (r.binomial) j["binomial_test"]["hypothesis"] = r.binomial_hypothesis;
  j["shares"] = json::array();
  for (const auto& s : r.shares)
    j["shares"].push_back({{"given", s.given},
                           {"categories", s.categories},
                           {"count", s.count},
                           {"total", s.total},
                           {"estimate", interval_json(s.estimate)}});
  j["differences"] = json::array();
  for (const auto& d : r.differences)
    j["differences"].push_back({{"given", d.given}, {"a", d.a}, {"b", d.b}, {"percentage_points", d.percentage_points}});
  j["score"] = {{"name", r.score_name}, {"grid", r.grid}, {"curves", json::array()}, {"summary", summary_json(r.score_summary)}};
  for (const auto& c : r.curves)
    j["score"]["curves"].push_back({{"group", c.group}, {"n", c.n}, {"cumulative_fraction", c.fraction ? json(*c.fraction) : json(nullptr)}});
  j["comment_length"] = summary_json(r.length_summary);
  j["warnings"] = r.warnings;
  return j;
}

std::string to_markdown(const SurveyReport& r) {
  std::ostringstream out;
  const bool tutorial = r.kind == SurveyKind::Tutorial;
  out << "## " << (tutorial ? "Tutorial survey" : "Application survey") << "\n\n";
  out << r.responses << " responses, " << r.with_comment << " with a sentiment-classified comment.\n\n";

  out << "| Sentiment |";
  for (const auto& c : r.table.cols) out << ' ' << c << " |";
  out << " Total |\n|---|";
  for (std::size_t c = 0; c < r.table.cols.size(); ++c) out << "---:|";
  out << "---:|\n";
  for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
    out << "| " << r.table.rows[i] << " |";
    for (auto v : r.table.counts[i]) out << ' ' << v << " |";
    out << ' ' << r.table.row_total(i) << " |\n";
  }
  out << '\n';

  if (r.chi_squared) {
    out << "- Chi-squared: " << fmt("%.2f", r.chi_squared->statistic) << ", df = " << r.chi_squared->df
        << ", p = " << fmt("%.3g", r.chi_squared->p_value) << '\n';
  }
  if (r.cramers_v) {
    out << "- Cramer's V: " << fmt("%.4f", *r.cramers_v);
    if (r.cramers_v_ci)
      out << " (" << fmt("%.0f", r.cramers_v_ci->level * 100) << "% bootstrap CI [" << fmt("%.4f", r.cramers_v_ci->lower)
          << "; " << fmt("%.4f", r.cramers_v_ci->upper) << "])";
    out << '\n';
  }
  if (r.binomial)
    out << "- One-tailed binomial test, " << r.binomial_hypothesis << ": k = " << fmt("%.0f", r.binomial->statistic)
        << ", p = " << fmt("%.3f", r.binomial->p_value) << '\n';
  for (const auto& d : r.differences)
    out << "- Pr(" << join(d.a, " or ") << " | " << d.given << ") - Pr(" << join(d.b, " or ") << " | " << d.given
        << ") = " << fmt("%.2f", d.percentage_points) << " percentage points\n";
  for (const auto& s : r.shares)
    out << "- Pr(" << join(s.categories, " or ") << " | " << s.given << ") = " << pct(s.estimate.point) << " ["
        << pct(s.estimate.lower) << "; " << pct(s.estimate.upper) << "]\n";
  out << '\n';

  out << "### Conditional probabilities\n\n| Given | Target | Probability | Wilson CI |\n|---|---|---:|---|\n";
  for (const auto& c : r.conditionals)
    out << "| " << c.given << " | " << c.target << " | " << pct(c.estimate.point) << " | [" << pct(c.estimate.lower)
        << "; " << pct(c.estimate.upper) << "] |\n";
  out << '\n';

  out << "### " << r.score_name << " and comment length\n\n| Group | n | Score mean (SD) | Comment length mean (SD) |\n|---|---:|---:|---:|\n";
  for (std::size_t i = 0; i < r.score_summary.size(); ++i) {
    const auto& g = r.score_summary[i];
    out << "| " << g.group << " | " << g.n << " | " << summary_cell(g) << " | "
        << (i < r.length_summary.size() ? summary_cell(r.length_summary[i]) : std::string("")) << " |\n";
  }
  if (!r.warnings.empty()) {
    out << "\nWarnings:\n";
    for (const auto& w : r.warnings) out << "- " << w << '\n';
  }
  return out.str();
}

std::string curves_csv(const SurveyReport& r) {
  std::ostringstream out;
  out << "group,x,cumulative_fraction\n";
  for (const auto& c : r.curves) {
    if (!c.fraction) continue;
    for (std::size_t i = 0; i < r.grid.size(); ++i)
      out << c.group << ',' << fmt("%g", r.grid[i]) << ',' << fmt("%.6f", (*c.fraction)[i]) << '\n';
  }
  return out.str();
}

}  // namespace uxfb::stats
