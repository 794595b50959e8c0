// Acceptance checks, one line per criterion. Exit status is the number of
// failed criteria (0 when everything passes).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "pipeline_fixture.hpp"
#include "uxfb/gbt.hpp"
#include "uxfb/multilabel.hpp"
#include "uxfb/stats.hpp"
#include "uxfb/summarize.hpp"
#include "uxfb/synth.hpp"

using namespace uxfb;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::vector<std::string> kRows = {"negative", "mixed", "positive"};

stats::ContingencyTable tutorial_table() {
  return stats::ContingencyTable::from_counts(kRows, stats::kNpsColumns, {{120, 52, 154}, {4, 7, 27}, {5, 13, 157}});
}

stats::ContingencyTable app_table() {
  return stats::ContingencyTable::from_counts(
      kRows, stats::kSatisfactionColumns,
      {{893, 826, 548, 539, 106}, {45, 66, 161, 345, 135}, {35, 3, 15, 232, 380}});
}

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.6g (want %.6g +/- %.3g)", what.c_str(), got, want, tol);
    expect(std::abs(got - want) <= tol, buf);
    notes_.push_back(buf);
  }
  void within(double got, double lo, double hi, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.6g (want [%.6g, %.6g])", what.c_str(), got, lo, hi);
    expect(got >= lo && got <= hi, buf);
    notes_.push_back(buf);
  }
  void note(const std::string& n) { notes_.push_back(n); }

  const std::vector<std::string>& failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<stats::Pair> pairs_of(const stats::ContingencyTable& t) {
  std::vector<stats::Pair> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.cols.size(); ++c)
      for (std::int64_t k = 0; k < t.counts[r][c]; ++k) out.emplace_back(t.rows[r], t.cols[c]);
  return out;
}

// ---------------------------------------------------------------------------

void criterion1(Check& c) {
  const auto t = tutorial_table();
  stats::TestResult r;
  double best = 1e9;
  for (int i = 0; i < 5; ++i) {
    const auto t0 = Clock::now();
    r = stats::chi_squared_test(t);
    best = std::min(best, seconds_since(t0));
  }
  c.near(r.statistic, 98.11, 0.02, "chi2");
  c.expect(r.df == 4, "df = " + std::to_string(r.df));
  c.within(r.p_value, 2.3e-20, 2.7e-20, "p");
  c.within(best * 1e3, 0, 1.0, "runtime ms");
}

void criterion2(Check& c) {
  const auto t = tutorial_table();
  c.near(stats::cramers_v(t), 0.3017, 0.0005, "V");
  stats::BootstrapOptions o;
  o.replicates = 10000;
  o.level = 0.95;
  o.seed = 42;
  const auto pairs = pairs_of(t);
  const auto t0 = Clock::now();
  const auto ci = stats::bootstrap_ci_cramers_v(pairs, kRows, stats::kNpsColumns, o);
  const double elapsed = seconds_since(t0);
  c.near(ci.lower, 0.26, 0.01, "CI lower");
  c.near(ci.upper, 0.35, 0.01, "CI upper");
  c.within(elapsed, 0, 5.0, "runtime s");
}

void criterion3(Check& c) {
  const auto t = tutorial_table();
  c.near(100 * stats::conditional_probability(t, "negative", "Promoter"), 47.24, 0.01, "Pr(Promoter|Negative) %");
  c.near(100 * stats::conditional_probability(t, "negative", "Detractor"), 36.81, 0.01, "Pr(Detractor|Negative) %");
  const auto a = stats::wilson_interval(154, 326, 0.95);
  c.near(100 * a.lower, 41.88, 0.01, "Wilson(154/326) lower %");
  c.near(100 * a.upper, 52.66, 0.01, "Wilson(154/326) upper %");
  const auto b = stats::wilson_interval(645, 2912, 0.95);
  c.near(100 * b.lower, 20.68, 0.01, "Wilson(645/2912) lower %");
  c.near(100 * b.upper, 23.69, 0.01, "Wilson(645/2912) upper %");
}

void criterion4(Check& c) {
  c.near(stats::binomial_test_one_tailed(154, 326, 0.5).p_value, 0.854, 0.002, "binomial p");
}

void criterion5(Check& c) {
  const auto t = app_table();
  const auto r = stats::chi_squared_test(t);
  c.near(r.statistic, 1920.1, 1.0, "chi2");
  c.expect(r.df == 8, "df = " + std::to_string(r.df));
  const auto [k, n] = stats::row_share_counts(t, "positive", {"Satisfied", "Very Satisfied"});
  c.near(100.0 * static_cast<double>(k) / static_cast<double>(n), 92.0, 0.1, "Pr(Sat or VerySat|Positive) %");
  const auto w = stats::wilson_interval(k, n, 0.95);
  c.near(100 * w.lower, 89.7, 0.1, "Wilson lower %");
  c.near(100 * w.upper, 93.9, 0.1, "Wilson upper %");
  c.near(stats::probability_difference(t, "negative", {"Very Dissatisfied", "Dissatisfied"},
                                       {"Satisfied", "Very Satisfied"}),
         36.88, 0.01, "satisfaction gap pp");
}

void criterion6(Check& c) {
  // 2,756 comments carrying 3,202 label instances: 575 with two labels,
  // 2,052 with one, 129 with none.
  const std::vector<std::pair<std::string, std::size_t>> counts = {
      {"Usability", 721}, {"Functionality", 606}, {"Error", 420},         {"Other", 352},
      {"Performance", 339}, {"General Feedback", 239}, {"Help", 207}, {"Visual Design", 114},
      {"Integration", 113}, {"Licensing", 91}};
  const std::vector<std::string> printed = {"26.16%", "21.99%", "15.24%", "12.77%", "12.30%",
                                            "8.67%",  "7.51%",  "4.14%",  "4.10%",  "3.30%"};
  std::vector<std::string> instances;
  for (const auto& [label, n] : counts) instances.insert(instances.end(), n, label);
  std::vector<LabelSet> sets;
  std::size_t lo = 0, hi = instances.size();
  for (int i = 0; i < 575; ++i) sets.push_back({instances[lo++], instances[--hi]});
  while (lo < hi) sets.push_back({instances[lo++]});
  while (sets.size() < 2756) sets.push_back({});
  std::vector<Comment> comments;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto cm = testing::comment("t" + std::to_string(i), "comment", sets[i]);
    comments.push_back(cm);
  }
  const Corpus corpus(comments, {}, default_taxonomy());
  const auto shares = label_shares(corpus);
  c.expect(shares.size() == 10, "ten labels");
  std::size_t matched = 0;
  for (std::size_t i = 0; i < shares.size() && i < printed.size(); ++i) {
    c.expect(shares[i].label == counts[i].first, "label order " + shares[i].label);
    c.expect(shares[i].count == counts[i].second, shares[i].label + " count");
    if (shares[i].percent_text() == printed[i]) ++matched;
    else c.expect(false, shares[i].label + ": " + shares[i].percent_text() + " vs " + printed[i]);
  }
  c.note(std::to_string(matched) + "/10 printed percentages matched");
}

// (a) signal recovery on synthetic comments
void criterion7a(Check& c) {
  const auto tax = default_taxonomy();
  const auto comments = synth::labeled_comments(500, 7, tax);
  EmbeddingOptions eo;
  eo.dim = 64;
  eo.bucket_count = 100000;
  const Embedder embedder(EmbeddingModel::subword(eo), PreprocessConfig{});
  std::vector<std::string> texts;
  std::vector<LabelSet> truth;
  for (const auto& cm : comments) {
    texts.push_back(cm.text);
    truth.push_back(cm.labels);
  }
  const auto vectors = embedder.embed_all(texts);
  Matrix x(vectors.size(), embedder.dim());
  for (std::size_t i = 0; i < vectors.size(); ++i)
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), x.row(i).begin());

  const auto folds = ml::stratified_kfold(truth, 5, 42);
  ml::TrainConfig tc;
  tc.shared.n_rounds = 30;
  tc.shared.max_depth = 3;
  std::vector<LabelSet> pred(truth.size());
  for (int f = 0; f < 5; ++f) {
    const auto tr = folds.training_rows(f);
    std::vector<LabelSet> y;
    for (auto r : tr) y.push_back(truth[r]);
    const auto model = ml::train_ovr(x.select_rows(tr), y, tax, embedder.fingerprint(), tc);
    for (auto r : folds.validation_rows(f)) pred[r] = ml::predict_labels(model, x.row(r), embedder.fingerprint()).labels;
  }
  const double model_f1 = ml::evaluate(pred, truth, tax).micro.f1;

  const std::vector<LabelSet> empty(truth.size());
  const double empty_f1 = ml::evaluate(empty, truth, tax).micro.f1;

  Rng rng(99);
  std::vector<LabelSet> random(truth.size());
  const auto names = tax.names();
  std::vector<double> thresholds;
  for (std::size_t l = 0; l < names.size(); ++l) thresholds.push_back(rng.uniform());
  for (auto& s : random)
    for (std::size_t l = 0; l < names.size(); ++l)
      if (rng.uniform() >= thresholds[l]) s.insert(names[l]);
  const double random_f1 = ml::evaluate(random, truth, tax).micro.f1;

  char buf[200];
  std::snprintf(buf, sizeof buf, "micro-F1 model %.3f, all-empty %.3f, random-threshold %.3f", model_f1, empty_f1,
                random_f1);
  c.note(buf);
  c.expect(model_f1 >= empty_f1 + 0.3, "model vs all-empty margin");
  c.expect(model_f1 >= random_f1 + 0.3, "model vs random-threshold margin");
}

// (b) evaluate() against brute-force confusion enumeration
void criterion7b(Check& c) {
  const TopicTaxonomy tax({{"A", ""}, {"B", ""}, {"C", ""}, {"D", ""}});
  const std::vector<std::string> labels = {"A", "B", "C", "D"};
  Rng rng(2024);
  int agree = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(10);
    std::vector<std::set<std::string>> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& l : labels) {
        if (rng.below(3) == 0) truth[i].insert(l);
        if (rng.below(3) == 0) pred[i].insert(l);
      }
    const std::vector<LabelSet> p(pred.begin(), pred.end()), y(truth.begin(), truth.end());
    const auto r = ml::evaluate(p, y, tax);
    const auto want = oracle::confusion(pred, truth, labels);
    bool ok = true;
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& m : r.per_label) {
      const auto& w = want.at(m.label);
      ok = ok && m.tp == w.tp && m.fp == w.fp && m.fn == w.fn &&
           std::abs(m.f1 - oracle::f1(w.tp, w.fp, w.fn)) < 1e-12;
      tp += w.tp;
      fp += w.fp;
      fn += w.fn;
    }
    ok = ok && std::abs(r.micro.f1 - oracle::f1(tp, fp, fn)) < 1e-12;
    agree += ok;
  }
  c.note(std::to_string(agree) + "/200 instances agree");
  c.expect(agree == 200, "evaluate disagrees with enumeration");
}

// (c) training loss never increases with gamma = alpha = 0
void criterion7c(Check& c) {
  Rng rng(77);
  int monotone = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 20 + rng.below(80), d = 1 + rng.below(6);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = rng.uniform() * 4 - 2;
      y[i] = rng.uniform() < 0.3 + 0.4 * (rows[i][0] > 0) ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
    if (std::count(y.begin(), y.end(), 0) == 0) y[0] = 0;
    gbt::Params p;
    p.n_rounds = 25;
    p.max_depth = 1 + static_cast<int>(rng.below(4));
    p.learning_rate = 0.1 + 0.9 * rng.uniform();
    p.l2_weight = rng.uniform() * 2;
    p.min_loss_reduction = 0;
    p.l1_weight = 0;
    p.min_child_weight = 0;
    const auto m = gbt::train_binary(Matrix::from_rows(rows), y, p);
    const auto curve = gbt::training_loss_curve(m);
    std::vector<double> margins(n, 0.0);
    bool ok = curve.size() == 25 && curve[0] <= std::log(2.0) + 1e-12;
    for (std::size_t i = 1; i < curve.size(); ++i) ok = ok && curve[i] <= curve[i - 1] + 1e-12;
    monotone += ok;
  }
  c.note(std::to_string(monotone) + "/20 loss curves non-increasing");
  c.expect(monotone == 20, "loss increased");
}

// (d) depth-1 single-round trainer against exhaustive split search
void criterion7d(Check& c) {
  Rng rng(4242);
  int agree = 0, tested = 0;
  while (tested < 50) {
    const std::size_t n = 2 + rng.below(19), d = 1 + rng.below(4);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = static_cast<double>(rng.below(8)) / 2;
      y[i] = static_cast<int>(rng.below(2));
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    ++tested;
    gbt::Params p;
    p.n_rounds = 1;
    p.max_depth = 1;
    p.learning_rate = 1.0;
    p.l2_weight = rng.uniform() * 2;
    p.l1_weight = tested % 3 == 0 ? rng.uniform() : 0.0;
    p.min_loss_reduction = tested % 4 == 0 ? rng.uniform() * 0.2 : 0.0;
    p.min_child_weight = 0;
    const auto m = gbt::train_binary(Matrix::from_rows(rows), y, p);
    const auto want = oracle::best_first_split(rows, y, p.l2_weight, p.l1_weight, p.min_loss_reduction, 0);
    const auto& nodes = m.trees.at(0).nodes;
    bool ok = nodes[0].is_leaf() == !want.found;
    if (ok && !want.found) ok = std::abs(nodes[0].weight - want.root_weight) < 1e-12;
    if (ok && want.found) {
      ok = std::abs(nodes[static_cast<std::size_t>(nodes[0].left)].weight - want.left_weight) < 1e-12 &&
           std::abs(nodes[static_cast<std::size_t>(nodes[0].right)].weight - want.right_weight) < 1e-12;
      if (want.runner_up < want.gain - 1e-12)
        ok = ok && nodes[0].feature == want.feature && nodes[0].threshold == want.threshold;
    }
    agree += ok;
  }
  c.note(std::to_string(agree) + "/50 trees match the exhaustive search");
  c.expect(agree == 50, "split mismatch");
}

void criterion7(Check& c) {
  const auto t0 = Clock::now();
  for (auto* part : {criterion7a, criterion7b, criterion7c, criterion7d}) {
    Check sub;
    part(sub);
    for (const auto& n : sub.notes()) c.note(n);
    for (const auto& f : sub.failures()) c.expect(false, f);
  }
  c.within(seconds_since(t0), 0, 60, "suite runtime s");
}

void criterion8(Check& c) {
  Rng rng(808);
  int ok_instances = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 10 + rng.below(190);
    const std::size_t labels = 2 + rng.below(8);
    std::vector<double> rate(labels);
    for (auto& r : rate) r = 0.02 + rng.uniform() * 0.5;
    std::vector<LabelSet> sets(n);
    for (auto& s : sets)
      for (std::size_t l = 0; l < labels; ++l)
        if (rng.uniform() < rate[l]) s.insert("L" + std::to_string(l));
    const int k = 2 + static_cast<int>(rng.below(std::min<std::size_t>(9, n - 1)));
    const auto folds = ml::stratified_kfold(sets, k, rng.next());
    std::map<std::string, std::vector<std::size_t>> per;
    std::map<std::string, std::size_t> freq;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& l : sets[i]) {
        auto& v = per[l];
        v.resize(static_cast<std::size_t>(k));
        ++v[static_cast<std::size_t>(folds.fold[i])];
        ++freq[l];
      }
    bool ok = folds.fold.size() == n;
    for (const auto& [l, v] : per) {
      const auto f = freq[l], kk = static_cast<std::size_t>(k);
      if (f < kk) continue;
      for (auto cnt : v) ok = ok && cnt >= f / kk && cnt <= (f + kk - 1) / kk;
    }
    ok_instances += ok;
  }
  c.note(std::to_string(ok_instances) + "/100 instances within [floor(f/k), ceil(f/k)]");
  c.expect(ok_instances == 100, "stratification bound violated");
}

// Citations of a clean draft corrupted one at a time, five ways each.
std::vector<summ::SummaryDraft> mutations(const summ::SummaryDraft& clean, const std::vector<Comment>& source) {
  std::vector<summ::SummaryDraft> out;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> sites;
  for (std::size_t a = 0; a < clean.categories.size(); ++a)
    for (std::size_t b = 0; b < clean.categories[a].attributes.size(); ++b)
      for (std::size_t k = 0; k < clean.categories[a].attributes[b].citations.size(); ++k) sites.emplace_back(a, b, k);
  for (int kind = 0; kind < 5 && out.size() < 100; ++kind)
    for (const auto& [a, b, k] : sites) {
      if (out.size() >= 100) break;
      auto d = clean;
      auto& cit = d.categories[a].attributes[b].citations[k];
      const auto text = cit.extract;
      switch (kind) {
        case 0: cit.extract = text + " zq"; break;                                         // trailing garbage
        case 1: cit.extract = text.substr(0, text.size() / 2) + "qx" + text.substr(text.size() / 2); break;
        case 2: cit.comment_id = "missing-" + cit.comment_id; break;                       // unknown id
        case 3: {                                                                           // another real comment
          for (const auto& s : source)
            if (s.id != cit.comment_id &&
                summ::normalize_for_match(s.working_text()).find(summ::normalize_for_match(text)) == std::string::npos) {
              cit.comment_id = s.id;
              break;
            }
          break;
        }
        default: cit.extract = "Nobody ever wrote this sentence " + std::to_string(k) + "."; break;
      }
      out.push_back(std::move(d));
    }
  return out;
}

void criterion9(Check& c) {
  summ::SummaryConfig cfg;
  {
    std::vector<Comment> nineteen;
    for (int i = 0; i < 19; ++i) nineteen.push_back(testing::comment("n" + std::to_string(i), "fine", {"Usability"}));
    const auto e = summ::eligible(nineteen, cfg);
    c.expect(!e.eligible, "19-comment product was eligible");
  }
  {
    std::vector<Comment> mix;
    for (int i = 0; i < 30; ++i) mix.push_back(testing::comment("u" + std::to_string(i), "menu", {"Usability"}));
    for (int i = 0; i < 3; ++i) mix.push_back(testing::comment("h" + std::to_string(i), "docs", {"Help"}));
    const auto e = summ::eligible(mix, cfg);
    bool help = false;
    for (const auto& cat : e.categories) help = help || cat.name == "Help";
    c.expect(e.category_threshold == 4, "threshold " + std::to_string(e.category_threshold));
    c.expect(!help, "3-comment category was included");
  }

  // A one-product deployment without survey responses keeps each report run cheap.
  testing::TempDir dir("acc9");
  auto config = testing::small_deployment(dir.path());
  {
    const auto corpus = pipeline::load_corpus(config);
    std::vector<Comment> portal;
    for (const auto& cm : corpus.comments())
      if (cm.product_id == "app-portal" && cm.label_source == LabelSource::Human) portal.push_back(cm);
    write_comments_file(config.paths.comments, portal);
    fs::remove(config.paths.responses);
  }
  const auto summarize = testing::run([&](auto io) { return pipeline::cmd_summarize(config, {}, io); });
  c.expect(summarize.code == 0, "summarize exit " + std::to_string(summarize.code) + ": " + summarize.err);
  const auto clean_report = testing::run([&](auto io) { return pipeline::cmd_report(config, io); });
  c.expect(clean_report.code == 0, "clean report exit " + std::to_string(clean_report.code));

  const auto path = config.paths.reports / "summaries" / "app-portal.json";
  const auto original = testing::read_file(path);
  auto doc = nlohmann::json::parse(original);
  const auto clean = summ::draft_from_json(doc.at("draft"));
  const auto comments = pipeline::load_corpus(config).comments();
  const auto muts = mutations(clean, comments);
  c.expect(muts.size() == 100, "built " + std::to_string(muts.size()) + " mutations");

  int caught = 0;
  for (const auto& m : muts) {
    const bool invalid = !summ::validate(m, comments, cfg).publishable(cfg.balance_tolerance);
    doc["draft"] = summ::to_json(m);
    testing::write_file(path, doc.dump(2));
    const auto r = testing::run([&](auto io) { return pipeline::cmd_report(config, io); });
    const auto md = testing::read_file(config.paths.reports / "report.md");
    const bool excluded = r.code == 5 && md.find("Summary withheld") != std::string::npos &&
                          md.find("### Summary") == std::string::npos;
    caught += invalid && excluded;
  }
  testing::write_file(path, original);
  c.note(std::to_string(caught) + "/" + std::to_string(muts.size()) + " mutations caught");
  c.expect(caught == 100, "mutations slipped through");
}

void criterion10(Check& c) {
  testing::TempDir a("acc10a"), b("acc10b");
  auto full_run = [](const fs::path& dir) {
    const auto config = testing::small_deployment(dir);
    std::vector<int> codes;
    codes.push_back(testing::run([&](auto io) { return pipeline::cmd_tune(config, io); }).code);
    codes.push_back(testing::run([&](auto io) { return pipeline::cmd_train(config, {}, io); }).code);
    codes.push_back(testing::run([&](auto io) { return pipeline::cmd_predict(config, io); }).code);
    codes.push_back(testing::run([&](auto io) { return pipeline::cmd_stats(config, {"all"}, io); }).code);
    codes.push_back(testing::run([&](auto io) { return pipeline::cmd_summarize(config, {}, io); }).code);
    codes.push_back(testing::run([&](auto io) { return pipeline::cmd_report(config, io); }).code);
    return codes;
  };
  const auto ca = full_run(a.path()), cb = full_run(b.path());
  c.expect(ca == std::vector<int>(6, 0) && cb == ca, "a pipeline step failed");

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a / "out/model"))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a.path()));
  std::sort(files.begin(), files.end());
  files.push_back("out/reports/stats_tutorial.json");
  files.push_back("out/reports/stats_app.json");
  files.push_back("out/reports/report.md");
  std::size_t identical = 0;
  for (const auto& f : files) {
    const bool both = fs::exists(a.path() / f) && fs::exists(b.path() / f);
    if (both && testing::read_file(a.path() / f) == testing::read_file(b.path() / f)) ++identical;
    else c.expect(false, f.string() + " differs");
  }
  c.note(std::to_string(identical) + "/" + std::to_string(files.size()) + " artifacts byte-identical");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void(Check&)>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    Check c;
    const auto t0 = Clock::now();
    try {
      run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const bool pass = c.failures().empty();
    failed += !pass;
    char head[64];
    std::snprintf(head, sizeof head, "%s criterion %d (%.2fs)", pass ? "PASS" : "FAIL", id, seconds_since(t0));
    std::cout << head;
    std::string sep = ": ";
    for (const auto& n : c.notes()) {
      std::cout << sep << n;
      sep = "; ";
    }
    std::cout << '\n';
    for (const auto& f : c.failures()) std::cout << "    failed: " << f << '\n';
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed;
}
