#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "uxfb/error.hpp"
#include "uxfb/multilabel.hpp"
#include "uxfb/synth.hpp"

using namespace uxfb;

namespace {

TopicTaxonomy abc() { return TopicTaxonomy({{"A", ""}, {"B", ""}, {"C", ""}}); }

gbt::Model constant_head(double p) {
  gbt::Model m;
  m.n_features = 1;
  m.base_score = std::log(p / (1 - p));
  return m;
}

ml::OneVsRestModel constant_model(const std::vector<std::pair<std::string, double>>& probs) {
  ml::OneVsRestModel m;
  m.fingerprint = "fp";
  for (const auto& [label, p] : probs) m.heads.push_back({label, constant_head(p), 0.5, false, 1});
  return m;
}

// Label A iff feature 0 > 0; label B iff feature 1 > 0.
struct Separable {
  Matrix x;
  std::vector<LabelSet> y;
};

Separable separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  Separable s;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform() * 2 - 1, b = rng.uniform() * 2 - 1, c = rng.uniform();
    rows.push_back({a, b, c});
    LabelSet l;
    if (a > 0) l.insert("A");
    if (b > 0) l.insert("B");
    s.y.push_back(l);
  }
  s.x = Matrix::from_rows(rows);
  return s;
}

ml::TrainConfig quick(int rounds = 20, int depth = 2) {
  ml::TrainConfig c;
  c.shared.n_rounds = rounds;
  c.shared.max_depth = depth;
  return c;
}

bool within_bounds(const std::vector<LabelSet>& sets, const ml::FoldAssignment& folds) {
  std::map<std::string, std::vector<std::size_t>> per;
  std::map<std::string, std::size_t> freq;
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (const auto& l : sets[i]) {
      auto& v = per[l];
      v.resize(static_cast<std::size_t>(folds.k));
      ++v[static_cast<std::size_t>(folds.fold[i])];
      ++freq[l];
    }
  for (const auto& [l, counts] : per) {
    const auto f = freq[l];
    if (f < static_cast<std::size_t>(folds.k)) continue;
    const auto lo = f / static_cast<std::size_t>(folds.k);
    const auto hi = (f + static_cast<std::size_t>(folds.k) - 1) / static_cast<std::size_t>(folds.k);
    for (auto c : counts)
      if (c < lo || c > hi) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stratified k-fold") {
  SUBCASE("label with exactly k examples lands once per fold") {
    std::vector<LabelSet> sets(12);
    for (int i : {1, 4, 7, 10}) sets[static_cast<std::size_t>(i)] = {"L"};
    const auto folds = ml::stratified_kfold(sets, 4, 3);
    std::vector<int> per(4);
    for (int i : {1, 4, 7, 10}) ++per[static_cast<std::size_t>(folds.fold[static_cast<std::size_t>(i)])];
    CHECK(per == std::vector<int>{1, 1, 1, 1});
  }
  SUBCASE("identical label sets reduce to plain k-fold") {
    const std::vector<LabelSet> sets(10, LabelSet{"A"});
    const auto folds = ml::stratified_kfold(sets, 5, 1);
    CHECK(folds.fold_sizes() == std::vector<std::size_t>{2, 2, 2, 2, 2});
  }
  SUBCASE("k out of range") {
    const std::vector<LabelSet> sets(3, LabelSet{"A"});
    CHECK_THROWS(ml::stratified_kfold(sets, 4, 1));
    CHECK_THROWS(ml::stratified_kfold(sets, 1, 1));
  }
  SUBCASE("bounds hold on random instances and the seed is honoured") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      std::vector<LabelSet> sets(30 + rng.below(40));
      for (auto& s : sets)
        for (const char* l : {"A", "B", "C", "D"})
          if (rng.uniform() < 0.3) s.insert(l);
      const int k = 2 + static_cast<int>(rng.below(4));
      const auto folds = ml::stratified_kfold(sets, k, 9);
      CHECK(within_bounds(sets, folds));
      CHECK(folds.fold == ml::stratified_kfold(sets, k, 9).fold);
    }
  }
  SUBCASE("training and validation rows partition the data") {
    const std::vector<LabelSet> sets(9, LabelSet{"A"});
    const auto folds = ml::stratified_kfold(sets, 3, 2);
    for (int f = 0; f < 3; ++f) CHECK(folds.training_rows(f).size() + folds.validation_rows(f).size() == 9);
  }
}

TEST_CASE("evaluate") {
  const auto tax = TopicTaxonomy({{"A", ""}, {"B", ""}});
  SUBCASE("hand-computed counts") {
    // A: TP 2, FP 1, FN 1. B: TP 1, FN 1.
    const std::vector<LabelSet> truth = {{"A"}, {"A", "B"}, {"A"}, {"B"}, {}};
    const std::vector<LabelSet> pred = {{"A"}, {"A", "B"}, {}, {}, {"A"}};
    const auto r = ml::evaluate(pred, truth, tax);
    CHECK(r.per_label[0].precision == doctest::Approx(2.0 / 3));
    CHECK(r.per_label[0].recall == doctest::Approx(2.0 / 3));
    CHECK(r.per_label[0].f1 == doctest::Approx(2.0 / 3));
    CHECK(r.per_label[1].precision == doctest::Approx(1.0));
    CHECK(r.per_label[1].recall == doctest::Approx(0.5));
    CHECK(r.per_label[1].f1 == doctest::Approx(2.0 / 3));
    CHECK(r.micro.precision == doctest::Approx(0.75));
    CHECK(r.micro.recall == doctest::Approx(0.6));
    CHECK(r.micro.f1 == doctest::Approx(2.0 / 3));
  }
  SUBCASE("perfect predictions") {
    const std::vector<LabelSet> truth = {{"A"}, {"B"}, {"A", "B"}};
    const auto r = ml::evaluate(truth, truth, tax);
    for (const auto& l : r.per_label) CHECK(l.f1 == 1.0);
    CHECK(r.micro.f1 == 1.0);
  }
  SUBCASE("length and label checks") {
    const std::vector<LabelSet> one = {{"A"}};
    const std::vector<LabelSet> two = {{"A"}, {"B"}};
    CHECK_THROWS_AS(ml::evaluate(one, two, tax), Error);
    const std::vector<LabelSet> foo = {{"Foo"}};
    CHECK_THROWS_AS(ml::evaluate(foo, one, tax), Error);
  }
  SUBCASE("undefined precision is flagged") {
    const std::vector<LabelSet> truth = {{"A"}, {"B"}};
    const std::vector<LabelSet> pred = {{"A"}, {}};
    const auto r = ml::evaluate(pred, truth, tax);
    CHECK(r.per_label[1].precision_undefined);
    CHECK(!r.per_label[1].recall_undefined);
  }
  SUBCASE("brute-force agreement") {
    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 1 + rng.below(10);
      std::vector<LabelSet> truth(n), pred(n);
      for (std::size_t i = 0; i < n; ++i)
        for (const char* l : {"A", "B"}) {
          if (rng.below(2)) truth[i].insert(l);
          if (rng.below(2)) pred[i].insert(l);
        }
      const auto r = ml::evaluate(pred, truth, tax);
      const auto want = oracle::confusion({pred.begin(), pred.end()}, {truth.begin(), truth.end()}, {"A", "B"});
      std::size_t tp = 0, fp = 0, fn = 0;
      for (const auto& l : r.per_label) {
        CHECK(l.tp == want.at(l.label).tp);
        CHECK(l.fp == want.at(l.label).fp);
        CHECK(l.fn == want.at(l.label).fn);
        tp += l.tp;
        fp += l.fp;
        fn += l.fn;
      }
      CHECK(r.micro.f1 == doctest::Approx(oracle::f1(tp, fp, fn)));
    }
  }
}

TEST_CASE("report layout") {
  ml::EvalReport r;
  ml::LabelMetrics l;
  l.label = "Licensing";
  l.count = 324;
  l.share = 0.037;
  l.precision = 0.87;
  l.recall = 0.78;
  l.f1 = 0.82;
  r.per_label.push_back(l);
  const auto csv = ml::to_csv(r);
  CHECK(csv.find("label,count,share,precision,recall,f1\n") == 0);
  CHECK(csv.find("Licensing,324,3.70%,0.87,0.78,0.82\n") != std::string::npos);
  CHECK(ml::to_markdown(r).find("| Licensing | 324 | 3.70% | 0.87 | 0.78 | 0.82 |") != std::string::npos);
}

TEST_CASE("predict_labels thresholds") {
  auto m = constant_model({{"A", 0.9}, {"B", 0.6}, {"C", 0.1}});
  const std::vector<double> x = {0.0};
  CHECK(ml::predict_labels(m, x, "fp").labels == LabelSet{"A", "B"});
  for (const char* l : {"A", "B", "C"}) ml::set_threshold(m, l, 0.95);
  CHECK(ml::predict_labels(m, x, "fp").labels.empty());
  const double pb = ml::predict_labels(m, x, "fp").probabilities.at("B");
  ml::set_threshold(m, "B", pb);
  CHECK(ml::predict_labels(m, x, "fp").labels == LabelSet{"B"});
  CHECK_THROWS(ml::set_threshold(m, "A", 1.0));
  CHECK_THROWS(ml::set_threshold(m, "Z", 0.5));
  CHECK_THROWS_AS(ml::predict_labels(m, x, "other"), Error);
}

TEST_CASE("train_ovr") {
  SUBCASE("separable labels are recovered on held-out points") {
    const auto train = separable(200, 1), test = separable(100, 2);
    const auto m = ml::train_ovr(train.x, train.y, abc(), "fp", quick());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.y.size(); ++i) {
      auto want = test.y[i];
      if (ml::predict_labels(m, test.x.row(i), "fp").labels == want) ++correct;
    }
    CHECK(correct >= 95);
    const auto* c = m.head("C");
    REQUIRE(c);
    CHECK(c->never_predict);
    CHECK(!m.warnings.empty());
  }
  SUBCASE("a single multi-label example is recalled") {
    const Matrix x = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}});
    const std::vector<LabelSet> y = {{"A", "B"}, {}, {"C"}};
    auto tc = quick(10, 1);
    tc.shared.min_child_weight = 0;
    const auto m = ml::train_ovr(x, y, abc(), "fp", tc);
    CHECK(ml::predict_labels(m, x.row(0), "fp").labels == LabelSet{"A", "B"});
  }
  SUBCASE("jobs do not change the model") {
    const auto d = separable(80, 3);
    auto c1 = quick(), c3 = quick();
    c3.jobs = 3;
    c1.tune_thresholds = c3.tune_thresholds = true;
    c1.threshold_folds = c3.threshold_folds = 3;
    const auto a = ml::train_ovr(d.x, d.y, abc(), "fp", c1);
    const auto b = ml::train_ovr(d.x, d.y, abc(), "fp", c3);
    for (std::size_t i = 0; i < a.heads.size(); ++i) {
      CHECK(a.heads[i].model.trees == b.heads[i].model.trees);
      CHECK(a.heads[i].threshold == b.heads[i].threshold);
    }
  }
}

TEST_CASE("grid search") {
  const auto d = separable(90, 4);
  const std::vector<std::string> labels = {"A", "B", "C"};
  SUBCASE("single cell") {
    ml::ParamGrid g{{0.3}, {2}, {0.0}, {1.0}, {0.0}, {1.0}, {10}};
    const auto r = ml::grid_search(d.x, d.y, labels, g, 3, 1);
    CHECK(r.cells.size() == 1);
    CHECK(r.best == g.cells()[0]);
    CHECK(r.excluded_labels == std::vector<std::string>{"C"});
  }
  SUBCASE("zero rounds loses") {
    ml::ParamGrid g{{0.3}, {2}, {0.0}, {1.0}, {0.0}, {1.0}, {0, 15}};
    const auto r = ml::grid_search(d.x, d.y, labels, g, 3, 1);
    CHECK(r.best.n_rounds == 15);
    CHECK(r.cells[0].mean_micro_f1 < r.cells[1].mean_micro_f1);
  }
  SUBCASE("ties go to fewer rounds") {
    // huge L2 keeps every model at 0.5, so both cells score the same
    ml::ParamGrid g{{0.3}, {2}, {0.0}, {1e12}, {0.0}, {1.0}, {5, 10}};
    const auto r = ml::grid_search(d.x, d.y, labels, g, 3, 1);
    CHECK(r.cells[0].mean_micro_f1 == r.cells[1].mean_micro_f1);
    CHECK(r.best.n_rounds == 5);
  }
  SUBCASE("cells and parallel results are consistent") {
    ml::ParamGrid g{{0.1, 0.3}, {1, 2}, {0.0}, {1.0}, {0.0}, {1.0}, {5, 10}};
    CHECK(g.size() == 8);
    CHECK(g.cells().size() == 8);
    CHECK(g.cells()[1].n_rounds == 10);
    const auto a = ml::grid_search(d.x, d.y, labels, g, 3, 7, 1);
    const auto b = ml::grid_search(d.x, d.y, labels, g, 3, 7, 4);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].mean_micro_f1 == b.cells[i].mean_micro_f1);
    CHECK(a.best_index == b.best_index);
  }
}

TEST_CASE("retrain and bundles") {
  const auto tax = default_taxonomy();
  const auto comments = synth::labeled_comments(120, 3, tax);
  const Corpus corpus(comments, {}, tax);
  EmbeddingOptions eo;
  eo.dim = 16;
  eo.bucket_count = 10000;
  const Embedder embedder(EmbeddingModel::subword(eo), PreprocessConfig{});
  auto cfg = quick(8, 2);
  ml::OneVsRestModel none;
  none.metadata.model_version = 0;

  const auto v1 = ml::retrain(none, corpus, embedder, cfg);
  CHECK(v1.metadata.model_version == 1);
  CHECK(v1.metadata.training_size == 120);
  CHECK(v1.fingerprint == embedder.fingerprint());

  SUBCASE("unchanged corpus gives an identical model") {
    const auto again = ml::retrain(none, corpus, embedder, cfg);
    for (std::size_t i = 0; i < v1.heads.size(); ++i) CHECK(again.heads[i].model.trees == v1.heads[i].model.trees);
  }
  SUBCASE("corrections grow the training pool") {
    std::vector<Comment> more = comments;
    for (std::size_t i = 0; i < 100; ++i) {
      auto c = testing::comment("u" + std::to_string(i), "the page is painfully slow");
      c.label_source = LabelSource::Unlabeled;
      more.push_back(c);
    }
    const Corpus grown(more, {}, tax);
    std::vector<Correction> fixes;
    for (std::size_t i = 0; i < 100; ++i) fixes.push_back({"u" + std::to_string(i), {"Performance"}, "coder"});
    const auto merged = merge_corrections(grown, fixes);
    const auto v2 = ml::retrain(v1, merged, embedder, cfg);
    CHECK(v2.metadata.model_version == 2);
    CHECK(v2.metadata.training_size == v1.metadata.training_size + 100);
  }
  SUBCASE("a new taxonomy label gains a head") {
    const auto bumped = corpus.with_taxonomy(tax.with_label({"Security", "access and privacy"}));
    const auto v2 = ml::retrain(v1, bumped, embedder, cfg);
    CHECK(v2.head("Security"));
    CHECK(v2.taxonomy_version == tax.version() + 1);
  }
  SUBCASE("a different embedder is refused") {
    auto other = eo;
    other.seed = 99;
    const Embedder e2(EmbeddingModel::subword(other), PreprocessConfig{});
    CHECK_THROWS_AS(ml::retrain(v1, corpus, e2, cfg), Error);
  }
  SUBCASE("bundle round trip") {
    testing::TempDir dir("bundle");
    ml::save_bundle(dir.path(), v1);
    const auto back = ml::load_bundle(dir.path(), embedder.fingerprint());
    REQUIRE(back.heads.size() == v1.heads.size());
    for (std::size_t i = 0; i < back.heads.size(); ++i) {
      CHECK(back.heads[i].model.trees == v1.heads[i].model.trees);
      CHECK(back.heads[i].threshold == v1.heads[i].threshold);
    }
    CHECK(back.metadata.trained_at == v1.metadata.trained_at);
    try {
      ml::load_bundle(dir.path(), "nope");
      FAIL("expected FingerprintMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::FingerprintMismatch);
    }
  }
}
