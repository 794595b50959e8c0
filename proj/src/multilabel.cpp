#include "uxfb/multilabel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "uxfb/csv.hpp"
#include "uxfb/error.hpp"
#include "uxfb/parallel.hpp"
#include "uxfb/rng.hpp"
#include "uxfb/timeutil.hpp"

namespace uxfb::ml {

using nlohmann::json;

// ---------------------------------------------------------------------------
// folds
// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int f : fold) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

std::vector<std::size_t> FoldAssignment::training_rows(int f) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldAssignment::validation_rows(int f) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) rows.push_back(i);
  return rows;
}

namespace {

// Local search state for the post-stratification repair.
class FoldBalancer {
 public:
  FoldBalancer(const std::vector<std::vector<int>>& labels, std::size_t label_count, int k, std::vector<int>& fold)
      : labels_(labels), k_(static_cast<std::size_t>(k)), fold_(fold), counts_(k_ * label_count, 0), sizes_(k_, 0) {
    const auto n = labels.size();
    std::vector<std::size_t> freq(label_count, 0);
    for (std::size_t e = 0; e < n; ++e) {
      ++sizes_[static_cast<std::size_t>(fold_[e])];
      for (int l : labels_[e]) {
        ++freq[static_cast<std::size_t>(l)];
        ++count(fold_[e], l);
      }
    }
    lo_.resize(label_count);
    hi_.resize(label_count);
    strict_.resize(label_count);
    for (std::size_t l = 0; l < label_count; ++l) {
      lo_[l] = static_cast<int>(freq[l] / k_);
      hi_[l] = static_cast<int>((freq[l] + k_ - 1) / k_);
      strict_[l] = freq[l] >= k_;
    }
    size_lo_ = static_cast<int>(n / k_);
    size_hi_ = static_cast<int>((n + k_ - 1) / k_);
  }

  void run(int max_passes) {
    for (int pass = 0; pass < max_passes; ++pass) {
      if (!improve_once()) break;
    }
  }

 private:
  // (strict label violations, rare label + fold size violations)
  using Cost = std::pair<long, long>;

  int& count(int f, int l) { return counts_[static_cast<std::size_t>(f) * lo_capacity() + static_cast<std::size_t>(l)]; }
  std::size_t lo_capacity() const { return counts_.size() / k_; }

  static long outside(int c, int lo, int hi) { return c < lo ? lo - c : (c > hi ? c - hi : 0); }

  Cost label_cost(int l, int f) {
    const auto li = static_cast<std::size_t>(l);
    const long v = outside(count(f, l), lo_[li], hi_[li]);
    return strict_[li] ? Cost{v, 0} : Cost{0, v};
  }

  Cost size_cost(int f) const { return {0, outside(sizes_[static_cast<std::size_t>(f)], size_lo_, size_hi_)}; }

  static void add(Cost& a, const Cost& b) {
    a.first += b.first;
    a.second += b.second;
  }

  // Cost of the (label, fold) cells touched by moving `out` from a to b and
  // `in` from b to a (in = -1 for a plain move).
  Cost local_cost(int e_out, int e_in, int a, int b) {
    std::set<int> touched(labels_[static_cast<std::size_t>(e_out)].begin(), labels_[static_cast<std::size_t>(e_out)].end());
    if (e_in >= 0) touched.insert(labels_[static_cast<std::size_t>(e_in)].begin(), labels_[static_cast<std::size_t>(e_in)].end());
    Cost c{0, 0};
    for (int l : touched) {
      add(c, label_cost(l, a));
      add(c, label_cost(l, b));
    }
    add(c, size_cost(a));
    add(c, size_cost(b));
    return c;
  }

  void apply(int e, int from, int to) {
    for (int l : labels_[static_cast<std::size_t>(e)]) {
      --count(from, l);
      ++count(to, l);
    }
    --sizes_[static_cast<std::size_t>(from)];
    ++sizes_[static_cast<std::size_t>(to)];
    fold_[static_cast<std::size_t>(e)] = to;
  }

  bool has_violation(int e) {
    for (int l : labels_[static_cast<std::size_t>(e)])
      for (std::size_t f = 0; f < k_; ++f)
        if (label_cost(l, static_cast<int>(f)) != Cost{0, 0}) return true;
    return false;
  }

  bool try_moves(int e) {
    const int a = fold_[static_cast<std::size_t>(e)];
    const auto n = static_cast<int>(labels_.size());
    for (int b = 0; b < static_cast<int>(k_); ++b) {
      if (b == a) continue;
      const Cost before = local_cost(e, -1, a, b);
      apply(e, a, b);
      if (local_cost(e, -1, a, b) < before) return true;
      apply(e, b, a);
      for (int other = 0; other < n; ++other) {
        if (fold_[static_cast<std::size_t>(other)] != b) continue;
        const Cost swap_before = local_cost(e, other, a, b);
        apply(e, a, b);
        apply(other, b, a);
        if (local_cost(e, other, a, b) < swap_before) return true;
        apply(other, a, b);
        apply(e, b, a);
      }
    }
    return false;
  }

  bool improve_once() {
    bool improved = false;
    for (int e = 0; e < static_cast<int>(labels_.size()); ++e) {
      if (labels_[static_cast<std::size_t>(e)].empty() || !has_violation(e)) continue;
      if (try_moves(e)) improved = true;
    }
    return improved;
  }

  const std::vector<std::vector<int>>& labels_;
  std::size_t k_;
  std::vector<int>& fold_;
  std::vector<int> counts_;
  std::vector<int> sizes_;
  std::vector<int> lo_, hi_;
  std::vector<char> strict_;
  int size_lo_ = 0, size_hi_ = 0;
};

}  // namespace

FoldAssignment stratified_kfold(std::span<const LabelSet> labelsets, int k, std::uint64_t seed) {
  const auto n = labelsets.size();
  if (k < 2 || static_cast<std::size_t>(k) > n)
    throw Error(ErrorKind::InvalidK, "k must satisfy 2 <= k <= " + std::to_string(n) + ", got " + std::to_string(k));
  const auto folds = static_cast<std::size_t>(k);

  std::map<std::string, int> label_index;
  for (const auto& s : labelsets)
    for (const auto& l : s) label_index.emplace(l, 0);
  int next = 0;
  for (auto& [name, idx] : label_index) idx = next++;
  const auto label_count = label_index.size();

  std::vector<std::vector<int>> labels(n);
  std::vector<std::size_t> freq(label_count, 0);
  for (std::size_t e = 0; e < n; ++e) {
    for (const auto& l : labelsets[e]) {
      const int idx = label_index.at(l);
      labels[e].push_back(idx);
      ++freq[static_cast<std::size_t>(idx)];
    }
  }

  Rng rng(derive_seed({seed, 0x5f0d}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  std::vector<double> want_total(folds, static_cast<double>(n) / static_cast<double>(folds));
  std::vector<double> want(folds * label_count);
  for (std::size_t f = 0; f < folds; ++f)
    for (std::size_t l = 0; l < label_count; ++l)
      want[f * label_count + l] = static_cast<double>(freq[l]) / static_cast<double>(folds);

  std::vector<std::size_t> remaining = freq;
  std::vector<int> fold(n, -1);

  auto assign = [&](std::size_t e, std::size_t f) {
    fold[e] = static_cast<int>(f);
    want_total[f] -= 1.0;
    for (int l : labels[e]) {
      want[f * label_count + static_cast<std::size_t>(l)] -= 1.0;
      --remaining[static_cast<std::size_t>(l)];
    }
  };
  auto pick = [&](auto&& better) {
    std::vector<std::size_t> ties = {0};
    for (std::size_t f = 1; f < folds; ++f) {
      const int cmp = better(f, ties.front());
      if (cmp > 0) ties = {f};
      else if (cmp == 0) ties.push_back(f);
    }
    return ties[ties.size() == 1 ? 0 : static_cast<std::size_t>(rng.below(ties.size()))];
  };
  auto compare = [](double a, double b) { return a > b ? 1 : (a < b ? -1 : 0); };

  while (true) {
    std::size_t label = label_count;
    for (std::size_t l = 0; l < label_count; ++l)
      if (remaining[l] > 0 && (label == label_count || remaining[l] < remaining[label])) label = l;
    if (label == label_count) break;
    for (std::size_t e : order) {
      if (fold[e] >= 0) continue;
      if (std::find(labels[e].begin(), labels[e].end(), static_cast<int>(label)) == labels[e].end()) continue;
      const auto f = pick([&](std::size_t x, std::size_t y) {
        const int c = compare(want[x * label_count + label], want[y * label_count + label]);
        return c != 0 ? c : compare(want_total[x], want_total[y]);
      });
      assign(e, f);
    }
  }
  for (std::size_t e : order) {
    if (fold[e] >= 0) continue;
    assign(e, pick([&](std::size_t x, std::size_t y) { return compare(want_total[x], want_total[y]); }));
  }

  FoldBalancer(labels, label_count, k, fold).run(50);
  return FoldAssignment{k, std::move(fold)};
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

MicroMetrics micro_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  MicroMetrics m{tp, fp, fn, ratio(tp, tp + fp), ratio(tp, tp + fn), 0.0};
  m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
  return m;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string percent(double share) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", share * 100.0);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const LabelSet> predictions, std::span<const LabelSet> truth,
                    const TopicTaxonomy& taxonomy, std::string protocol) {
  if (predictions.size() != truth.size())
    throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(truth.size()) + " ground-truth label sets");
  EvalReport report;
  report.comments = truth.size();
  report.protocol = std::move(protocol);
  for (const auto& def : taxonomy.labels()) report.per_label.push_back({def.name});

  auto index = [&](const std::string& l) {
    const auto i = taxonomy.index_of(l);
    if (!i) throw Error(ErrorKind::UnknownLabel, l);
    return *i;
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (const auto& l : truth[i]) {
      auto& m = report.per_label[index(l)];
      ++m.count;
      if (predictions[i].contains(l)) ++m.tp;
      else ++m.fn;
    }
    for (const auto& l : predictions[i]) {
      auto& m = report.per_label[index(l)];
      if (!truth[i].contains(l)) ++m.fp;
    }
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (auto& m : report.per_label) {
    m.share = ratio(m.count, truth.size());
    m.precision_undefined = m.tp + m.fp == 0;
    m.recall_undefined = m.tp + m.fn == 0;
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = f1_score(m.precision, m.recall);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
  report.micro = micro_from_counts(tp, fp, fn);
  return report;
}

std::string to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "label,count,share,precision,recall,f1\n";
  for (const auto& m : report.per_label) {
    out << csv::escape(m.label) << ',' << m.count << ',' << percent(m.share) << ',' << two_decimals(m.precision)
        << ',' << two_decimals(m.recall) << ',' << two_decimals(m.f1) << '\n';
  }
  out << "micro,,," << two_decimals(report.micro.precision) << ',' << two_decimals(report.micro.recall) << ','
      << two_decimals(report.micro.f1) << '\n';
  return out.str();
}

std::string to_markdown(const EvalReport& report) {
  std::ostringstream out;
  if (!report.protocol.empty()) out << "Evaluation protocol: " << report.protocol << "\n\n";
  out << "| Label | Count of Comments | Share of Comments | Precision | Recall | F1 Score |\n";
  out << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& m : report.per_label) {
    out << "| " << m.label << " | " << m.count << " | " << percent(m.share) << " | " << two_decimals(m.precision)
        << (m.precision_undefined ? "*" : "") << " | " << two_decimals(m.recall) << (m.recall_undefined ? "*" : "")
        << " | " << two_decimals(m.f1) << " |\n";
  }
  out << "| Micro average | | | " << two_decimals(report.micro.precision) << " | "
      << two_decimals(report.micro.recall) << " | " << two_decimals(report.micro.f1) << " |\n";
  const bool any_undefined = std::any_of(report.per_label.begin(), report.per_label.end(), [](const LabelMetrics& m) {
    return m.precision_undefined || m.recall_undefined;
  });
  if (any_undefined) out << "\n\\* zero denominator, reported as 0\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// one-vs-rest training and prediction
// ---------------------------------------------------------------------------

const LabelHead* OneVsRestModel::head(std::string_view label) const {
  for (const auto& h : heads)
    if (h.label == label) return &h;
  return nullptr;
}

namespace {

std::vector<int> targets_for(std::span<const LabelSet> labelsets, const std::string& label) {
  std::vector<int> y(labelsets.size());
  for (std::size_t i = 0; i < labelsets.size(); ++i) y[i] = labelsets[i].contains(label) ? 1 : 0;
  return y;
}

double tune_threshold(const Matrix& features, std::span<const int> y, const gbt::Params& params,
                      const FoldAssignment& folds) {
  std::vector<double> oof(y.size(), 0.0);
  for (int f = 0; f < folds.k; ++f) {
    const auto train_rows = folds.training_rows(f);
    const auto valid_rows = folds.validation_rows(f);
    std::vector<int> train_y;
    for (auto r : train_rows) train_y.push_back(y[r]);
    const auto model = gbt::train_binary(features.select_rows(train_rows), train_y, params, {false});
    for (auto r : valid_rows) oof[r] = gbt::predict_proba(model, features.row(r));
  }
  double best_threshold = 0.5;
  double best_f1 = -1.0;
  for (int step = 1; step <= 19; ++step) {
    const double t = step * 0.05;
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool predicted = oof[i] >= t;
      if (predicted && y[i]) ++tp;
      else if (predicted) ++fp;
      else if (y[i]) ++fn;
    }
    const double f1 = ratio(2 * tp, 2 * tp + fp + fn);
    if (f1 > best_f1 || (f1 == best_f1 && std::abs(t - 0.5) < std::abs(best_threshold - 0.5))) {
      best_f1 = f1;
      best_threshold = t;
    }
  }
  return best_threshold;
}

}  // namespace

OneVsRestModel train_ovr(const Matrix& features, std::span<const LabelSet> labelsets, const TopicTaxonomy& taxonomy,
                         const std::string& fingerprint, const TrainConfig& config) {
  if (features.rows() != labelsets.size())
    throw Error(ErrorKind::EmbeddingMismatch, std::to_string(features.rows()) + " vectors for " +
                                                  std::to_string(labelsets.size()) + " label sets");
  if (features.cols() == 0 && features.rows() > 0)
    throw Error(ErrorKind::EmbeddingMismatch, "zero-dimensional embeddings");
  for (const auto& s : labelsets)
    for (const auto& l : s)
      if (!taxonomy.contains(l)) throw Error(ErrorKind::UnknownLabel, l);
  config.shared.validate();
  for (const auto& [label, p] : config.per_label) {
    if (!taxonomy.contains(label)) throw Error(ErrorKind::UnknownLabel, label);
    p.validate();
  }

  OneVsRestModel model;
  model.taxonomy_version = taxonomy.version();
  model.fingerprint = fingerprint;
  model.metadata.training_size = labelsets.size();
  model.heads.resize(taxonomy.size());

  std::optional<FoldAssignment> folds;
  if (config.tune_thresholds && labelsets.size() >= static_cast<std::size_t>(std::max(2, config.threshold_folds)))
    folds = stratified_kfold(labelsets, config.threshold_folds, config.seed);

  const gbt::Dataset data(features);
  std::vector<std::string> warnings(taxonomy.size());
  parallel_for(taxonomy.size(), config.jobs, [&](std::size_t i) {
    const auto& label = taxonomy.labels()[i].name;
    const auto it = config.per_label.find(label);
    const auto& params = it == config.per_label.end() ? config.shared : it->second;
    auto& head = model.heads[i];
    head.label = label;
    const auto y = targets_for(labelsets, label);
    head.positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (head.positives == 0) {
      head.never_predict = true;
      head.model.params = params;
      head.model.n_features = features.cols();
      head.model.fingerprint = fingerprint;
      warnings[i] = "label '" + label + "' has no positive training examples; it will never be predicted";
      return;
    }
    head.model = gbt::train_binary(data, y, params);
    head.model.fingerprint = fingerprint;
    if (!head.model.warning.empty()) warnings[i] = "label '" + label + "': " + head.model.warning;
    if (folds && head.positives >= 2 && head.positives < y.size()) head.threshold = tune_threshold(features, y, params, *folds);
  });
  for (auto& w : warnings)
    if (!w.empty()) model.warnings.push_back(std::move(w));
  return model;
}

Prediction predict_labels(const OneVsRestModel& model, std::span<const double> features,
                          const std::string& fingerprint) {
  if (fingerprint != model.fingerprint)
    throw Error(ErrorKind::FingerprintMismatch,
                "model expects embedding '" + model.fingerprint + "', got '" + fingerprint + "'");
  Prediction out;
  for (const auto& head : model.heads) {
    const double p = head.never_predict ? 0.0 : gbt::predict_proba(head.model, features);
    out.probabilities[head.label] = p;
    if (!head.never_predict && p >= head.threshold) out.labels.insert(head.label);
  }
  return out;
}

void set_threshold(OneVsRestModel& model, std::string_view label, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0))
    throw Error(ErrorKind::InvalidArgument, "decision thresholds must lie in [0, 1)");
  for (auto& h : model.heads) {
    if (h.label == label) {
      h.threshold = threshold;
      return;
    }
  }
  throw Error(ErrorKind::UnknownLabel, std::string(label));
}

// ---------------------------------------------------------------------------
// grid search
// ---------------------------------------------------------------------------

std::size_t ParamGrid::size() const {
  return learning_rate.size() * max_depth.size() * min_loss_reduction.size() * l2_weight.size() * l1_weight.size() *
         min_child_weight.size() * n_rounds.size();
}

std::vector<gbt::Params> ParamGrid::cells() const {
  std::vector<gbt::Params> out;
  out.reserve(size());
  for (double eta : learning_rate)
    for (int depth : max_depth)
      for (double gamma : min_loss_reduction)
        for (double lambda : l2_weight)
          for (double alpha : l1_weight)
            for (double mcw : min_child_weight)
              for (int rounds : n_rounds) {
                gbt::Params p;
                p.learning_rate = eta;
                p.max_depth = depth;
                p.min_loss_reduction = gamma;
                p.l2_weight = lambda;
                p.l1_weight = alpha;
                p.min_child_weight = mcw;
                p.n_rounds = rounds;
                out.push_back(p);
              }
  return out;
}

namespace {

// Confusion counts for one (training group, fold) at several ensemble sizes.
struct FoldCounts {
  std::vector<std::size_t> tp, fp, fn;  // indexed like the group's round counts
  bool failed = false;
  std::string failure;
};

}  // namespace

GridSearchResult grid_search(const Matrix& features, std::span<const LabelSet> labelsets,
                             const std::vector<std::string>& labels, const ParamGrid& grid, int k, std::uint64_t seed,
                             unsigned jobs) {
  if (grid.size() == 0) throw Error(ErrorKind::InvalidArgument, "parameter grid is empty");
  if (features.rows() != labelsets.size())
    throw Error(ErrorKind::EmbeddingMismatch, "feature rows and label sets differ in length");

  GridSearchResult result;
  std::vector<std::string> scored;
  for (const auto& l : labels) {
    const auto positives = std::count_if(labelsets.begin(), labelsets.end(), [&](const LabelSet& s) { return s.contains(l); });
    if (positives < 2) result.excluded_labels.push_back(l);
    else scored.push_back(l);
  }

  const auto folds = stratified_kfold(labelsets, k, seed);
  const auto cells = grid.cells();

  // Cells that differ only in n_rounds share one training run; the smaller
  // ensembles are prefixes of the largest.
  struct Group {
    gbt::Params params;                  // with the largest n_rounds
    std::vector<int> rounds;             // distinct round counts, ascending
    std::vector<std::size_t> cell_ids;
  };
  std::vector<Group> groups;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto key = cells[c];
    key.n_rounds = 0;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      auto other = g.params;
      other.n_rounds = 0;
      return other == key;
    });
    if (it == groups.end()) {
      groups.push_back({cells[c], {}, {}});
      it = groups.end() - 1;
    }
    it->params.n_rounds = std::max(it->params.n_rounds, cells[c].n_rounds);
    it->cell_ids.push_back(c);
    if (std::find(it->rounds.begin(), it->rounds.end(), cells[c].n_rounds) == it->rounds.end())
      it->rounds.push_back(cells[c].n_rounds);
  }
  for (auto& g : groups) std::sort(g.rounds.begin(), g.rounds.end());

  std::vector<gbt::Dataset> fold_data;
  std::vector<std::vector<std::size_t>> train_rows(static_cast<std::size_t>(k)), valid_rows(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    train_rows[static_cast<std::size_t>(f)] = folds.training_rows(f);
    valid_rows[static_cast<std::size_t>(f)] = folds.validation_rows(f);
    fold_data.emplace_back(features.select_rows(train_rows[static_cast<std::size_t>(f)]));
  }

  const auto fold_count = static_cast<std::size_t>(k);
  std::vector<FoldCounts> counts(groups.size() * fold_count);
  parallel_for(counts.size(), jobs, [&](std::size_t task) {
    const auto& group = groups[task / fold_count];
    const auto f = task % fold_count;
    auto& out = counts[task];
    out.tp.assign(group.rounds.size(), 0);
    out.fp.assign(group.rounds.size(), 0);
    out.fn.assign(group.rounds.size(), 0);
    try {
      group.params.validate();
      for (const auto& label : scored) {
        std::vector<int> y;
        y.reserve(train_rows[f].size());
        for (auto r : train_rows[f]) y.push_back(labelsets[r].contains(label) ? 1 : 0);
        const bool any_positive = std::find(y.begin(), y.end(), 1) != y.end();
        gbt::Model model;
        if (any_positive) model = gbt::train_binary(fold_data[f], y, group.params, {false});
        for (auto r : valid_rows[f]) {
          const bool truth = labelsets[r].contains(label);
          for (std::size_t ri = 0; ri < group.rounds.size(); ++ri) {
            const bool predicted =
                any_positive && gbt::predict_proba(model, features.row(r), static_cast<std::size_t>(group.rounds[ri])) >= 0.5;
            if (predicted && truth) ++out.tp[ri];
            else if (predicted) ++out.fp[ri];
            else if (truth) ++out.fn[ri];
          }
        }
      }
    } catch (const std::exception& e) {
      out.failed = true;
      out.failure = e.what();
    }
  });

  result.cells.resize(cells.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& group = groups[gi];
    for (auto c : group.cell_ids) {
      auto& score = result.cells[c];
      score.params = cells[c];
      const auto ri = static_cast<std::size_t>(
          std::find(group.rounds.begin(), group.rounds.end(), cells[c].n_rounds) - group.rounds.begin());
      double total = 0.0;
      for (std::size_t f = 0; f < fold_count; ++f) {
        const auto& fc = counts[gi * fold_count + f];
        if (fc.failed) {
          score.failed = true;
          score.failure = fc.failure;
          continue;
        }
        const double f1 = micro_from_counts(fc.tp[ri], fc.fp[ri], fc.fn[ri]).f1;
        score.fold_micro_f1.push_back(f1);
        total += f1;
      }
      score.mean_micro_f1 = score.failed ? 0.0 : total / static_cast<double>(fold_count);
    }
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < result.cells.size(); ++c) {
    const auto& a = result.cells[c];
    const auto& b = result.cells[best];
    if (a.mean_micro_f1 > b.mean_micro_f1 ||
        (a.mean_micro_f1 == b.mean_micro_f1 &&
         (a.params.n_rounds < b.params.n_rounds ||
          (a.params.n_rounds == b.params.n_rounds && a.params.max_depth < b.params.max_depth))))
      best = c;
  }
  result.best_index = best;
  result.best = result.cells[best].params;
  return result;
}

// ---------------------------------------------------------------------------
// retraining and bundles
// ---------------------------------------------------------------------------

std::vector<const Comment*> training_pool(const Corpus& corpus) {
  std::vector<const Comment*> pool;
  for (const auto& c : corpus.comments())
    if (c.label_source == LabelSource::Human) pool.push_back(&c);
  return pool;
}

OneVsRestModel retrain(const OneVsRestModel& previous, const Corpus& corpus, const Embedder& embedder,
                       const TrainConfig& config) {
  if (!previous.fingerprint.empty() && previous.fingerprint != embedder.fingerprint())
    throw Error(ErrorKind::EmbeddingMismatch, "previous model used embedding '" + previous.fingerprint +
                                                  "', retraining with '" + embedder.fingerprint() + "'");
  const auto pool = training_pool(corpus);
  if (pool.empty()) throw Error(ErrorKind::EmptyCorpus, "no human-labeled comments to retrain on");
  std::vector<std::string> texts;
  std::vector<LabelSet> labelsets;
  Timestamp latest{};
  for (const auto* c : pool) {
    texts.push_back(c->working_text());
    labelsets.push_back(c->labels);
    latest = std::max(latest, c->timestamp);
  }
  const auto vectors = embedder.embed_all(texts, config.jobs);
  Matrix features(vectors.size(), embedder.dim());
  for (std::size_t i = 0; i < vectors.size(); ++i)
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), features.row(i).begin());

  auto model = train_ovr(features, labelsets, corpus.taxonomy(), embedder.fingerprint(), config);
  model.metadata.model_version = previous.metadata.model_version + 1;
  model.metadata.trained_at = format_rfc3339(latest);
  return model;
}

namespace {

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace

void save_bundle(const std::filesystem::path& dir, const OneVsRestModel& model) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "heads", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + (dir / "heads").string() + ": " + ec.message());
  json manifest;
  manifest["format"] = "uxfb-ovr-bundle";
  manifest["version"] = 1;
  manifest["taxonomy_version"] = model.taxonomy_version;
  manifest["fingerprint"] = model.fingerprint;
  manifest["metadata"] = {{"model_version", model.metadata.model_version},
                          {"training_size", model.metadata.training_size},
                          {"trained_at", model.metadata.trained_at}};
  manifest["warnings"] = model.warnings;
  manifest["labels"] = json::array();
  for (std::size_t i = 0; i < model.heads.size(); ++i) {
    const auto& h = model.heads[i];
    char name[32];
    std::snprintf(name, sizeof name, "heads/%02zu.json", i);
    manifest["labels"].push_back({{"name", h.label},
                                  {"threshold", h.threshold},
                                  {"never_predict", h.never_predict},
                                  {"positives", h.positives},
                                  {"file", name}});
    write_json(dir / name, gbt::to_json(h.model));
  }
  write_json(dir / "manifest.json", manifest);
}

OneVsRestModel load_bundle(const std::filesystem::path& dir, const std::string& expected_fingerprint) {
  const auto manifest = read_json(dir / "manifest.json");
  OneVsRestModel model;
  try {
    if (manifest.at("format").get<std::string>() != "uxfb-ovr-bundle" || manifest.at("version").get<int>() != 1)
      throw Error(ErrorKind::Parse, "unsupported model bundle format");
    model.fingerprint = manifest.at("fingerprint").get<std::string>();
    if (!expected_fingerprint.empty() && model.fingerprint != expected_fingerprint)
      throw Error(ErrorKind::FingerprintMismatch, "bundle was trained on embedding '" + model.fingerprint +
                                                      "', current embedding is '" + expected_fingerprint + "'");
    model.taxonomy_version = manifest.at("taxonomy_version").get<int>();
    const auto& meta = manifest.at("metadata");
    model.metadata.model_version = meta.at("model_version").get<int>();
    model.metadata.training_size = meta.at("training_size").get<std::size_t>();
    model.metadata.trained_at = meta.at("trained_at").get<std::string>();
    model.warnings = manifest.value("warnings", std::vector<std::string>{});
    for (const auto& entry : manifest.at("labels")) {
      LabelHead h;
      h.label = entry.at("name").get<std::string>();
      h.threshold = entry.at("threshold").get<double>();
      h.never_predict = entry.at("never_predict").get<bool>();
      h.positives = entry.at("positives").get<std::size_t>();
      if (!(h.threshold >= 0.0 && h.threshold < 1.0)) throw Error(ErrorKind::Parse, "threshold out of range");
      h.model = gbt::model_from_json(read_json(dir / entry.at("file").get<std::string>()), model.fingerprint);
      model.heads.push_back(std::move(h));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "malformed bundle manifest: " + std::string(e.what()));
  }
  return model;
}

}  // namespace uxfb::ml
