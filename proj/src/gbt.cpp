#include "uxfb/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "uxfb/error.hpp"

namespace uxfb::gbt {

using nlohmann::json;

void Params::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidParams, what); };
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0, 1]");
  if (n_rounds < 0) fail("n_rounds must be non-negative");
  if (max_depth < 1) fail("max_depth must be positive");
  if (!(min_loss_reduction >= 0.0)) fail("min_loss_reduction must be >= 0");
  if (!(l2_weight >= 0.0)) fail("l2_weight must be >= 0");
  if (!(l1_weight >= 0.0)) fail("l1_weight must be >= 0");
  if (!(min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
}

double RegressionTree::leaf_weight(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].weight;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    for (int child : {n.left, n.right}) {
      depth[static_cast<std::size_t>(child)] = depth[i] + 1;
      deepest = std::max(deepest, depth[i] + 1);
    }
  }
  return deepest;
}

void RegressionTree::check_structure() const {
  if (nodes.empty()) throw Error(ErrorKind::InvalidArgument, "tree without nodes");
  std::vector<int> parents(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    for (int child : {n.left, n.right}) {
      // children are stored after their parent, which rules out cycles
      if (child <= static_cast<int>(i) || child >= static_cast<int>(nodes.size()))
        throw Error(ErrorKind::InvalidArgument, "tree child index out of order");
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (parents[i] != 1) throw Error(ErrorKind::InvalidArgument, "tree node without exactly one parent");
}

Dataset::Dataset(Matrix features) : features_(std::move(features)) {
  const auto n = features_.rows();
  const auto d = features_.cols();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorKind::InvalidArgument, "too many rows");
  by_feature_.resize(n * d);
  order_.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      const double v = features_(i, f);
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "feature values must be finite (no missing values)");
      by_feature_[f * n + i] = v;
    }
  }
  for (std::size_t f = 0; f < d; ++f) {
    auto first = order_.begin() + static_cast<std::ptrdiff_t>(f * n);
    std::iota(first, first + static_cast<std::ptrdiff_t>(n), 0u);
    const double* col = by_feature_.data() + f * n;
    std::stable_sort(first, first + static_cast<std::ptrdiff_t>(n),
                     [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
}

double sigmoid(double margin) noexcept {
  // keeps the probability strictly inside (0, 1) in double precision
  margin = std::clamp(margin, -36.0, 36.0);
  return 1.0 / (1.0 + std::exp(-margin));
}

double mean_log_loss(std::span<const double> margins, std::span<const int> targets) {
  if (margins.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    // log(1 + e^m) - y m, evaluated without overflow
    const double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    total += softplus - (targets[i] ? m : 0.0);
  }
  return total / static_cast<double>(margins.size());
}

namespace {

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double node_score(double g, double h, const Params& p) {
  const double denom = h + p.l2_weight;
  if (denom <= 0.0) return 0.0;
  const double t = soft_threshold(g, p.l1_weight);
  return t * t / denom;
}

double leaf_value(double g, double h, const Params& p) {
  const double denom = h + p.l2_weight;
  if (denom <= 0.0) return 0.0;
  return -soft_threshold(g, p.l1_weight) / denom;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Working state for one training call. Rows are relabelled into a canonical
// order (sorted by feature vector, then target) so the result depends only on
// the multiset of training rows, not on their order.
class TreeGrower {
 public:
  TreeGrower(const Dataset& data, std::span<const int> targets, const Params& params)
      : data_(data), params_(params), n_(data.rows()), d_(data.cols()) {
    canonical_.resize(n_);
    std::iota(canonical_.begin(), canonical_.end(), 0u);
    std::sort(canonical_.begin(), canonical_.end(), [&](std::uint32_t a, std::uint32_t b) {
      for (std::size_t f = 0; f < d_; ++f) {
        const double va = data_.value(a, f), vb = data_.value(b, f);
        if (va != vb) return va < vb;
      }
      if (targets[a] != targets[b]) return targets[a] < targets[b];
      return a < b;
    });
    rank_.resize(n_);
    for (std::size_t r = 0; r < n_; ++r) rank_[canonical_[r]] = static_cast<std::uint32_t>(r);

    // per-feature order in canonical ranks, ties broken by rank
    sorted_.resize(n_ * d_);
    for (std::size_t f = 0; f < d_; ++f) {
      const auto src = data_.sorted_rows(f);
      auto* dst = sorted_.data() + f * n_;
      for (std::size_t k = 0; k < n_; ++k) dst[k] = rank_[src[k]];
      std::size_t start = 0;
      while (start < n_) {
        std::size_t end = start + 1;
        const double v = data_.value(canonical_[dst[start]], f);
        while (end < n_ && data_.value(canonical_[dst[end]], f) == v) ++end;
        if (end - start > 1) std::sort(dst + start, dst + end);
        start = end;
      }
    }
    y_.resize(n_);
    for (std::size_t r = 0; r < n_; ++r) y_[r] = targets[canonical_[r]];
  }

  double feature(std::size_t rank, std::size_t f) const { return data_.value(canonical_[rank], f); }
  const std::vector<int>& y() const { return y_; }

  // Grows one tree for the given gradients (indexed by rank) and reports the
  // leaf each row ends up in.
  RegressionTree grow(const std::vector<double>& g, const std::vector<double>& h, std::vector<int>& position) {
    RegressionTree tree;
    tree.nodes.push_back(Node{});
    position.assign(n_, 0);
    std::vector<int> frontier = {0};

    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      const auto sums = node_sums(g, h, position, tree.nodes.size());
      std::vector<int> slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      const auto best = find_splits(g, h, position, slot_of, frontier, sums);

      std::vector<int> next;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        if (best[s].feature < 0) continue;
        const auto id = static_cast<std::size_t>(frontier[s]);
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(Node{});
        tree.nodes.push_back(Node{});
        tree.nodes[id].feature = best[s].feature;
        tree.nodes[id].threshold = best[s].threshold;
        tree.nodes[id].left = left;
        tree.nodes[id].right = left + 1;
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      for (std::size_t r = 0; r < n_; ++r) {
        const auto& node = tree.nodes[static_cast<std::size_t>(position[r])];
        if (node.is_leaf()) continue;
        position[r] = feature(r, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left : node.right;
      }
      frontier = std::move(next);
    }

    const auto sums = node_sums(g, h, position, tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
      if (tree.nodes[i].is_leaf()) tree.nodes[i].weight = leaf_value(sums[i].first, sums[i].second, params_);
    return tree;
  }

 private:
  std::vector<std::pair<double, double>> node_sums(const std::vector<double>& g, const std::vector<double>& h,
                                                   const std::vector<int>& position, std::size_t nodes) const {
    std::vector<std::pair<double, double>> sums(nodes, {0.0, 0.0});
    for (std::size_t r = 0; r < n_; ++r) {
      auto& s = sums[static_cast<std::size_t>(position[r])];
      s.first += g[r];
      s.second += h[r];
    }
    return sums;
  }

  std::vector<SplitCandidate> find_splits(const std::vector<double>& g, const std::vector<double>& h,
                                          const std::vector<int>& position, const std::vector<int>& slot_of,
                                          const std::vector<int>& frontier,
                                          const std::vector<std::pair<double, double>>& sums) const {
    const auto slots = frontier.size();
    std::vector<SplitCandidate> best(slots);
    std::vector<double> parent_score(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      const auto& [G, H] = sums[static_cast<std::size_t>(frontier[s])];
      parent_score[s] = node_score(G, H, params_);
    }
    std::vector<double> gl(slots), hl(slots), last(slots);
    std::vector<char> seen(slots);
    for (std::size_t f = 0; f < d_; ++f) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      const auto* order = sorted_.data() + f * n_;
      for (std::size_t k = 0; k < n_; ++k) {
        const auto r = order[k];
        const int slot = slot_of[static_cast<std::size_t>(position[r])];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        const double x = feature(r, f);
        if (seen[s] && x > last[s]) {
          const auto& [G, H] = sums[static_cast<std::size_t>(frontier[s])];
          const double gr = G - gl[s], hr = H - hl[s];
          if (hl[s] >= params_.min_child_weight && hr >= params_.min_child_weight) {
            const double gain = 0.5 * (node_score(gl[s], hl[s], params_) + node_score(gr, hr, params_) -
                                       parent_score[s]) -
                                params_.min_loss_reduction;
            if (gain > best[s].gain) {
              double threshold = last[s] + (x - last[s]) / 2.0;
              if (!(last[s] < threshold)) threshold = x;
              best[s] = {gain, static_cast<int>(f), threshold};
            }
          }
        }
        gl[s] += g[r];
        hl[s] += h[r];
        last[s] = x;
        seen[s] = 1;
      }
    }
    return best;
  }

  const Dataset& data_;
  const Params& params_;
  std::size_t n_;
  std::size_t d_;
  std::vector<std::uint32_t> canonical_;  // rank -> original row
  std::vector<std::uint32_t> rank_;       // original row -> rank
  std::vector<std::uint32_t> sorted_;     // per feature, ranks by ascending value
  std::vector<int> y_;
};

}  // namespace

Model train_binary(const Dataset& data, std::span<const int> targets, const Params& params,
                   const TrainOptions& options) {
  params.validate();
  const auto n = data.rows();
  if (targets.size() != n)
    throw Error(ErrorKind::DimensionMismatch,
                "targets has " + std::to_string(targets.size()) + " entries for " + std::to_string(n) + " rows");
  std::size_t positives = 0;
  for (int t : targets) {
    if (t != 0 && t != 1) throw Error(ErrorKind::InvalidArgument, "targets must be 0 or 1");
    positives += static_cast<std::size_t>(t);
  }

  Model model;
  model.params = params;
  model.n_features = data.cols();
  model.loss_recorded = options.record_loss;
  if (params.n_rounds == 0) return model;

  if (positives == 0 || positives == n) {
    const double rate = (static_cast<double>(positives) + 0.5) / (static_cast<double>(n) + 1.0);
    model.base_score = std::log(rate / (1.0 - rate));
    model.warning = "single-class targets (" + std::to_string(positives) + " of " + std::to_string(n) +
                    " positive); using a base-rate model";
    model.loss_recorded = false;
    return model;
  }
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "training needs at least two rows");

  TreeGrower grower(data, targets, params);
  const auto& y = grower.y();
  std::vector<double> margin(n, model.base_score), g(n), h(n);
  std::vector<int> position;
  model.trees.reserve(static_cast<std::size_t>(params.n_rounds));
  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      const double p = sigmoid(margin[r]);
      g[r] = p - static_cast<double>(y[r]);
      h[r] = p * (1.0 - p);
    }
    auto tree = grower.grow(g, h, position);
    for (std::size_t r = 0; r < n; ++r)
      margin[r] += params.learning_rate * tree.nodes[static_cast<std::size_t>(position[r])].weight;
    model.trees.push_back(std::move(tree));
    if (options.record_loss) model.loss_curve.push_back(mean_log_loss(margin, y));
  }
  return model;
}

Model train_binary(const Matrix& features, std::span<const int> targets, const Params& params,
                   const TrainOptions& options) {
  return train_binary(Dataset(features), targets, params, options);
}

double predict_margin(const Model& model, std::span<const double> x, std::size_t max_trees) {
  if (x.size() != model.n_features)
    throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(model.n_features) +
                                                  " features, got " + std::to_string(x.size()));
  double sum = 0.0;
  const auto count = std::min(max_trees, model.trees.size());
  for (std::size_t t = 0; t < count; ++t) sum += model.trees[t].leaf_weight(x);
  return model.base_score + model.params.learning_rate * sum;
}

double predict_proba(const Model& model, std::span<const double> x, std::size_t max_trees) {
  return sigmoid(predict_margin(model, x, max_trees));
}

std::span<const double> training_loss_curve(const Model& model) {
  if (!model.loss_recorded) throw Error(ErrorKind::NotRecorded, "model was trained without loss recording");
  return model.loss_curve;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

json params_to_json(const Params& p) {
  return {{"learning_rate", p.learning_rate},   {"n_rounds", p.n_rounds},   {"max_depth", p.max_depth},
          {"min_loss_reduction", p.min_loss_reduction}, {"l2_weight", p.l2_weight}, {"l1_weight", p.l1_weight},
          {"min_child_weight", p.min_child_weight}, {"seed", p.seed}};
}

Params params_from_json(const json& doc) {
  Params p;
  p.learning_rate = doc.at("learning_rate").get<double>();
  p.n_rounds = doc.at("n_rounds").get<int>();
  p.max_depth = doc.at("max_depth").get<int>();
  p.min_loss_reduction = doc.at("min_loss_reduction").get<double>();
  p.l2_weight = doc.at("l2_weight").get<double>();
  p.l1_weight = doc.at("l1_weight").get<double>();
  p.min_child_weight = doc.value("min_child_weight", 1.0);
  p.seed = doc.value("seed", std::uint64_t{0});
  p.validate();
  return p;
}

json to_json(const Model& model) {
  json trees = json::array();
  for (const auto& t : model.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         weight = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      weight.push_back(n.weight);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"weight", weight}});
  }
  json doc = {{"format", "uxfb-gbt"},
              {"version", 1},
              {"fingerprint", model.fingerprint},
              {"n_features", model.n_features},
              {"base_score", model.base_score},
              {"params", params_to_json(model.params)},
              {"trees", trees}};
  if (model.loss_recorded) doc["loss_curve"] = model.loss_curve;
  return doc;
}

Model model_from_json(const json& doc, const std::string& expected_fingerprint) {
  Model model;
  try {
    if (doc.at("format").get<std::string>() != "uxfb-gbt" || doc.at("version").get<int>() != 1)
      throw Error(ErrorKind::Parse, "unsupported model format or version");
    model.fingerprint = doc.at("fingerprint").get<std::string>();
    if (!expected_fingerprint.empty() && model.fingerprint != expected_fingerprint)
      throw Error(ErrorKind::FingerprintMismatch,
                  "model was trained on '" + model.fingerprint + "', current embedding is '" + expected_fingerprint + "'");
    model.n_features = doc.at("n_features").get<std::size_t>();
    model.base_score = doc.at("base_score").get<double>();
    model.params = params_from_json(doc.at("params"));
    for (const auto& t : doc.at("trees")) {
      RegressionTree tree;
      const auto& feature = t.at("feature");
      for (std::size_t i = 0; i < feature.size(); ++i) {
        Node n;
        n.feature = feature[i].get<int>();
        n.threshold = t.at("threshold")[i].get<double>();
        n.left = t.at("left")[i].get<int>();
        n.right = t.at("right")[i].get<int>();
        n.weight = t.at("weight")[i].get<double>();
        if (n.feature >= static_cast<int>(model.n_features)) throw Error(ErrorKind::Parse, "feature index out of range");
        tree.nodes.push_back(n);
      }
      tree.check_structure();
      model.trees.push_back(std::move(tree));
    }
    if (doc.contains("loss_curve")) {
      model.loss_curve = doc.at("loss_curve").get<std::vector<double>>();
      model.loss_recorded = true;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed model: ") + e.what());
  }
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

Model load_model(const std::filesystem::path& path, const std::string& expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return model_from_json(doc, expected_fingerprint);
}

}  // namespace uxfb::gbt
