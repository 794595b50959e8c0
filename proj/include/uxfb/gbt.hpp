#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uxfb/matrix.hpp"

// Binary gradient-boosted regression trees on the logistic loss.
//
// Per round every row gets gradient g = p - y and hessian h = p(1 - p) at its
// current probability p. A node holding gradient sum G and hessian sum H has
// the optimal leaf weight
//
//   w = -T(G) / (H + lambda),   T(G) = sign(G) * max(|G| - alpha, 0)
//
// and splitting it into L and R reduces the regularized objective by
//
//   gain = 1/2 [T(G_L)^2/(H_L+lambda) + T(G_R)^2/(H_R+lambda) - T(G)^2/(H+lambda)] - gamma.
//
// Splits are found by exact greedy search over sorted feature values; only
// splits with gain > 0 and both children at or above min_child_weight are kept.

namespace uxfb::gbt {

struct Params {
  double learning_rate = 0.3;       // eta, in (0, 1]
  int n_rounds = 100;
  int max_depth = 6;
  double min_loss_reduction = 0.0;  // gamma
  double l2_weight = 1.0;           // lambda
  double l1_weight = 0.0;           // alpha
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;           // reserved; training does no subsampling

  /// Throws InvalidParams on any out-of-range field.
  void validate() const;
  bool operator==(const Params&) const = default;
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] < threshold
  int right = -1;
  double weight = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const Node&) const = default;
};

/// nodes[0] is the root.
struct RegressionTree {
  std::vector<Node> nodes;

  double leaf_weight(std::span<const double> x) const;
  int depth() const;
  /// Throws InvalidArgument unless the nodes form a proper binary tree.
  void check_structure() const;
  bool operator==(const RegressionTree&) const = default;
};

struct Model {
  std::vector<RegressionTree> trees;
  Params params;
  double base_score = 0.0;  // log-odds
  std::size_t n_features = 0;
  std::string fingerprint;  // embedding fingerprint of the features, if any
  std::vector<double> loss_curve;
  bool loss_recorded = false;
  std::string warning;      // set when training fell back to a base-rate model
};

/// Feature matrix plus per-feature row orderings, reusable across several
/// targets trained on the same rows.
class Dataset {
 public:
  explicit Dataset(Matrix features);

  const Matrix& features() const noexcept { return features_; }
  std::size_t rows() const noexcept { return features_.rows(); }
  std::size_t cols() const noexcept { return features_.cols(); }
  double value(std::size_t row, std::size_t feature) const noexcept { return by_feature_[feature * rows() + row]; }
  std::span<const std::uint32_t> sorted_rows(std::size_t feature) const noexcept {
    return {order_.data() + feature * rows(), rows()};
  }

 private:
  Matrix features_;
  std::vector<double> by_feature_;     // column-major copy
  std::vector<std::uint32_t> order_;   // per feature, rows by ascending value
};

struct TrainOptions {
  bool record_loss = true;
};

/// Trains exactly params.n_rounds trees. Targets are 0/1. Single-class
/// targets yield a tree-less model whose base_score is the smoothed base
/// rate, with Model::warning set.
Model train_binary(const Dataset& data, std::span<const int> targets, const Params& params,
                   const TrainOptions& options = {});
Model train_binary(const Matrix& features, std::span<const int> targets, const Params& params,
                   const TrainOptions& options = {});

double sigmoid(double margin) noexcept;

inline constexpr std::size_t kAllTrees = std::numeric_limits<std::size_t>::max();

/// base_score + eta * sum of leaf weights over the first max_trees trees.
double predict_margin(const Model& model, std::span<const double> x, std::size_t max_trees = kAllTrees);
/// sigmoid(predict_margin), strictly inside (0, 1). Throws DimensionMismatch.
double predict_proba(const Model& model, std::span<const double> x, std::size_t max_trees = kAllTrees);

/// Mean training log-loss after each round. Throws NotRecorded.
std::span<const double> training_loss_curve(const Model& model);

double mean_log_loss(std::span<const double> margins, std::span<const int> targets);

nlohmann::json to_json(const Model& model);
/// Throws FingerprintMismatch when expected_fingerprint is non-empty and differs.
Model model_from_json(const nlohmann::json& doc, const std::string& expected_fingerprint = {});
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path, const std::string& expected_fingerprint = {});

nlohmann::json params_to_json(const Params& params);
Params params_from_json(const nlohmann::json& doc);

}  // namespace uxfb::gbt
