#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uxfb/corpus.hpp"
#include "uxfb/gbt.hpp"
#include "uxfb/matrix.hpp"
#include "uxfb/textprep.hpp"

namespace uxfb::ml {

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold;  // fold index per example

  std::vector<std::size_t> fold_sizes() const;
  std::vector<std::size_t> training_rows(int f) const;
  std::vector<std::size_t> validation_rows(int f) const;
};

/// Multi-label stratified k-fold assignment.
///
/// Iterative stratification first: repeatedly take the label with the fewest
/// unassigned examples and place each of its examples in the fold with the
/// largest remaining demand for that label (ties: largest remaining fold
/// size, then a seeded random pick). A local search then moves or swaps
/// examples while that lowers the number of (label, fold) counts outside
/// [floor(f/k), ceil(f/k)] for labels with frequency f >= k.
///
/// Throws InvalidK unless 2 <= k <= labelsets.size().
FoldAssignment stratified_kfold(std::span<const LabelSet> labelsets, int k, std::uint64_t seed);

struct ParamGrid {
  std::vector<double> learning_rate = {0.05, 0.1, 0.3};
  std::vector<int> max_depth = {3, 5, 7};
  std::vector<double> min_loss_reduction = {0.0, 1.0};
  std::vector<double> l2_weight = {1.0, 10.0};
  std::vector<double> l1_weight = {0.0, 1.0};
  std::vector<double> min_child_weight = {1.0};
  std::vector<int> n_rounds = {100, 300};

  std::size_t size() const;
  /// Cartesian product; learning_rate varies slowest and n_rounds fastest.
  std::vector<gbt::Params> cells() const;
};

struct CellScore {
  gbt::Params params;
  double mean_micro_f1 = 0.0;
  std::vector<double> fold_micro_f1;
  bool failed = false;
  std::string failure;
};

struct GridSearchResult {
  gbt::Params best;
  std::size_t best_index = 0;
  std::vector<CellScore> cells;
  std::vector<std::string> excluded_labels;  // fewer than 2 positives, not scored
};

/// Scores every grid cell by mean micro-F1 over the same k folds and returns
/// the argmax (ties: fewer rounds, then shallower trees, then grid order).
/// A cell that fails on any fold scores 0 and is flagged.
GridSearchResult grid_search(const Matrix& features, std::span<const LabelSet> labelsets,
                             const std::vector<std::string>& labels, const ParamGrid& grid, int k,
                             std::uint64_t seed, unsigned jobs = 1);

struct LabelHead {
  std::string label;
  gbt::Model model;
  double threshold = 0.5;
  bool never_predict = false;
  std::size_t positives = 0;
};

struct ModelMetadata {
  int model_version = 1;
  std::size_t training_size = 0;
  std::string trained_at;  // latest timestamp in the training data unless set explicitly
};

struct OneVsRestModel {
  std::vector<LabelHead> heads;  // taxonomy order
  int taxonomy_version = 0;
  std::string fingerprint;
  ModelMetadata metadata;
  std::vector<std::string> warnings;

  const LabelHead* head(std::string_view label) const;
};

struct TrainConfig {
  gbt::Params shared;
  std::map<std::string, gbt::Params> per_label;  // overrides `shared` for the named labels
  bool tune_thresholds = false;
  int threshold_folds = 5;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
};

/// One binary booster per taxonomy label; the target of label L is whether L
/// is in a row's label set. Labels without positives get a never-predict
/// head and a warning.
OneVsRestModel train_ovr(const Matrix& features, std::span<const LabelSet> labelsets, const TopicTaxonomy& taxonomy,
                         const std::string& fingerprint, const TrainConfig& config);

struct Prediction {
  LabelSet labels;
  std::map<std::string, double> probabilities;
};

/// A label is predicted iff its probability >= its threshold. Throws
/// FingerprintMismatch when `fingerprint` differs from the model's.
Prediction predict_labels(const OneVsRestModel& model, std::span<const double> features,
                          const std::string& fingerprint);

/// Sets a head's threshold; thresholds must lie in [0, 1).
void set_threshold(OneVsRestModel& model, std::string_view label, double threshold);

struct LabelMetrics {
  std::string label;
  std::size_t count = 0;  // comments carrying the label in the ground truth
  double share = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool precision_undefined = false;  // no predictions for the label
  bool recall_undefined = false;     // no true instances of the label
};

struct MicroMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  std::vector<LabelMetrics> per_label;
  MicroMetrics micro;
  std::size_t comments = 0;
  std::string protocol;  // how predictions were obtained, e.g. "5-fold cross-validation"
};

double f1_score(double precision, double recall);

/// Throws LengthMismatch, UnknownLabel.
EvalReport evaluate(std::span<const LabelSet> predictions, std::span<const LabelSet> truth,
                    const TopicTaxonomy& taxonomy, std::string protocol = {});

/// label,count,share,precision,recall,f1 rows plus a trailing micro row.
std::string to_csv(const EvalReport& report);
std::string to_markdown(const EvalReport& report);

/// Full batch retrain on every human-labeled comment of the corpus, under
/// the corpus' current taxonomy. The model version increments. Throws
/// EmbeddingMismatch when the embedder differs from the one the previous
/// model used.
OneVsRestModel retrain(const OneVsRestModel& previous, const Corpus& corpus, const Embedder& embedder,
                       const TrainConfig& config);

/// Rows of the training pool: human-labeled comments.
std::vector<const Comment*> training_pool(const Corpus& corpus);

void save_bundle(const std::filesystem::path& dir, const OneVsRestModel& model);
/// Throws FingerprintMismatch when expected_fingerprint is non-empty and differs.
OneVsRestModel load_bundle(const std::filesystem::path& dir, const std::string& expected_fingerprint = {});

}  // namespace uxfb::ml
