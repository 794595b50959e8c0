#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uxfb/corpus.hpp"
#include "uxfb/rng.hpp"

// Synthetic survey data: comments whose text carries label-specific signal
// words, and survey responses whose sentiment x metric tables are fixed.

namespace uxfb::synth {

/// Comment text mentioning every label in `labels` (or generic filler when
/// empty), tinted by `sentiment`.
std::string comment_text(const LabelSet& labels, Sentiment sentiment, Rng& rng);

/// Draws 0-2 labels, weighting labels by the default taxonomy volumes.
LabelSet draw_labels(const TopicTaxonomy& taxonomy, Rng& rng);

/// `count` human-labeled comments for one product.
std::vector<Comment> labeled_comments(std::size_t count, std::uint64_t seed,
                                      const TopicTaxonomy& taxonomy = default_taxonomy());

struct SurveyOptions {
  std::uint64_t seed = 42;
  int year = 2024;
  /// Rows Negative, Mixed, Positive; columns Detractor, Passive, Promoter.
  std::vector<std::vector<std::int64_t>> tutorial_table = {{120, 52, 154}, {4, 7, 27}, {5, 13, 157}};
  /// Rows Negative, Mixed, Positive; columns satisfaction 1..5.
  std::vector<std::vector<std::int64_t>> app_table = {
      {893, 826, 548, 539, 106}, {45, 66, 161, 345, 135}, {35, 3, 15, 232, 380}};
  std::vector<std::string> tutorial_products = {"tutorial-basics", "tutorial-advanced"};
  std::vector<std::string> app_products = {"app-portal", "app-mobile", "app-admin"};
  std::size_t tutorial_without_comment = 1000;
  std::size_t app_without_comment = 1000;
  std::string small_product = "app-legacy";  // gets small_product_comments comments, no responses
  std::size_t small_product_comments = 19;
  double human_fraction = 0.25;  // share of comments carrying human labels
};

struct SurveyData {
  std::vector<Comment> comments;
  std::vector<SurveyResponse> responses;
};

SurveyData survey_corpus(const SurveyOptions& options, const TopicTaxonomy& taxonomy = default_taxonomy());

}  // namespace uxfb::synth
