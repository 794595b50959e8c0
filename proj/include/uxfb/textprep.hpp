#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace uxfb {

/// English function words with apostrophes removed ("don't" -> "dont"),
/// matching what preprocess() produces before the stopword check.
const std::set<std::string>& english_stopwords();

struct PreprocessConfig {
  std::set<std::string> stopwords = english_stopwords();
  bool strip_urls = true;
  bool strip_punctuation = true;
  bool lemmatize = true;
  bool lowercase = true;

  /// Throws InvalidArgument when a stopword contains an uppercase letter.
  void validate() const;
  bool operator==(const PreprocessConfig&) const = default;
};

/// Rule-based suffix stripping with a small exception table.
std::string lemmatize(std::string_view token);

/// Whitespace tokenization followed by URL removal, lowercasing, punctuation
/// stripping, stopword removal and lemmatization (each as configured).
std::vector<std::string> preprocess(std::string_view text, const PreprocessConfig& config);

enum class EmbeddingMode { SubwordHash, ExternalVectors };

struct EmbeddingOptions {
  std::size_t dim = 300;
  int ngram_min = 3;
  int ngram_max = 6;
  std::uint64_t bucket_count = 2'000'000;
  std::uint64_t seed = 42;

  bool operator==(const EmbeddingOptions&) const = default;
};

/// Immutable word-vector source. SubwordHash builds every word from hashed
/// character n-gram buckets; ExternalVectors looks words up in a loaded table
/// and falls back to the hashed n-grams for unknown words.
class EmbeddingModel {
 public:
  using VectorTable = std::unordered_map<std::string, std::vector<float>>;

  static EmbeddingModel subword(EmbeddingOptions options = {});
  static EmbeddingModel external(VectorTable vectors, EmbeddingOptions options);

  EmbeddingMode mode() const noexcept { return mode_; }
  std::size_t dim() const noexcept { return options_.dim; }
  const EmbeddingOptions& options() const noexcept { return options_; }
  const VectorTable& vectors() const noexcept { return vectors_; }

  /// Identifies the model configuration and, for external vectors, the table
  /// contents.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  EmbeddingModel(EmbeddingMode mode, EmbeddingOptions options, VectorTable vectors);

  EmbeddingMode mode_;
  EmbeddingOptions options_;
  VectorTable vectors_;
  std::string fingerprint_;
};

/// FNV-1a, as used for n-gram bucketing.
std::uint32_t fnv1a32(std::string_view bytes) noexcept;

/// Character n-grams of "<word>" (UTF-8 code point aware) with lengths in
/// [ngram_min, ngram_max], excluding the full padded word itself.
std::vector<std::string> char_ngrams(std::string_view word, int ngram_min, int ngram_max);

/// Unit-variance pseudo-random vector for one hash bucket.
std::vector<double> bucket_vector(std::uint64_t bucket, std::size_t dim, std::uint64_t seed);

/// L2-normalized word vector. Throws EmptyToken for "".
std::vector<double> embed_word(std::string_view word, const EmbeddingModel& model);

struct CommentVector {
  std::vector<double> values;
  std::size_t token_count = 0;
};

/// Mean of the unit word vectors of preprocess(text). Tokens are summed in
/// sorted order so any reordering of the words gives a bit-identical result.
CommentVector embed_comment(std::string_view text, const EmbeddingModel& model, const PreprocessConfig& config);

/// Reads the common text vector format: optional "count dim" header, then
/// "word v1 ... v_dim" per line.
EmbeddingModel load_vectors(const std::filesystem::path& path, std::size_t dim, EmbeddingOptions options = {});
void save_vectors(const std::filesystem::path& path, const EmbeddingModel& model);

/// An embedding model bundled with its preprocessing; what the classifier
/// consumes.
class Embedder {
 public:
  Embedder(EmbeddingModel model, PreprocessConfig config);

  const EmbeddingModel& model() const noexcept { return model_; }
  const PreprocessConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return model_.dim(); }

  /// Covers the embedding model and the preprocessing configuration.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  CommentVector embed(std::string_view text) const;

  /// Same result as calling embed() on each text; words shared between texts
  /// are embedded once.
  std::vector<CommentVector> embed_all(std::span<const std::string> texts, unsigned jobs = 1) const;

 private:
  EmbeddingModel model_;
  PreprocessConfig config_;
  std::string fingerprint_;
};

}  // namespace uxfb
