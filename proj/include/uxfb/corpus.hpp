#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uxfb/timeutil.hpp"

namespace uxfb {

enum class Sentiment { Positive, Mixed, Negative };
enum class LabelSource { Human, Model, Unlabeled };
enum class SurveyKind { Tutorial, AppUsability };

/// Sentiment rows in the order the analysis tables use.
inline constexpr std::array<Sentiment, 3> kSentimentRows = {Sentiment::Negative, Sentiment::Mixed,
                                                            Sentiment::Positive};

std::string_view to_string(Sentiment s);
std::string_view to_string(LabelSource s);
std::string_view to_string(SurveyKind k);
std::optional<Sentiment> parse_sentiment(std::string_view text);
std::optional<LabelSource> parse_label_source(std::string_view text);
std::optional<SurveyKind> parse_survey_kind(std::string_view text);

using LabelSet = std::set<std::string>;

struct Comment {
  std::string id;
  std::string product_id;
  Timestamp timestamp{};
  std::string text;
  std::string language = "unknown";
  std::optional<std::string> translated_text;
  std::optional<Sentiment> sentiment;
  LabelSet labels;
  LabelSource label_source = LabelSource::Unlabeled;

  /// The text the classifier and the summarizer read: the translation when
  /// one exists.
  const std::string& working_text() const { return translated_text ? *translated_text : text; }

  bool operator==(const Comment&) const = default;
};

struct LabelDefinition {
  std::string name;
  std::string definition;

  bool operator==(const LabelDefinition&) const = default;
};

/// Ordered codebook of topic labels. Every mutation returns a copy with a
/// higher version.
class TopicTaxonomy {
 public:
  TopicTaxonomy() = default;
  explicit TopicTaxonomy(std::vector<LabelDefinition> labels, int version = 1);

  const std::vector<LabelDefinition>& labels() const noexcept { return labels_; }
  int version() const noexcept { return version_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  TopicTaxonomy with_label(LabelDefinition label) const;
  TopicTaxonomy without_label(std::string_view name) const;
  TopicTaxonomy with_definition(std::string_view name, std::string definition) const;

  bool operator==(const TopicTaxonomy&) const = default;

 private:
  std::vector<LabelDefinition> labels_;
  int version_ = 1;
};

/// The ten-label codebook shipped by default.
TopicTaxonomy default_taxonomy();
TopicTaxonomy load_taxonomy(const std::filesystem::path& path);
void save_taxonomy(const std::filesystem::path& path, const TopicTaxonomy& taxonomy);

namespace question {
inline constexpr std::array<std::string_view, 5> kTutorialQuality = {"q1", "q2", "q3", "q4", "q5"};
inline constexpr std::string_view kNps = "nps";
inline constexpr std::string_view kPsat = "psat";
inline constexpr std::string_view kUxLiteEase = "ux_ease";
inline constexpr std::string_view kUxLiteDoesWhat = "ux_does_what";
}  // namespace question

struct SurveyResponse {
  std::string respondent_id;
  std::string product_id;
  Timestamp timestamp{};
  std::map<std::string, int> answers;
  std::optional<std::string> comment_id;
  SurveyKind kind = SurveyKind::Tutorial;

  std::optional<int> answer(std::string_view key) const;

  bool operator==(const SurveyResponse&) const = default;
};

/// Rating-range check for a response; returns the offending question key.
std::optional<std::string> find_out_of_range_answer(const SurveyResponse& response);

struct AuditRecord {
  std::string comment_id;
  LabelSet old_labels;
  LabelSet new_labels;
  LabelSource old_source = LabelSource::Unlabeled;
  Timestamp time{};
  std::string coder;

  bool operator==(const AuditRecord&) const = default;
};

/// Immutable snapshot of comments, responses and the codebook. Construction
/// enforces unique ids, labels drawn from the taxonomy, and that every
/// response's comment reference resolves.
class Corpus {
 public:
  Corpus();
  Corpus(std::vector<Comment> comments, std::vector<SurveyResponse> responses, TopicTaxonomy taxonomy,
         std::vector<AuditRecord> audit = {});

  const std::vector<Comment>& comments() const noexcept { return comments_; }
  const std::vector<SurveyResponse>& responses() const noexcept { return responses_; }
  const TopicTaxonomy& taxonomy() const noexcept { return taxonomy_; }
  const std::vector<AuditRecord>& audit() const noexcept { return audit_; }
  std::size_t size() const noexcept { return comments_.size(); }
  bool empty() const noexcept { return comments_.empty(); }

  const Comment* find(std::string_view id) const;

  Corpus with_comments(std::vector<Comment> comments) const;
  Corpus with_responses(std::vector<SurveyResponse> responses) const;
  Corpus with_taxonomy(TopicTaxonomy taxonomy) const;

  bool operator==(const Corpus& other) const;

 private:
  std::vector<Comment> comments_;
  std::vector<SurveyResponse> responses_;
  TopicTaxonomy taxonomy_;
  std::vector<AuditRecord> audit_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class FileFormat { Jsonl, Csv };

std::optional<FileFormat> format_from_path(const std::filesystem::path& path);

/// Reads comments. All malformed rows are collected into one SchemaError;
/// a repeated id raises DuplicateId.
Corpus ingest(const std::filesystem::path& path, FileFormat format,
              const TopicTaxonomy& taxonomy = default_taxonomy());
Corpus ingest(std::istream& in, FileFormat format, const TopicTaxonomy& taxonomy = default_taxonomy());

std::vector<SurveyResponse> ingest_responses(const std::filesystem::path& path, FileFormat format);
std::vector<SurveyResponse> ingest_responses(std::istream& in, FileFormat format);

void export_comments(std::ostream& out, std::span<const Comment> comments, FileFormat format = FileFormat::Jsonl);
void export_responses(std::ostream& out, std::span<const SurveyResponse> responses,
                      FileFormat format = FileFormat::Jsonl);
/// Writes through a temporary file and renames it into place.
void write_comments_file(const std::filesystem::path& path, std::span<const Comment> comments);
void write_responses_file(const std::filesystem::path& path, std::span<const SurveyResponse> responses);

std::string to_jsonl(const Comment& comment);
std::string to_jsonl(const SurveyResponse& response);
std::string to_jsonl(const AuditRecord& record);

struct Correction {
  std::string comment_id;
  LabelSet labels;
  std::string coder;
};

/// What happens when one batch carries different label sets for the same
/// comment (e.g. two coders disagree).
enum class ConflictPolicy { LastWins, Union, Reject };

struct MergeOptions {
  Timestamp time{};
  ConflictPolicy conflicts = ConflictPolicy::LastWins;
};

/// Applies human label corrections. Corrected comments become
/// LabelSource::Human; one audit record is added per effective change.
/// Re-applying a correction that is already in place is a no-op.
Corpus merge_corrections(const Corpus& corpus, std::span<const Correction> corrections,
                         const MergeOptions& options = {});

std::vector<Correction> read_corrections(const std::filesystem::path& path);
void append_audit_log(const std::filesystem::path& path, std::span<const AuditRecord> records);

struct LabelShare {
  std::string label;
  std::size_t count = 0;
  double share = 0.0;                     // count / comments
  std::int64_t percent_hundredths = 0;    // share in percent, rounded half away from zero to 2 dp

  std::string percent_text() const;       // e.g. "26.16%"
};

/// Rounds 100 * count / total to two decimals in exact integer arithmetic.
std::int64_t percent_hundredths(std::size_t count, std::size_t total);
std::string format_hundredths(std::int64_t hundredths);

/// Per-label counts in taxonomy order. Throws EmptyCorpus.
std::vector<LabelShare> label_shares(const Corpus& corpus);
/// Fraction of comments with two or more labels. Throws EmptyCorpus.
double multi_label_share(const Corpus& corpus);

struct CommentFilter {
  std::optional<std::string> product;
  std::optional<Period> period;
  std::optional<LabelSet> labels;  // any-of; an empty set places no constraint
  std::optional<Sentiment> sentiment;

  bool matches(const Comment& c) const;
};

/// Keeps matching comments. Responses are kept when they match product and
/// period and their comment, if any, survived; with comment-level predicates
/// (labels, sentiment) a response must reference a surviving comment.
Corpus filter(const Corpus& corpus, const CommentFilter& predicate);

}  // namespace uxfb
