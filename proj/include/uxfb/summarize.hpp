#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uxfb/corpus.hpp"
#include "uxfb/textprep.hpp"

namespace uxfb::summ {

class Transport;

struct EndpointConfig {
  std::string url;               // http://host:port/path
  double timeout_seconds = 30.0;
  int retries = 2;               // extra attempts after a timeout
  int max_tokens = 2048;
  double temperature = 0.0;
  bool fallback_offline = false; // use the extractive draft when the endpoint fails
};

struct SummaryConfig {
  int min_total_comments = 20;
  /// Unset: max(4, ceil(0.02 * total comments)).
  std::optional<int> min_category_comments;
  int max_categories = 4;
  std::set<std::string> include_small_categories;  // operator override for homogeneous small categories
  int snippet_count = 5;
  int min_supported_citations = 1;  // per attribute
  int balance_tolerance = 1;        // snippets per sentiment class
  int offline_citations = 5;        // citations per attribute in offline drafts
  int low_volume_max = 50;          // banner for products with at most this many comments
  std::optional<EndpointConfig> endpoint;
  std::uint64_t seed = 42;

  /// Throws Config on invalid values.
  void validate() const;
  int category_threshold(std::size_t total_comments) const;
};

struct CategoryCount {
  std::string name;
  std::size_t comments = 0;
  bool override_included = false;

  bool operator==(const CategoryCount&) const = default;
};

struct Eligibility {
  bool eligible = false;
  std::size_t total = 0;
  int category_threshold = 0;
  std::vector<CategoryCount> categories;  // ranked by volume, then overrides
  std::string reason;                     // set when not eligible
};

/// Ranks categories by comment count (ties by name) and keeps the top
/// max_categories that reach the threshold; override categories below the
/// threshold are appended.
Eligibility eligible(std::span<const Comment> comments, const SummaryConfig& config);

struct PromptComment {
  std::string id;
  std::string text;
  std::vector<std::string> labels;
};

struct PromptDocument {
  std::string instructions;             // identical for every product under one config
  std::vector<std::string> categories;  // categories to summarize, ranked
  std::vector<PromptComment> comments;

  std::string render() const;
};

/// Throws NotEligible.
PromptDocument build_prompt(std::span<const Comment> comments, const Eligibility& eligibility, const SummaryConfig& config);

/// The fixed instructional section for a config.
std::string instructions(const SummaryConfig& config);

struct Citation {
  std::string comment_id;
  std::string extract;
  bool operator==(const Citation&) const = default;
};

struct Attribute {
  std::string statement;
  std::vector<Citation> citations;
  bool operator==(const Attribute&) const = default;
};

struct CategorySummary {
  std::string name;
  std::vector<Attribute> attributes;
  bool operator==(const CategorySummary&) const = default;
};

struct SummaryDraft {
  std::string product_id;
  std::string mode;  // "offline" or "endpoint"
  std::vector<CategorySummary> categories;
  bool operator==(const SummaryDraft&) const = default;
};

nlohmann::json to_json(const SummaryDraft& draft);
SummaryDraft draft_from_json(const nlohmann::json& doc);

/// Extractive draft: per category, the comment closest (cosine) to the
/// category centroid becomes the statement, citing itself first and then the
/// next closest comments, `citations` in total.
SummaryDraft generate_offline(std::span<const Comment> comments, const PromptDocument& prompt, const Embedder& embedder,
                              int citations = 5);

/// Endpoint mode when config.endpoint is set, otherwise offline. Throws
/// EndpointTimeout, EndpointError, ResponseSchema unless fallback_offline.
SummaryDraft generate(std::span<const Comment> comments, const PromptDocument& prompt, const Embedder& embedder,
                      const SummaryConfig& config, Transport* transport = nullptr);

enum class Status { Supported, MissingId, ExtractNotFound, UnderSupported };
std::string_view to_string(Status s);

struct AttributeReport {
  std::string category;
  std::size_t index = 0;  // attribute index within its category
  Status status = Status::Supported;
  std::vector<Status> citations;
  std::size_t supported = 0;
};

struct BalanceReport {
  std::map<std::string, std::size_t> corpus;
  std::map<std::string, std::size_t> snippets;
  std::map<std::string, std::size_t> expected;  // largest-remainder quotas
  int deviation = 0;                            // max |snippets - expected| over classes
};

struct Snippet {
  std::string comment_id;
  std::string text;
  std::string sentiment;
  std::size_t cited_by = 0;
  bool operator==(const Snippet&) const = default;
};

struct ValidationReport {
  std::vector<AttributeReport> attributes;
  std::optional<BalanceReport> balance;

  bool publishable(int balance_tolerance) const;
};

/// Whitespace runs collapsed, ASCII case folded, curly quotes straightened.
std::string normalize_for_match(std::string_view text);

ValidationReport validate(const SummaryDraft& draft, std::span<const Comment> sources, const SummaryConfig& config,
                          std::span<const Snippet> snippets = {});

/// Class name used for sentiment balance ("negative", ..., "unclassified").
std::string sentiment_class(const Comment& c);

/// Largest-remainder apportionment of `seats` over `counts`; remainder ties
/// go to the larger count, then the earlier key.
std::map<std::string, std::size_t> apportion(const std::vector<std::pair<std::string, std::size_t>>& counts, std::size_t seats);

/// Picks snippet_count supported citations whose sentiment mix follows the
/// source comments. Throws InsufficientSupported.
std::vector<Snippet> select_snippets(const SummaryDraft& draft, std::span<const Comment> sources,
                                     const SummaryConfig& config);

struct RepairResult {
  SummaryDraft draft;
  std::vector<std::string> changes;
};

/// Drops failing citations, then attributes left under-supported, then empty
/// categories. Citations of comments in `expand` get the full comment text.
RepairResult repair(const SummaryDraft& draft, const ValidationReport& report, std::span<const Comment> sources,
                    const SummaryConfig& config, const std::set<std::string>& expand = {});

/// Category-prefaced paragraphs, citations, snippets, low-volume banner.
std::string render_markdown(const SummaryDraft& draft, std::span<const Snippet> snippets, std::size_t total_comments,
                            const SummaryConfig& config);

}  // namespace uxfb::summ
