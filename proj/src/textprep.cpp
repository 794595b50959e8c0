#include "uxfb/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "uxfb/error.hpp"
#include "uxfb/parallel.hpp"
#include "uxfb/rng.hpp"

namespace uxfb {

const std::set<std::string>& english_stopwords() {
  static const std::set<std::string> words = {
      "a",        "about",    "above",   "after",    "again",    "against", "ain",      "all",      "am",
      "an",       "and",      "any",     "are",      "aren",     "arent",   "as",       "at",       "be",
      "because",  "been",     "before",  "being",    "below",    "between", "both",     "but",      "by",
      "can",      "couldn",   "couldnt", "d",        "did",      "didn",    "didnt",    "do",       "does",
      "doesn",    "doesnt",   "doing",   "don",      "dont",     "down",    "during",   "each",     "few",
      "for",      "from",     "further", "had",      "hadn",     "hadnt",   "has",      "hasn",     "hasnt",
      "have",     "haven",    "havent",  "having",   "he",       "her",     "here",     "hers",     "herself",
      "him",      "himself",  "his",     "how",      "i",        "if",      "in",       "into",     "is",
      "isn",      "isnt",     "it",      "its",      "itself",   "just",    "ll",       "m",        "ma",
      "me",       "mightn",   "mightnt", "more",     "most",     "mustn",   "mustnt",   "my",       "myself",
      "needn",    "neednt",   "no",      "nor",      "not",      "now",     "o",        "of",       "off",
      "on",       "once",     "only",    "or",       "other",    "our",     "ours",     "ourselves", "out",
      "over",     "own",      "re",      "s",        "same",     "shan",    "shant",    "she",      "shes",
      "should",   "shouldve", "shouldn", "shouldnt", "so",       "some",    "such",     "t",        "than",
      "that",     "thatll",   "the",     "their",    "theirs",   "them",    "themselves", "then",   "there",
      "these",    "they",     "this",    "those",    "through",  "to",      "too",      "under",    "until",
      "up",       "ve",       "very",    "was",      "wasn",     "wasnt",   "we",       "were",     "weren",
      "werent",   "what",     "when",    "where",    "which",    "while",   "who",      "whom",     "why",
      "will",     "with",     "won",     "wont",     "wouldn",   "wouldnt", "y",        "you",      "youd",
      "youll",    "youre",    "youve",   "your",     "yours",    "yourself", "yourselves",
  };
  return words;
}

void PreprocessConfig::validate() const {
  for (const auto& w : stopwords)
    if (std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isupper(c); }))
      throw Error(ErrorKind::InvalidArgument, "stopword must be lowercase: " + w);
}

// ---------------------------------------------------------------------------
// lemmatizer
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string, std::less<>>& lemma_exceptions() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"added", "add"},       {"adding", "add"},        {"always", "always"},   {"am", "be"}, {"menus", "menu"},
      {"anything", "anything"}, {"are", "be"},          {"bad", "bad"},         {"been", "be"},
      {"being", "be"},        {"best", "good"},         {"better", "good"},     {"bias", "bias"},
      {"bring", "bring"},     {"canvas", "canvas"},     {"children", "child"},  {"did", "do"},
      {"does", "do"},         {"doing", "do"},          {"done", "do"},         {"during", "during"},
      {"evening", "evening"}, {"everything", "everything"}, {"gone", "go"},     {"goes", "go"},
      {"got", "get"},         {"gotten", "get"},        {"had", "have"},        {"has", "have"},
      {"having", "have"},     {"is", "be"},             {"lens", "lens"},       {"made", "make"},
      {"men", "man"},         {"morning", "morning"},   {"news", "news"},       {"nothing", "nothing"},
      {"people", "person"},   {"ran", "run"},           {"series", "series"},   {"something", "something"},
      {"spring", "spring"},   {"string", "string"},     {"thing", "thing"},     {"things", "thing"},
      {"thus", "thus"},       {"used", "use"},          {"uses", "use"},        {"using", "use"},
      {"was", "be"},          {"went", "go"},           {"were", "be"},         {"women", "woman"},
      {"worse", "bad"},       {"worst", "bad"},         {"yes", "yes"},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// After removing "-ing"/"-ed": undo consonant doubling, or restore a silent e.
std::string restore_stem(std::string stem) {
  const auto n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 'l' && stem[n - 1] != 's' &&
      stem[n - 1] != 'z') {
    stem.pop_back();
    return stem;
  }
  if (ends_with(stem, "at") || ends_with(stem, "iz") || ends_with(stem, "bl") || ends_with(stem, "ur")) {
    return stem + "e";
  }
  if (n == 3 && !is_vowel(stem[0]) && is_vowel(stem[1]) && !is_vowel(stem[2]) && stem[2] != 'w' && stem[2] != 'x' &&
      stem[2] != 'y') {
    return stem + "e";
  }
  return stem;
}

bool all_ascii_alpha(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= 'a' && c <= 'z'; });
}

}  // namespace

std::string lemmatize(std::string_view token) {
  if (auto it = lemma_exceptions().find(token); it != lemma_exceptions().end()) return it->second;
  std::string w(token);
  if (w.size() <= 3 || !all_ascii_alpha(w)) return w;
  const auto n = w.size();
  if (ends_with(w, "ies") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "sses") || ends_with(w, "shes") || ends_with(w, "ches") || ends_with(w, "xes") ||
      ends_with(w, "zzes"))
    return w.substr(0, n - 2);
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (ends_with(w, "s")) return w.substr(0, n - 1);
  if (ends_with(w, "ing") && n > 5) return restore_stem(w.substr(0, n - 3));
  if (ends_with(w, "ied") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "ed") && n > 4) return restore_stem(w.substr(0, n - 2));
  return w;
}

// ---------------------------------------------------------------------------
// preprocessing
// ---------------------------------------------------------------------------

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const auto start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

bool looks_like_url(std::string_view token) {
  std::string lower(token);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") ||
         lower.find("://") != std::string::npos;
}

// Apostrophes (ASCII and U+2019/U+2018) are deleted so contractions stay one
// token; every other punctuation mark becomes a space.
std::string strip_punctuation(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (std::size_t i = 0; i < token.size(); ++i) {
    const auto c = static_cast<unsigned char>(token[i]);
    if (c == '\'') continue;
    if (c < 0x80) {
      out += std::ispunct(c) ? ' ' : static_cast<char>(c);
      continue;
    }
    // U+2010..U+201F (dashes, curly quotes), U+2026 (ellipsis), U+00AB/U+00BB (guillemets)
    if (c == 0xE2 && i + 2 < token.size() && static_cast<unsigned char>(token[i + 1]) == 0x80) {
      const auto third = static_cast<unsigned char>(token[i + 2]);
      if (third >= 0x90 && third <= 0x9F) {
        if (third != 0x98 && third != 0x99) out += ' ';
        i += 2;
        continue;
      }
      if (third == 0xA6) {
        out += ' ';
        i += 2;
        continue;
      }
    }
    if (c == 0xC2 && i + 1 < token.size()) {
      const auto second = static_cast<unsigned char>(token[i + 1]);
      if (second == 0xAB || second == 0xBB || second == 0xBF || second == 0xA1) {
        out += ' ';
        ++i;
        continue;
      }
    }
    out += static_cast<char>(c);
  }
  return out;
}

}  // namespace

std::vector<std::string> preprocess(std::string_view text, const PreprocessConfig& config) {
  std::vector<std::string> tokens;
  for (auto& raw : split_whitespace(text)) {
    if (config.strip_urls && looks_like_url(raw)) continue;
    if (config.lowercase)
      for (auto& c : raw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (config.strip_punctuation) {
      for (auto& piece : split_whitespace(strip_punctuation(raw))) tokens.push_back(std::move(piece));
    } else {
      tokens.push_back(std::move(raw));
    }
  }
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (auto& t : tokens) {
    if (config.stopwords.contains(t)) continue;
    out.push_back(config.lemmatize ? lemmatize(t) : std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// embeddings
// ---------------------------------------------------------------------------

std::uint32_t fnv1a32(std::string_view bytes) noexcept {
  std::uint32_t h = 2166136261u;
  for (char c : bytes) {
    h ^= static_cast<std::uint32_t>(static_cast<unsigned char>(c));
    h *= 16777619u;
  }
  return h;
}

namespace {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) noexcept {
  for (char c : bytes) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string options_fingerprint(EmbeddingMode mode, const EmbeddingOptions& o) {
  return std::string(mode == EmbeddingMode::SubwordHash ? "subword" : "external") + ";dim=" + std::to_string(o.dim) +
         ";ngram=" + std::to_string(o.ngram_min) + "-" + std::to_string(o.ngram_max) +
         ";buckets=" + std::to_string(o.bucket_count) + ";seed=" + std::to_string(o.seed);
}

std::uint64_t table_digest(const EmbeddingModel::VectorTable& table) {
  std::vector<const std::string*> words;
  words.reserve(table.size());
  for (const auto& [w, v] : table) words.push_back(&w);
  std::sort(words.begin(), words.end(), [](auto* a, auto* b) { return *a < *b; });
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto* w : words) {
    h = fnv1a64(*w, h);
    h = fnv1a64(std::string_view("\0", 1), h);
    const auto& v = table.at(*w);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)), h);
  }
  return h;
}

void validate_options(const EmbeddingOptions& o) {
  if (o.dim == 0) throw Error(ErrorKind::InvalidArgument, "embedding dim must be positive");
  if (o.ngram_min < 1 || o.ngram_min > o.ngram_max)
    throw Error(ErrorKind::InvalidArgument, "require 1 <= ngram_min <= ngram_max");
  if (o.bucket_count == 0) throw Error(ErrorKind::InvalidArgument, "bucket_count must be positive");
}

// Byte offsets of code point starts, plus the end offset.
std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offsets.push_back(i);
  offsets.push_back(s.size());
  return offsets;
}

std::vector<double> normalized(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
  }
  return v;
}

std::vector<double> subword_vector(std::string_view word, const EmbeddingOptions& o) {
  std::vector<double> sum(o.dim, 0.0);
  auto add_bucket = [&](std::string_view piece) {
    const auto bucket = static_cast<std::uint64_t>(fnv1a32(piece)) % o.bucket_count;
    Rng rng(derive_seed({o.seed, bucket}));
    constexpr double kHalfWidth = 1.7320508075688772;  // uniform on [-sqrt 3, sqrt 3) has unit variance
    for (auto& x : sum) x += (2.0 * rng.uniform() - 1.0) * kHalfWidth;
  };
  add_bucket("<" + std::string(word) + ">");
  for (const auto& g : char_ngrams(word, o.ngram_min, o.ngram_max)) add_bucket(g);
  return normalized(std::move(sum));
}

}  // namespace

std::vector<std::string> char_ngrams(std::string_view word, int ngram_min, int ngram_max) {
  const std::string padded = "<" + std::string(word) + ">";
  const auto offsets = code_point_offsets(padded);
  const auto chars = offsets.size() - 1;
  std::vector<std::string> out;
  for (std::size_t start = 0; start < chars; ++start) {
    for (int n = ngram_min; n <= ngram_max; ++n) {
      const auto end = start + static_cast<std::size_t>(n);
      if (end > chars) break;
      if (start == 0 && end == chars) continue;  // the whole word has its own bucket
      out.push_back(padded.substr(offsets[start], offsets[end] - offsets[start]));
    }
  }
  return out;
}

std::vector<double> bucket_vector(std::uint64_t bucket, std::size_t dim, std::uint64_t seed) {
  std::vector<double> v(dim);
  Rng rng(derive_seed({seed, bucket}));
  for (auto& x : v) x = (2.0 * rng.uniform() - 1.0) * 1.7320508075688772;
  return v;
}

EmbeddingModel::EmbeddingModel(EmbeddingMode mode, EmbeddingOptions options, VectorTable vectors)
    : mode_(mode), options_(options), vectors_(std::move(vectors)) {
  validate_options(options_);
  for (const auto& [w, v] : vectors_)
    if (v.size() != options_.dim)
      throw Error(ErrorKind::DimensionMismatch, "vector for '" + w + "' has length " + std::to_string(v.size()));
  fingerprint_ = options_fingerprint(mode_, options_);
  if (mode_ == EmbeddingMode::ExternalVectors) fingerprint_ += ";table=" + hex64(table_digest(vectors_));
}

EmbeddingModel EmbeddingModel::subword(EmbeddingOptions options) {
  return EmbeddingModel(EmbeddingMode::SubwordHash, options, {});
}

EmbeddingModel EmbeddingModel::external(VectorTable vectors, EmbeddingOptions options) {
  return EmbeddingModel(EmbeddingMode::ExternalVectors, options, std::move(vectors));
}

std::vector<double> embed_word(std::string_view word, const EmbeddingModel& model) {
  if (word.empty()) throw Error(ErrorKind::EmptyToken, "cannot embed an empty token");
  if (model.mode() == EmbeddingMode::ExternalVectors) {
    const auto it = model.vectors().find(std::string(word));
    if (it != model.vectors().end()) {
      std::vector<double> v(it->second.begin(), it->second.end());
      auto unit = normalized(std::move(v));
      if (std::any_of(unit.begin(), unit.end(), [](double x) { return x != 0.0; })) return unit;
    }
  }
  return subword_vector(word, model.options());
}

namespace {

template <typename Lookup>
CommentVector average_tokens(std::vector<std::string> tokens, std::size_t dim, Lookup&& lookup) {
  CommentVector out;
  out.values.assign(dim, 0.0);
  out.token_count = tokens.size();
  if (tokens.empty()) return out;
  std::sort(tokens.begin(), tokens.end());
  for (const auto& t : tokens) {
    const std::vector<double>& v = lookup(t);
    for (std::size_t i = 0; i < dim; ++i) out.values[i] += v[i];
  }
  const double n = static_cast<double>(tokens.size());
  for (auto& x : out.values) x /= n;
  return out;
}

}  // namespace

CommentVector embed_comment(std::string_view text, const EmbeddingModel& model, const PreprocessConfig& config) {
  std::vector<double> scratch;
  return average_tokens(preprocess(text, config), model.dim(), [&](const std::string& t) -> const std::vector<double>& {
    scratch = embed_word(t, model);
    return scratch;
  });
}

EmbeddingModel load_vectors(const std::filesystem::path& path, std::size_t dim, EmbeddingOptions options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open vector file " + path.string());
  options.dim = dim;
  EmbeddingModel::VectorTable table;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    std::istringstream fields(text);
    std::vector<std::string> parts;
    for (std::string p; fields >> p;) parts.push_back(std::move(p));
    if (parts.empty()) continue;
    if (line == 1 && parts.size() == 2) {
      std::size_t count = 0, header_dim = 0;
      auto [p1, e1] = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), count);
      auto [p2, e2] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), header_dim);
      if (e1 == std::errc{} && e2 == std::errc{} && p1 == parts[0].data() + parts[0].size() &&
          p2 == parts[1].data() + parts[1].size()) {
        if (header_dim != dim)
          throw LineError(ErrorKind::DimensionMismatch, line,
                          "header declares dim " + std::to_string(header_dim) + ", expected " + std::to_string(dim));
        continue;
      }
    }
    if (parts.size() - 1 != dim)
      throw LineError(ErrorKind::DimensionMismatch, line,
                      "expected " + std::to_string(dim) + " values, found " + std::to_string(parts.size() - 1));
    std::vector<float> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const auto& p = parts[i + 1];
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v[i]);
      if (ec != std::errc{} || ptr != p.data() + p.size() || !std::isfinite(v[i]))
        throw LineError(ErrorKind::Parse, line, "not a number: " + p);
    }
    table[parts[0]] = std::move(v);
  }
  return EmbeddingModel::external(std::move(table), options);
}

void save_vectors(const std::filesystem::path& path, const EmbeddingModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  std::vector<const std::string*> words;
  for (const auto& [w, v] : model.vectors()) words.push_back(&w);
  std::sort(words.begin(), words.end(), [](auto* a, auto* b) { return *a < *b; });
  out << words.size() << ' ' << model.dim() << '\n';
  char buf[32];
  for (const auto* w : words) {
    out << *w;
    for (float x : model.vectors().at(*w)) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// embedder
// ---------------------------------------------------------------------------

namespace {

std::string preprocess_fingerprint(const PreprocessConfig& c) {
  std::string joined;
  for (const auto& w : c.stopwords) joined += w + '\n';
  return std::string("prep=") + (c.strip_urls ? "u" : "-") + (c.strip_punctuation ? "p" : "-") +
         (c.lemmatize ? "l" : "-") + (c.lowercase ? "c" : "-") + ":" + hex64(fnv1a64(joined));
}

}  // namespace

Embedder::Embedder(EmbeddingModel model, PreprocessConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.validate();
  fingerprint_ = model_.fingerprint() + ";" + preprocess_fingerprint(config_);
}

CommentVector Embedder::embed(std::string_view text) const { return embed_comment(text, model_, config_); }

std::vector<CommentVector> Embedder::embed_all(std::span<const std::string> texts, unsigned jobs) const {
  std::vector<std::vector<std::string>> tokens(texts.size());
  parallel_for(texts.size(), jobs, [&](std::size_t i) { tokens[i] = preprocess(texts[i], config_); });

  std::vector<std::string> vocab;
  for (const auto& ts : tokens) vocab.insert(vocab.end(), ts.begin(), ts.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  std::vector<std::vector<double>> word_vectors(vocab.size());
  parallel_for(vocab.size(), jobs, [&](std::size_t i) { word_vectors[i] = embed_word(vocab[i], model_); });

  std::vector<CommentVector> out(texts.size());
  parallel_for(texts.size(), jobs, [&](std::size_t i) {
    out[i] = average_tokens(std::move(tokens[i]), model_.dim(), [&](const std::string& t) -> const std::vector<double>& {
      const auto it = std::lower_bound(vocab.begin(), vocab.end(), t);
      return word_vectors[static_cast<std::size_t>(it - vocab.begin())];
    });
  });
  return out;
}

}  // namespace uxfb
