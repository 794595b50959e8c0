#include "uxfb/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "uxfb/error.hpp"

namespace uxfb::cfg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TOML subset
// ---------------------------------------------------------------------------

namespace {

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const { throw LineError(ErrorKind::Config, line_, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  std::string key() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  json value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

 private:
  json basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case 'r': c = '\r'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json literal_string() {
    ++pos_;
    const auto end = s_.find('\'', pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  json array() {
    ++pos_;
    json out = json::array();
    while (true) {
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      if (pos_ >= s_.size()) fail("unterminated array (arrays must fit on one line)");
      out.push_back(value());
      skip_ws();
      if (peek() == ',') ++pos_;
      else if (peek() != ']') fail("expected ',' or ']' in array");
    }
  }

  json number() {
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '+' ||
                                s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == '_'))
      ++pos_;
    std::string tok;
    for (char ch : s_.substr(start, pos_ - start))
      if (ch != '_') tok += ch;
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double d = std::stod(tok, &used);
        if (used == tok.size()) return d;
      } else {
        const long long v = std::stoll(tok, &used, 10);
        if (used == tok.size()) return static_cast<std::int64_t>(v);
      }
    } catch (const std::exception&) {
    }
    fail("invalid value '" + tok + "'");
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

json parse_toml(std::string_view text) {
  json root = json::object();
  json* table = &root;
  std::set<std::string> seen_tables;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    LineParser p(line, line_no);
    if (p.at_end()) continue;
    if (p.peek() == '[') {
      p.expect('[');
      if (p.peek() == '[') p.fail("arrays of tables are not supported");
      std::vector<std::string> path{p.key()};
      p.skip_ws();
      while (p.peek() == '.') {
        p.expect('.');
        path.push_back(p.key());
        p.skip_ws();
      }
      p.expect(']');
      if (!p.at_end()) p.fail("unexpected text after table header");
      std::string joined;
      for (const auto& k : path) joined += (joined.empty() ? "" : ".") + k;
      if (!seen_tables.insert(joined).second) p.fail("table [" + joined + "] defined twice");
      table = &root;
      for (const auto& k : path) {
        auto& next = (*table)[k];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) p.fail("'" + k + "' is not a table");
        table = &next;
      }
    } else {
      const auto k = p.key();
      p.skip_ws();
      if (p.peek() == '.') p.fail("dotted keys are not supported");
      p.expect('=');
      auto v = p.value();
      if (!p.at_end()) p.fail("unexpected text after value");
      if (table->contains(k)) p.fail("key '" + k + "' defined twice");
      (*table)[k] = std::move(v);
    }
    if (end == text.size()) break;
  }
  return root;
}

// ---------------------------------------------------------------------------
// typed reading with unknown-key rejection
// ---------------------------------------------------------------------------

namespace {

class Table {
 public:
  Table(const json* doc, std::string name) : doc_(doc), name_(std::move(name)) {
    if (doc_ && !doc_->is_object()) fail("", "must be a table");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw Error(ErrorKind::Config, (name_.empty() ? key : key.empty() ? name_ : name_ + "." + key) + ": " + msg);
  }

  Table sub(const std::string& key) {
    used_.insert(key);
    if (!doc_ || !doc_->contains(key)) return Table(nullptr, qualified(key));
    return Table(&doc_->at(key), qualified(key));
  }

  bool has(const std::string& key) const { return doc_ && doc_->contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    used_.insert(key);
    if (!doc_ || !doc_->contains(key)) return;
    out = convert<T>(doc_->at(key), key);
  }

  void read_path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    read(key, s);
    if (has(key)) out = s.empty() || base.empty() ? std::filesystem::path(s) : base / s;
    else if (!out.empty() && out.is_relative() && !base.empty()) out = base / out;
  }

  void finish() const {
    if (!doc_) return;
    for (const auto& [k, _] : doc_->items())
      if (!used_.contains(k)) throw Error(ErrorKind::Config, "unknown key '" + qualified(k) + "'");
  }

 private:
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  template <typename T>
  T convert(const json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(key, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(key, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) fail(key, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(key, "expected an integer");
      const auto i = v.get<std::int64_t>();
      if (std::is_unsigned_v<T> && i < 0) fail(key, "must not be negative");
      return static_cast<T>(i);
    } else {
      if (!v.is_array()) fail(key, "expected an array");
      T out;
      for (const auto& item : v) out.push_back(convert<typename T::value_type>(item, key));
      return out;
    }
  }

  const json* doc_;
  std::string name_;
  std::set<std::string> used_;
};

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
  if (jobs < 1) fail("jobs must be >= 1");
  if (!period.empty() && !parse_period(period)) fail("period '" + period + "' is not YYYY, YYYYQn or a date range");
  if (embedding_mode != "subword" && embedding_mode != "external") fail("embedding.mode must be subword or external");
  if (embedding_mode == "external" && paths.vectors.empty()) fail("embedding.mode = external needs paths.vectors");
  if (embedding.dim < 1) fail("embedding.dim must be >= 1");
  if (embedding.ngram_min < 1 || embedding.ngram_max < embedding.ngram_min) fail("embedding n-gram range is invalid");
  if (embedding.bucket_count < 1) fail("embedding.buckets must be >= 1");
  try {
    train.validate();
    preprocess.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (threshold_folds < 2) fail("train.threshold_folds must be >= 2");
  if (folds < 2) fail("grid.folds must be >= 2");
  if (grid.size() == 0) fail("grid has an empty axis");
  if (!(stats.level > 0 && stats.level < 1)) fail("stats.level must lie in (0, 1)");
  if (stats.replicates < 1) fail("stats.replicates must be >= 1");
  if (stats.max_attempts < 1) fail("stats.max_attempts must be >= 1");
  summary.validate();
}

PipelineConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  Table root(&doc, "");
  root.read("seed", c.seed);
  root.read("jobs", c.jobs);
  root.read("period", c.period);

  auto paths = root.sub("paths");
  paths.read_path("comments", c.paths.comments, base_dir);
  paths.read_path("responses", c.paths.responses, base_dir);
  paths.read_path("taxonomy", c.paths.taxonomy, base_dir);
  paths.read_path("vectors", c.paths.vectors, base_dir);
  paths.read_path("models", c.paths.models, base_dir);
  paths.read_path("reports", c.paths.reports, base_dir);
  paths.read_path("params", c.paths.params, base_dir);
  paths.read_path("audit_log", c.paths.audit_log, base_dir);
  paths.finish();

  auto pre = root.sub("preprocess");
  pre.read("strip_urls", c.preprocess.strip_urls);
  pre.read("strip_punctuation", c.preprocess.strip_punctuation);
  pre.read("lemmatize", c.preprocess.lemmatize);
  pre.read("lowercase", c.preprocess.lowercase);
  bool defaults = true;
  std::vector<std::string> extra;
  pre.read("default_stopwords", defaults);
  pre.read("extra_stopwords", extra);
  if (!defaults) c.preprocess.stopwords.clear();
  c.preprocess.stopwords.insert(extra.begin(), extra.end());
  pre.finish();

  auto emb = root.sub("embedding");
  emb.read("mode", c.embedding_mode);
  emb.read("dim", c.embedding.dim);
  emb.read("ngram_min", c.embedding.ngram_min);
  emb.read("ngram_max", c.embedding.ngram_max);
  emb.read("buckets", c.embedding.bucket_count);
  emb.read("seed", c.embedding.seed);
  emb.finish();

  auto train = root.sub("train");
  train.read("learning_rate", c.train.learning_rate);
  train.read("n_rounds", c.train.n_rounds);
  train.read("max_depth", c.train.max_depth);
  train.read("min_loss_reduction", c.train.min_loss_reduction);
  train.read("l2_weight", c.train.l2_weight);
  train.read("l1_weight", c.train.l1_weight);
  train.read("min_child_weight", c.train.min_child_weight);
  train.read("tune_thresholds", c.tune_thresholds);
  train.read("threshold_folds", c.threshold_folds);
  train.finish();

  auto grid = root.sub("grid");
  grid.read("learning_rate", c.grid.learning_rate);
  grid.read("max_depth", c.grid.max_depth);
  grid.read("min_loss_reduction", c.grid.min_loss_reduction);
  grid.read("l2_weight", c.grid.l2_weight);
  grid.read("l1_weight", c.grid.l1_weight);
  grid.read("min_child_weight", c.grid.min_child_weight);
  grid.read("n_rounds", c.grid.n_rounds);
  grid.read("folds", c.folds);
  grid.finish();

  auto stats = root.sub("stats");
  stats.read("level", c.stats.level);
  stats.read("replicates", c.stats.replicates);
  stats.read("max_attempts", c.stats.max_attempts);
  stats.finish();

  auto sum = root.sub("summary");
  sum.read("min_total_comments", c.summary.min_total_comments);
  if (sum.has("min_category_comments")) {
    int v = 0;
    sum.read("min_category_comments", v);
    c.summary.min_category_comments = v;
  }
  sum.read("max_categories", c.summary.max_categories);
  std::vector<std::string> include;
  sum.read("include_small_categories", include);
  c.summary.include_small_categories.insert(include.begin(), include.end());
  sum.read("snippet_count", c.summary.snippet_count);
  sum.read("min_supported_citations", c.summary.min_supported_citations);
  sum.read("balance_tolerance", c.summary.balance_tolerance);
  sum.read("offline_citations", c.summary.offline_citations);
  sum.read("low_volume_max", c.summary.low_volume_max);
  if (sum.has("endpoint")) {
    auto ep = sum.sub("endpoint");
    summ::EndpointConfig e;
    ep.read("url", e.url);
    ep.read("timeout_seconds", e.timeout_seconds);
    ep.read("retries", e.retries);
    ep.read("max_tokens", e.max_tokens);
    ep.read("temperature", e.temperature);
    ep.read("fallback_offline", e.fallback_offline);
    ep.finish();
    c.summary.endpoint = e;
  }
  sum.finish();
  root.finish();

  c.summary.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  return config_from_json(parse_toml(text), base_dir);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T>
std::string list(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += num(v[i]);
    else if constexpr (std::is_same_v<T, std::string>) out += quote(v[i]);
    else out += std::to_string(v[i]);
  }
  return out + "]";
}

}  // namespace

std::string to_toml(const PipelineConfig& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "seed = " << c.seed << "\njobs = " << c.jobs << "\nperiod = " << quote(c.period) << "\n\n";
  out << "[paths]\n"
      << "comments = " << quote(c.paths.comments.string()) << "\nresponses = " << quote(c.paths.responses.string())
      << "\ntaxonomy = " << quote(c.paths.taxonomy.string()) << "\nvectors = " << quote(c.paths.vectors.string())
      << "\nmodels = " << quote(c.paths.models.string()) << "\nreports = " << quote(c.paths.reports.string())
      << "\nparams = " << quote(c.paths.params.string()) << "\naudit_log = " << quote(c.paths.audit_log.string())
      << "\n\n";

  const auto& defaults = english_stopwords();
  const bool has_defaults = std::includes(c.preprocess.stopwords.begin(), c.preprocess.stopwords.end(),
                                          defaults.begin(), defaults.end());
  std::vector<std::string> extra;
  for (const auto& w : c.preprocess.stopwords)
    if (!has_defaults || !defaults.contains(w)) extra.push_back(w);
  out << "[preprocess]\nstrip_urls = " << b(c.preprocess.strip_urls)
      << "\nstrip_punctuation = " << b(c.preprocess.strip_punctuation) << "\nlemmatize = " << b(c.preprocess.lemmatize)
      << "\nlowercase = " << b(c.preprocess.lowercase) << "\ndefault_stopwords = " << b(has_defaults)
      << "\nextra_stopwords = " << list(extra) << "\n\n";

  out << "[embedding]\nmode = " << quote(c.embedding_mode) << "\ndim = " << c.embedding.dim
      << "\nngram_min = " << c.embedding.ngram_min << "\nngram_max = " << c.embedding.ngram_max
      << "\nbuckets = " << c.embedding.bucket_count << "\nseed = " << c.embedding.seed << "\n\n";

  out << "[train]\nlearning_rate = " << num(c.train.learning_rate) << "\nn_rounds = " << c.train.n_rounds
      << "\nmax_depth = " << c.train.max_depth << "\nmin_loss_reduction = " << num(c.train.min_loss_reduction)
      << "\nl2_weight = " << num(c.train.l2_weight) << "\nl1_weight = " << num(c.train.l1_weight)
      << "\nmin_child_weight = " << num(c.train.min_child_weight) << "\ntune_thresholds = " << b(c.tune_thresholds)
      << "\nthreshold_folds = " << c.threshold_folds << "\n\n";

  out << "[grid]\nlearning_rate = " << list(c.grid.learning_rate) << "\nmax_depth = " << list(c.grid.max_depth)
      << "\nmin_loss_reduction = " << list(c.grid.min_loss_reduction) << "\nl2_weight = " << list(c.grid.l2_weight)
      << "\nl1_weight = " << list(c.grid.l1_weight) << "\nmin_child_weight = " << list(c.grid.min_child_weight)
      << "\nn_rounds = " << list(c.grid.n_rounds) << "\nfolds = " << c.folds << "\n\n";

  out << "[stats]\nlevel = " << num(c.stats.level) << "\nreplicates = " << c.stats.replicates
      << "\nmax_attempts = " << c.stats.max_attempts << "\n\n";

  const auto& s = c.summary;
  out << "[summary]\nmin_total_comments = " << s.min_total_comments << '\n';
  if (s.min_category_comments) out << "min_category_comments = " << *s.min_category_comments << '\n';
  out << "max_categories = " << s.max_categories << "\ninclude_small_categories = "
      << list(std::vector<std::string>(s.include_small_categories.begin(), s.include_small_categories.end()))
      << "\nsnippet_count = " << s.snippet_count << "\nmin_supported_citations = " << s.min_supported_citations
      << "\nbalance_tolerance = " << s.balance_tolerance << "\noffline_citations = " << s.offline_citations
      << "\nlow_volume_max = " << s.low_volume_max << '\n';
  if (s.endpoint) {
    out << "\n[summary.endpoint]\nurl = " << quote(s.endpoint->url) << "\ntimeout_seconds = " << num(s.endpoint->timeout_seconds)
        << "\nretries = " << s.endpoint->retries << "\nmax_tokens = " << s.endpoint->max_tokens
        << "\ntemperature = " << num(s.endpoint->temperature) << "\nfallback_offline = " << b(s.endpoint->fallback_offline)
        << '\n';
  }
  return out.str();
}

}  // namespace uxfb::cfg
