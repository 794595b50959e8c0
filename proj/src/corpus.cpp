#include "uxfb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "uxfb/csv.hpp"
#include "uxfb/error.hpp"

namespace uxfb {

using nlohmann::json;

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::Positive: return "positive";
    case Sentiment::Mixed: return "mixed";
    case Sentiment::Negative: return "negative";
  }
  return "";
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::Human: return "human";
    case LabelSource::Model: return "model";
    case LabelSource::Unlabeled: return "unlabeled";
  }
  return "";
}

std::string_view to_string(SurveyKind k) { return k == SurveyKind::Tutorial ? "tutorial" : "app"; }

std::optional<Sentiment> parse_sentiment(std::string_view text) {
  if (text == "positive") return Sentiment::Positive;
  if (text == "mixed") return Sentiment::Mixed;
  if (text == "negative") return Sentiment::Negative;
  return std::nullopt;
}

std::optional<LabelSource> parse_label_source(std::string_view text) {
  if (text == "human") return LabelSource::Human;
  if (text == "model") return LabelSource::Model;
  if (text == "unlabeled") return LabelSource::Unlabeled;
  return std::nullopt;
}

std::optional<SurveyKind> parse_survey_kind(std::string_view text) {
  if (text == "tutorial") return SurveyKind::Tutorial;
  if (text == "app") return SurveyKind::AppUsability;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// taxonomy
// ---------------------------------------------------------------------------

TopicTaxonomy::TopicTaxonomy(std::vector<LabelDefinition> labels, int version)
    : labels_(std::move(labels)), version_(version) {
  std::set<std::string_view> seen;
  for (const auto& l : labels_) {
    if (l.name.empty()) throw Error(ErrorKind::InvalidArgument, "taxonomy label names must be non-empty");
    if (!seen.insert(l.name).second) throw Error(ErrorKind::InvalidArgument, "duplicate taxonomy label: " + l.name);
  }
  if (version_ < 1) throw Error(ErrorKind::InvalidArgument, "taxonomy version must be positive");
}

std::optional<std::size_t> TopicTaxonomy::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> TopicTaxonomy::names() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(l.name);
  return out;
}

TopicTaxonomy TopicTaxonomy::with_label(LabelDefinition label) const {
  auto labels = labels_;
  labels.push_back(std::move(label));
  return TopicTaxonomy(std::move(labels), version_ + 1);
}

TopicTaxonomy TopicTaxonomy::without_label(std::string_view name) const {
  auto labels = labels_;
  std::erase_if(labels, [&](const LabelDefinition& l) { return l.name == name; });
  if (labels.size() == labels_.size()) throw Error(ErrorKind::UnknownLabel, std::string(name));
  return TopicTaxonomy(std::move(labels), version_ + 1);
}

TopicTaxonomy TopicTaxonomy::with_definition(std::string_view name, std::string definition) const {
  auto labels = labels_;
  const auto idx = index_of(name);
  if (!idx) throw Error(ErrorKind::UnknownLabel, std::string(name));
  labels[*idx].definition = std::move(definition);
  return TopicTaxonomy(std::move(labels), version_ + 1);
}

TopicTaxonomy default_taxonomy() {
  return TopicTaxonomy({
      {"Usability", "Ease of use, navigation, discoverability and the flow of common tasks."},
      {"Functionality", "Features that exist, are missing, or behave differently than needed."},
      {"Error", "Bugs, crashes, error messages and other unexpected system behavior."},
      {"Other", "Topics not covered by any other label."},
      {"Performance", "Speed, latency, loading times and responsiveness."},
      {"General Feedback", "Overall impressions without a specific topic, such as general praise or criticism."},
      {"Help", "Documentation, tutorials, learning material and support."},
      {"Visual Design", "Look and feel, layout, colors, typography and visual consistency."},
      {"Integration", "Interoperability with other products, services, APIs and data sources."},
      {"Licensing", "Pricing, licenses, entitlements, subscriptions and trial limits."},
  });
}

TopicTaxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open taxonomy file " + path.string());
  json doc;
  try {
    in >> doc;
    std::vector<LabelDefinition> labels;
    for (const auto& entry : doc.at("labels"))
      labels.push_back({entry.at("name").get<std::string>(), entry.value("definition", std::string{})});
    return TopicTaxonomy(std::move(labels), doc.value("version", 1));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "taxonomy file " + path.string() + ": " + e.what());
  }
}

void save_taxonomy(const std::filesystem::path& path, const TopicTaxonomy& taxonomy) {
  json doc;
  doc["version"] = taxonomy.version();
  doc["labels"] = json::array();
  for (const auto& l : taxonomy.labels()) doc["labels"].push_back({{"name", l.name}, {"definition", l.definition}});
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// responses
// ---------------------------------------------------------------------------

std::optional<int> SurveyResponse::answer(std::string_view key) const {
  const auto it = answers.find(std::string(key));
  if (it == answers.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> find_out_of_range_answer(const SurveyResponse& response) {
  const int lo = response.kind == SurveyKind::Tutorial ? 0 : 1;
  const int hi = response.kind == SurveyKind::Tutorial ? 10 : 5;
  for (const auto& [key, value] : response.answers)
    if (value < lo || value > hi) return key;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// corpus
// ---------------------------------------------------------------------------

Corpus::Corpus() : taxonomy_(default_taxonomy()) {}

Corpus::Corpus(std::vector<Comment> comments, std::vector<SurveyResponse> responses, TopicTaxonomy taxonomy,
               std::vector<AuditRecord> audit)
    : comments_(std::move(comments)),
      responses_(std::move(responses)),
      taxonomy_(std::move(taxonomy)),
      audit_(std::move(audit)) {
  index_.reserve(comments_.size());
  for (std::size_t i = 0; i < comments_.size(); ++i) {
    const auto& c = comments_[i];
    if (c.id.empty()) throw Error(ErrorKind::InvalidArgument, "comment id must be non-empty");
    if (!index_.emplace(c.id, i).second) throw Error(ErrorKind::DuplicateId, c.id);
    for (const auto& label : c.labels)
      if (!taxonomy_.contains(label)) throw Error(ErrorKind::UnknownLabel, label);
    if (c.label_source == LabelSource::Unlabeled && !c.labels.empty())
      throw Error(ErrorKind::InvalidArgument, "comment " + c.id + " is unlabeled but carries labels");
  }
  for (const auto& r : responses_) {
    if (r.comment_id && !index_.contains(*r.comment_id))
      throw Error(ErrorKind::UnknownComment, "response " + r.respondent_id + " references " + *r.comment_id);
  }
}

const Comment* Corpus::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &comments_[it->second];
}

Corpus Corpus::with_comments(std::vector<Comment> comments) const {
  return Corpus(std::move(comments), responses_, taxonomy_, audit_);
}

Corpus Corpus::with_responses(std::vector<SurveyResponse> responses) const {
  return Corpus(comments_, std::move(responses), taxonomy_, audit_);
}

Corpus Corpus::with_taxonomy(TopicTaxonomy taxonomy) const {
  return Corpus(comments_, responses_, std::move(taxonomy), audit_);
}

bool Corpus::operator==(const Corpus& other) const {
  return comments_ == other.comments_ && responses_ == other.responses_ && taxonomy_ == other.taxonomy_ &&
         audit_ == other.audit_;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json comment_json(const Comment& c) {
  json j;
  j["id"] = c.id;
  j["product_id"] = c.product_id;
  j["timestamp"] = format_rfc3339(c.timestamp);
  j["text"] = c.text;
  j["language"] = c.language;
  j["translated_text"] = c.translated_text ? json(*c.translated_text) : json(nullptr);
  j["sentiment"] = c.sentiment ? json(std::string(to_string(*c.sentiment))) : json(nullptr);
  j["labels"] = json::array();
  for (const auto& l : c.labels) j["labels"].push_back(l);
  j["label_source"] = std::string(to_string(c.label_source));
  return j;
}

json response_json(const SurveyResponse& r) {
  json j;
  j["respondent_id"] = r.respondent_id;
  j["product_id"] = r.product_id;
  j["timestamp"] = format_rfc3339(r.timestamp);
  j["survey_kind"] = std::string(to_string(r.kind));
  j["answers"] = json::object();
  for (const auto& [k, v] : r.answers) j["answers"][k] = v;
  j["comment_id"] = r.comment_id ? json(*r.comment_id) : json(nullptr);
  return j;
}

// A flat string view of one input row, so JSONL and CSV share validation.
struct RawRow {
  std::size_t line = 0;
  std::map<std::string, std::optional<std::string>> fields;  // nullopt = explicit null
  std::optional<std::vector<std::string>> labels;
  std::optional<std::map<std::string, std::string>> answers;
};

class IssueSink {
 public:
  void add(std::size_t line, std::string field, std::string message) {
    issues_.push_back({line, std::move(field), std::move(message)});
  }
  bool empty() const { return issues_.empty(); }
  [[noreturn]] void raise() { throw SchemaError(std::move(issues_)); }

 private:
  std::vector<SchemaIssue> issues_;
};

std::optional<std::string> required_string(const RawRow& row, const std::string& key, IssueSink& sink,
                                           bool allow_empty = false) {
  const auto it = row.fields.find(key);
  if (it == row.fields.end() || !it->second) {
    sink.add(row.line, key, "missing required field");
    return std::nullopt;
  }
  if (!allow_empty && it->second->empty()) {
    sink.add(row.line, key, "must be non-empty");
    return std::nullopt;
  }
  return it->second;
}

std::optional<std::string> optional_string(const RawRow& row, const std::string& key) {
  const auto it = row.fields.find(key);
  if (it == row.fields.end() || !it->second) return std::nullopt;
  return it->second;
}

std::optional<Timestamp> required_time(const RawRow& row, IssueSink& sink) {
  auto text = required_string(row, "timestamp", sink);
  if (!text) return std::nullopt;
  auto ts = parse_rfc3339(*text);
  if (!ts) sink.add(row.line, "timestamp", "not an RFC 3339 timestamp: " + *text);
  return ts;
}

std::optional<std::string> json_scalar(const json& v, bool& bad) {
  if (v.is_null()) return std::nullopt;
  if (v.is_string()) return v.get<std::string>();
  bad = true;
  return std::nullopt;
}

std::vector<RawRow> read_jsonl_rows(std::istream& in, bool with_answers, IssueSink& sink) {
  std::vector<RawRow> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      sink.add(line, "", std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!obj.is_object()) {
      sink.add(line, "", "expected a JSON object");
      continue;
    }
    RawRow row;
    row.line = line;
    for (const auto& [key, value] : obj.items()) {
      if (key == "labels") {
        if (value.is_null()) continue;
        if (!value.is_array()) {
          sink.add(line, key, "expected an array of strings");
          continue;
        }
        std::vector<std::string> labels;
        for (const auto& l : value) {
          if (!l.is_string()) {
            sink.add(line, key, "expected an array of strings");
            break;
          }
          labels.push_back(l.get<std::string>());
        }
        row.labels = std::move(labels);
      } else if (key == "answers" && with_answers) {
        if (!value.is_object()) {
          sink.add(line, key, "expected an object of integer ratings");
          continue;
        }
        std::map<std::string, std::string> answers;
        for (const auto& [q, rating] : value.items()) {
          if (!rating.is_number_integer()) {
            sink.add(line, "answers." + q, "rating must be an integer");
            continue;
          }
          answers[q] = std::to_string(rating.get<long long>());
        }
        row.answers = std::move(answers);
      } else {
        bool bad = false;
        auto v = json_scalar(value, bad);
        if (bad) {
          sink.add(line, key, "expected a string or null");
          continue;
        }
        row.fields[key] = std::move(v);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::set<std::string> kResponseColumns = {"respondent_id", "product_id", "timestamp", "survey_kind",
                                                "comment_id"};

std::vector<RawRow> read_csv_rows(std::istream& in, bool responses, IssueSink& sink) {
  std::vector<csv::Record> records;
  try {
    records = csv::read(in);
  } catch (const Error& e) {
    sink.add(0, "", e.what());
    return {};
  }
  std::vector<RawRow> rows;
  if (records.empty()) return rows;
  const auto header = records.front().fields;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      sink.add(rec.line, "", "expected " + std::to_string(header.size()) + " columns, found " +
                                 std::to_string(rec.fields.size()));
      continue;
    }
    RawRow row;
    row.line = rec.line;
    if (responses) row.answers.emplace();
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& key = header[i];
      const auto& value = rec.fields[i];
      if (!responses && key == "labels") {
        std::vector<std::string> labels;
        std::size_t start = 0;
        while (!value.empty() && start <= value.size()) {
          const auto bar = value.find('|', start);
          const auto part = value.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
          if (!part.empty()) labels.push_back(part);
          if (bar == std::string::npos) break;
          start = bar + 1;
        }
        row.labels = std::move(labels);
      } else if (responses && !kResponseColumns.contains(key)) {
        if (!value.empty()) (*row.answers)[key] = value;
      } else if (value.empty() && key != "text") {
        row.fields[key] = std::nullopt;
      } else {
        row.fields[key] = value;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<Comment> comment_from_row(const RawRow& row, const TopicTaxonomy& taxonomy, IssueSink& sink) {
  Comment c;
  bool ok = true;
  auto id = required_string(row, "id", sink);
  auto product = required_string(row, "product_id", sink);
  auto ts = required_time(row, sink);
  auto text = required_string(row, "text", sink, true);
  ok = id && product && ts && text;
  if (ok) {
    c.id = *id;
    c.product_id = *product;
    c.timestamp = *ts;
    c.text = *text;
  }
  if (auto lang = optional_string(row, "language")) c.language = lang->empty() ? "unknown" : *lang;
  c.translated_text = optional_string(row, "translated_text");
  if (auto s = optional_string(row, "sentiment")) {
    c.sentiment = parse_sentiment(*s);
    if (!c.sentiment) {
      sink.add(row.line, "sentiment", "expected positive, mixed, negative or null; got " + *s);
      ok = false;
    }
  }
  if (row.labels) {
    for (const auto& l : *row.labels) {
      if (!taxonomy.contains(l)) {
        sink.add(row.line, "labels", "label not in taxonomy: " + l);
        ok = false;
      }
      c.labels.insert(l);
    }
  }
  if (auto src = optional_string(row, "label_source")) {
    auto parsed = parse_label_source(*src);
    if (!parsed) {
      sink.add(row.line, "label_source", "expected human, model or unlabeled; got " + *src);
      ok = false;
    } else {
      c.label_source = *parsed;
    }
  } else {
    c.label_source = c.labels.empty() ? LabelSource::Unlabeled : LabelSource::Human;
  }
  if (c.label_source == LabelSource::Unlabeled && !c.labels.empty()) {
    sink.add(row.line, "label_source", "unlabeled comment carries labels");
    ok = false;
  }
  if (!ok) return std::nullopt;
  return c;
}

std::optional<SurveyResponse> response_from_row(const RawRow& row, IssueSink& sink) {
  SurveyResponse r;
  auto respondent = required_string(row, "respondent_id", sink);
  auto product = required_string(row, "product_id", sink);
  auto ts = required_time(row, sink);
  auto kind_text = required_string(row, "survey_kind", sink);
  bool ok = respondent && product && ts && kind_text;
  if (kind_text) {
    auto kind = parse_survey_kind(*kind_text);
    if (!kind) {
      sink.add(row.line, "survey_kind", "expected tutorial or app; got " + *kind_text);
      ok = false;
    } else {
      r.kind = *kind;
    }
  }
  if (!row.answers) {
    sink.add(row.line, "answers", "missing required field");
    ok = false;
  } else {
    for (const auto& [q, text] : *row.answers) {
      try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        r.answers[q] = v;
      } catch (const std::exception&) {
        sink.add(row.line, "answers." + q, "rating must be an integer; got " + text);
        ok = false;
      }
    }
  }
  r.comment_id = optional_string(row, "comment_id");
  if (!ok) return std::nullopt;
  r.respondent_id = *respondent;
  r.product_id = *product;
  r.timestamp = *ts;
  if (auto bad = find_out_of_range_answer(r)) {
    sink.add(row.line, "answers." + *bad,
             std::string("rating out of range for ") + (r.kind == SurveyKind::Tutorial ? "[0,10]" : "[1,5]"));
    return std::nullopt;
  }
  return r;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

std::optional<FileFormat> format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return FileFormat::Jsonl;
  if (ext == ".csv") return FileFormat::Csv;
  return std::nullopt;
}

Corpus ingest(std::istream& in, FileFormat format, const TopicTaxonomy& taxonomy) {
  IssueSink sink;
  auto rows = format == FileFormat::Jsonl ? read_jsonl_rows(in, false, sink) : read_csv_rows(in, false, sink);
  std::vector<Comment> comments;
  comments.reserve(rows.size());
  std::unordered_map<std::string, std::size_t> first_line;
  for (const auto& row : rows) {
    auto c = comment_from_row(row, taxonomy, sink);
    if (!c) continue;
    if (auto [it, inserted] = first_line.emplace(c->id, row.line); !inserted) {
      throw Error(ErrorKind::DuplicateId,
                  c->id + " (lines " + std::to_string(it->second) + " and " + std::to_string(row.line) + ")");
    }
    comments.push_back(std::move(*c));
  }
  if (!sink.empty()) sink.raise();
  return Corpus(std::move(comments), {}, taxonomy);
}

Corpus ingest(const std::filesystem::path& path, FileFormat format, const TopicTaxonomy& taxonomy) {
  auto in = open_input(path);
  return ingest(in, format, taxonomy);
}

std::vector<SurveyResponse> ingest_responses(std::istream& in, FileFormat format) {
  IssueSink sink;
  auto rows = format == FileFormat::Jsonl ? read_jsonl_rows(in, true, sink) : read_csv_rows(in, true, sink);
  std::vector<SurveyResponse> out;
  out.reserve(rows.size());
  for (const auto& row : rows)
    if (auto r = response_from_row(row, sink)) out.push_back(std::move(*r));
  if (!sink.empty()) sink.raise();
  return out;
}

std::vector<SurveyResponse> ingest_responses(const std::filesystem::path& path, FileFormat format) {
  auto in = open_input(path);
  return ingest_responses(in, format);
}

std::string to_jsonl(const Comment& comment) { return comment_json(comment).dump(); }
std::string to_jsonl(const SurveyResponse& response) { return response_json(response).dump(); }

std::string to_jsonl(const AuditRecord& record) {
  json j;
  j["comment_id"] = record.comment_id;
  j["old_labels"] = record.old_labels;
  j["new_labels"] = record.new_labels;
  j["old_source"] = std::string(to_string(record.old_source));
  j["time"] = format_rfc3339(record.time);
  j["coder"] = record.coder;
  return j.dump();
}

void export_comments(std::ostream& out, std::span<const Comment> comments, FileFormat format) {
  if (format == FileFormat::Jsonl) {
    for (const auto& c : comments) out << to_jsonl(c) << '\n';
    return;
  }
  out << "id,product_id,timestamp,text,language,translated_text,sentiment,labels,label_source\n";
  for (const auto& c : comments) {
    std::string labels;
    for (const auto& l : c.labels) labels += (labels.empty() ? "" : "|") + l;
    out << csv::join({c.id, c.product_id, format_rfc3339(c.timestamp), c.text, c.language,
                      c.translated_text.value_or(""),
                      c.sentiment ? std::string(to_string(*c.sentiment)) : std::string{}, labels,
                      std::string(to_string(c.label_source))})
        << '\n';
  }
}

void export_responses(std::ostream& out, std::span<const SurveyResponse> responses, FileFormat format) {
  if (format == FileFormat::Jsonl) {
    for (const auto& r : responses) out << to_jsonl(r) << '\n';
    return;
  }
  std::set<std::string> keys;
  for (const auto& r : responses)
    for (const auto& [k, v] : r.answers) keys.insert(k);
  std::vector<std::string> header = {"respondent_id", "product_id", "timestamp", "survey_kind", "comment_id"};
  header.insert(header.end(), keys.begin(), keys.end());
  out << csv::join(header) << '\n';
  for (const auto& r : responses) {
    std::vector<std::string> row = {r.respondent_id, r.product_id, format_rfc3339(r.timestamp),
                                    std::string(to_string(r.kind)), r.comment_id.value_or("")};
    for (const auto& k : keys) {
      auto v = r.answer(k);
      row.push_back(v ? std::to_string(*v) : "");
    }
    out << csv::join(row) << '\n';
  }
}

namespace {

template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& write) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    write(out);
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace

void write_comments_file(const std::filesystem::path& path, std::span<const Comment> comments) {
  const auto format = format_from_path(path).value_or(FileFormat::Jsonl);
  write_atomically(path, [&](std::ostream& out) { export_comments(out, comments, format); });
}

void write_responses_file(const std::filesystem::path& path, std::span<const SurveyResponse> responses) {
  const auto format = format_from_path(path).value_or(FileFormat::Jsonl);
  write_atomically(path, [&](std::ostream& out) { export_responses(out, responses, format); });
}

// ---------------------------------------------------------------------------
// corrections
// ---------------------------------------------------------------------------

Corpus merge_corrections(const Corpus& corpus, std::span<const Correction> corrections,
                         const MergeOptions& options) {
  std::map<std::string, Correction> resolved;
  for (const auto& c : corrections) {
    if (!corpus.find(c.comment_id)) throw Error(ErrorKind::UnknownComment, c.comment_id);
    for (const auto& l : c.labels)
      if (!corpus.taxonomy().contains(l)) throw Error(ErrorKind::UnknownLabel, l);
    auto [it, inserted] = resolved.emplace(c.comment_id, c);
    if (inserted || it->second.labels == c.labels) continue;
    switch (options.conflicts) {
      case ConflictPolicy::LastWins:
        it->second = c;
        break;
      case ConflictPolicy::Union:
        it->second.labels.insert(c.labels.begin(), c.labels.end());
        if (!c.coder.empty() && it->second.coder != c.coder) it->second.coder += "+" + c.coder;
        break;
      case ConflictPolicy::Reject:
        throw Error(ErrorKind::InvalidArgument, "conflicting corrections for comment " + c.comment_id);
    }
  }
  if (resolved.empty()) return corpus;

  auto comments = corpus.comments();
  auto audit = corpus.audit();
  for (auto& comment : comments) {
    const auto it = resolved.find(comment.id);
    if (it == resolved.end()) continue;
    const auto& fix = it->second;
    if (comment.label_source == LabelSource::Human && comment.labels == fix.labels) continue;
    audit.push_back({comment.id, comment.labels, fix.labels, comment.label_source, options.time, fix.coder});
    comment.labels = fix.labels;
    comment.label_source = LabelSource::Human;
  }
  return Corpus(std::move(comments), corpus.responses(), corpus.taxonomy(), std::move(audit));
}

std::vector<Correction> read_corrections(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Correction> out;
  std::string text;
  std::size_t line = 0;
  std::vector<SchemaIssue> issues;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(text);
      Correction c;
      c.comment_id = j.at("comment_id").get<std::string>();
      for (const auto& l : j.at("labels")) c.labels.insert(l.get<std::string>());
      c.coder = j.value("coder", std::string{});
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      issues.push_back({line, "", e.what()});
    }
  }
  if (!issues.empty()) throw SchemaError(std::move(issues));
  return out;
}

void append_audit_log(const std::filesystem::path& path, std::span<const AuditRecord> records) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot append to " + path.string());
  for (const auto& r : records) out << to_jsonl(r) << '\n';
}

// ---------------------------------------------------------------------------
// descriptive statistics
// ---------------------------------------------------------------------------

std::int64_t percent_hundredths(std::size_t count, std::size_t total) {
  if (total == 0) throw Error(ErrorKind::EmptyCorpus, "share of an empty total");
  // 10000 * count / total, rounded half away from zero (all terms non-negative).
  const auto num = static_cast<std::int64_t>(count) * 20000 + static_cast<std::int64_t>(total);
  return num / (2 * static_cast<std::int64_t>(total));
}

std::string format_hundredths(std::int64_t hundredths) {
  const bool negative = hundredths < 0;
  const auto mag = negative ? -hundredths : hundredths;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", negative ? "-" : "", static_cast<long long>(mag / 100),
                static_cast<long long>(mag % 100));
  return buf;
}

std::string LabelShare::percent_text() const { return format_hundredths(percent_hundredths) + "%"; }

std::vector<LabelShare> label_shares(const Corpus& corpus) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "label shares of an empty corpus");
  const auto& tax = corpus.taxonomy();
  std::vector<LabelShare> out;
  out.reserve(tax.size());
  for (const auto& def : tax.labels()) out.push_back({def.name, 0, 0.0, 0});
  for (const auto& c : corpus.comments())
    for (const auto& l : c.labels) ++out[*tax.index_of(l)].count;
  const auto n = corpus.size();
  for (auto& s : out) {
    s.share = static_cast<double>(s.count) / static_cast<double>(n);
    s.percent_hundredths = percent_hundredths(s.count, n);
  }
  return out;
}

double multi_label_share(const Corpus& corpus) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "multi-label share of an empty corpus");
  const auto multi = std::count_if(corpus.comments().begin(), corpus.comments().end(),
                                   [](const Comment& c) { return c.labels.size() >= 2; });
  return static_cast<double>(multi) / static_cast<double>(corpus.size());
}

bool CommentFilter::matches(const Comment& c) const {
  if (product && c.product_id != *product) return false;
  if (period && !period->contains(c.timestamp)) return false;
  if (sentiment && c.sentiment != sentiment) return false;
  if (labels && !labels->empty()) {
    const bool any = std::any_of(labels->begin(), labels->end(), [&](const auto& l) { return c.labels.contains(l); });
    if (!any) return false;
  }
  return true;
}

Corpus filter(const Corpus& corpus, const CommentFilter& predicate) {
  std::vector<Comment> comments;
  std::set<std::string_view> kept;
  for (const auto& c : corpus.comments()) {
    if (predicate.matches(c)) {
      comments.push_back(c);
      kept.insert(c.id);
    }
  }
  const bool comment_level = (predicate.labels && !predicate.labels->empty()) || predicate.sentiment.has_value();
  std::vector<SurveyResponse> responses;
  for (const auto& r : corpus.responses()) {
    if (predicate.product && r.product_id != *predicate.product) continue;
    if (predicate.period && !predicate.period->contains(r.timestamp)) continue;
    if (r.comment_id ? !kept.contains(*r.comment_id) : comment_level) continue;
    responses.push_back(r);
  }
  return Corpus(std::move(comments), std::move(responses), corpus.taxonomy(), corpus.audit());
}

}  // namespace uxfb
