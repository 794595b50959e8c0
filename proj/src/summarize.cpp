#include "uxfb/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "uxfb/endpoint.hpp"
#include "uxfb/error.hpp"

namespace uxfb::summ {

using nlohmann::json;

void SummaryConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, "summary: " + m); };
  if (min_total_comments < 1) fail("min_total_comments must be >= 1");
  if (min_category_comments && *min_category_comments < 1) fail("min_category_comments must be >= 1");
  if (max_categories < 1) fail("max_categories must be >= 1");
  if (snippet_count < 0) fail("snippet_count must be >= 0");
  if (min_supported_citations < 1) fail("min_supported_citations must be >= 1");
  if (balance_tolerance < 0) fail("balance_tolerance must be >= 0");
  if (offline_citations < 1) fail("offline_citations must be >= 1");
  if (endpoint) {
    if (endpoint->url.empty()) fail("endpoint url is empty");
    if (endpoint->retries < 0) fail("endpoint retries must be >= 0");
    if (!(endpoint->timeout_seconds > 0)) fail("endpoint timeout must be positive");
  }
}

int SummaryConfig::category_threshold(std::size_t total_comments) const {
  if (min_category_comments) return *min_category_comments;
  return std::max(4, static_cast<int>(std::ceil(0.02 * static_cast<double>(total_comments))));
}

Eligibility eligible(std::span<const Comment> comments, const SummaryConfig& config) {
  Eligibility out;
  out.total = comments.size();
  out.category_threshold = config.category_threshold(out.total);
  if (out.total < static_cast<std::size_t>(config.min_total_comments)) {
    out.reason = std::to_string(out.total) + " comments, fewer than the minimum of " +
                 std::to_string(config.min_total_comments);
    return out;
  }
  out.eligible = true;
  std::map<std::string, std::size_t> counts;
  for (const auto& c : comments)
    for (const auto& l : c.labels) ++counts[l];
  std::vector<CategoryCount> ranked;
  for (const auto& [name, n] : counts) ranked.push_back({name, n, false});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.comments > b.comments; });

  std::vector<CategoryCount> overrides;
  for (const auto& cat : ranked) {
    const bool big = cat.comments >= static_cast<std::size_t>(out.category_threshold);
    if (big && out.categories.size() < static_cast<std::size_t>(config.max_categories)) {
      out.categories.push_back(cat);
    } else if (!big && config.include_small_categories.contains(cat.name)) {
      overrides.push_back({cat.name, cat.comments, true});
    }
  }
  out.categories.insert(out.categories.end(), overrides.begin(), overrides.end());
  return out;
}

// ---------------------------------------------------------------------------

std::string instructions(const SummaryConfig& config) {
  std::ostringstream out;
  out << "You are reviewing user comments collected by a product survey. Each comment below has an ID, its text, "
         "and the categories it was classified into.\n"
         "Task: write a short summary for each category listed after these instructions. Each summary is a list of "
         "attributes; an attribute is one statement about what users said in that category.\n"
         "Citations: every attribute must cite the comments that support it, giving each comment's ID and a "
         "verbatim extract copied exactly from that comment. Do not paraphrase extracts. Statements that no "
         "comment supports must be left out.\n"
         "Thresholds: products with fewer than "
      << config.min_total_comments << " comments are not summarized; only the top " << config.max_categories
      << " categories by comment volume are summarized, each needing at least "
      << (config.min_category_comments ? std::to_string(*config.min_category_comments)
                                       : std::string("max(4, 2% of all comments)"))
      << " comments unless listed explicitly.\n"
         "Reply with JSON only: {\"categories\": [{\"name\": string, \"attributes\": [{\"statement\": string, "
         "\"citations\": [{\"id\": string, \"extract\": string}]}]}]}.\n";
  return out.str();
}

std::string PromptDocument::render() const {
  std::ostringstream out;
  out << instructions << "\nCategories to summarize:";
  for (const auto& c : categories) out << "\n- " << c;
  out << "\n\nComments:\n";
  for (const auto& c : comments) {
    out << "\nID: " << c.id << "\nCategories: ";
    for (std::size_t i = 0; i < c.labels.size(); ++i) out << (i ? "; " : "") << c.labels[i];
    out << "\nText: " << c.text << '\n';
  }
  return out.str();
}

PromptDocument build_prompt(std::span<const Comment> comments, const Eligibility& eligibility,
                            const SummaryConfig& config) {
  if (!eligibility.eligible) throw Error(ErrorKind::NotEligible, eligibility.reason);
  PromptDocument doc;
  doc.instructions = instructions(config);
  for (const auto& c : eligibility.categories) doc.categories.push_back(c.name);
  for (const auto& c : comments)
    doc.comments.push_back({c.id, c.working_text(), std::vector<std::string>(c.labels.begin(), c.labels.end())});
  return doc;
}

// ---------------------------------------------------------------------------

json to_json(const SummaryDraft& draft) {
  json cats = json::array();
  for (const auto& c : draft.categories) {
    json attrs = json::array();
    for (const auto& a : c.attributes) {
      json cites = json::array();
      for (const auto& cit : a.citations) cites.push_back({{"id", cit.comment_id}, {"extract", cit.extract}});
      attrs.push_back({{"statement", a.statement}, {"citations", cites}});
    }
    cats.push_back({{"name", c.name}, {"attributes", attrs}});
  }
  return {{"product_id", draft.product_id}, {"mode", draft.mode}, {"categories", cats}};
}

SummaryDraft draft_from_json(const json& doc) {
  SummaryDraft d = parse_response(json{{"categories", doc.at("categories")}}.dump());
  d.product_id = doc.value("product_id", "");
  d.mode = doc.value("mode", "");
  return d;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return -2.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

SummaryDraft generate_offline(std::span<const Comment> comments, const PromptDocument& prompt,
                              const Embedder& embedder, int citations) {
  SummaryDraft draft;
  draft.mode = "offline";
  if (!comments.empty()) draft.product_id = comments.front().product_id;
  for (const auto& category : prompt.categories) {
    std::vector<const Comment*> members;
    std::vector<std::string> texts;
    for (const auto& c : comments) {
      if (c.labels.contains(category)) {
        members.push_back(&c);
        texts.push_back(c.working_text());
      }
    }
    if (members.empty()) continue;
    const auto vectors = embedder.embed_all(texts);
    std::vector<double> centroid(embedder.dim(), 0.0);
    for (const auto& v : vectors)
      for (std::size_t i = 0; i < centroid.size(); ++i) centroid[i] += v.values[i];
    for (auto& x : centroid) x /= static_cast<double>(vectors.size());

    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < members.size(); ++i) scored.emplace_back(cosine(vectors[i].values, centroid), i);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return members[a.second]->id < members[b.second]->id;
    });
    Attribute attr;
    attr.statement = texts[scored.front().second];
    // Nearest comment first, then the nearest of each sentiment class in turn,
    // so snippet selection can balance sentiment from the cited pool.
    std::map<std::string, std::vector<std::size_t>> by_class;
    std::vector<std::string> class_seq;
    for (const auto& [_, i] : scored) {
      const auto cls = sentiment_class(*members[i]);
      if (!by_class.contains(cls)) class_seq.push_back(cls);
      by_class[cls].push_back(i);
    }
    const auto limit = std::min(scored.size(), static_cast<std::size_t>(std::max(citations, 1)));
    for (std::size_t round = 0; attr.citations.size() < limit; ++round)
      for (const auto& cls : class_seq) {
        const auto& pool = by_class[cls];
        if (round < pool.size() && attr.citations.size() < limit)
          attr.citations.push_back({members[pool[round]]->id, texts[pool[round]]});
      }
    draft.categories.push_back({category, {std::move(attr)}});
  }
  return draft;
}

SummaryDraft generate(std::span<const Comment> comments, const PromptDocument& prompt, const Embedder& embedder,
                      const SummaryConfig& config, Transport* transport) {
  if (!config.endpoint) return generate_offline(comments, prompt, embedder, config.offline_citations);
  HttpTransport http;
  try {
    auto draft = call_endpoint(prompt, *config.endpoint, transport ? *transport : http);
    draft.mode = "endpoint";
    if (!comments.empty()) draft.product_id = comments.front().product_id;
    return draft;
  } catch (const Error&) {
    if (!config.endpoint->fallback_offline) throw;
    return generate_offline(comments, prompt, embedder, config.offline_citations);
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Supported: return "Supported";
    case Status::MissingId: return "MissingId";
    case Status::ExtractNotFound: return "ExtractNotFound";
    case Status::UnderSupported: return "UnderSupported";
  }
  return "?";
}

std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    char mapped = 0;
    // U+2018/2019 and U+201C/201D are E2 80 98/99/9C/9D
    if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80) {
      const auto d = static_cast<unsigned char>(text[i + 2]);
      if (d == 0x98 || d == 0x99) mapped = '\'';
      if (d == 0x9C || d == 0x9D) mapped = '"';
      if (mapped) i += 2;
    }
    if (!mapped && (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    if (mapped) out += mapped;
    else out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
  }
  return out;
}

namespace {

std::map<std::string, const Comment*> index_sources(std::span<const Comment> sources) {
  std::map<std::string, const Comment*> m;
  for (const auto& c : sources) m.emplace(c.id, &c);
  return m;
}

Status check_citation(const Citation& cit, const std::map<std::string, const Comment*>& sources) {
  const auto it = sources.find(cit.comment_id);
  if (it == sources.end()) return Status::MissingId;
  const auto extract = normalize_for_match(cit.extract);
  if (extract.empty()) return Status::ExtractNotFound;
  if (normalize_for_match(it->second->text).find(extract) != std::string::npos) return Status::Supported;
  if (it->second->translated_text &&
      normalize_for_match(*it->second->translated_text).find(extract) != std::string::npos)
    return Status::Supported;
  return Status::ExtractNotFound;
}

const std::vector<std::string>& class_order() {
  static const std::vector<std::string> order = {"negative", "mixed", "positive", "unclassified"};
  return order;
}

std::vector<std::pair<std::string, std::size_t>> class_counts(std::span<const Comment> sources) {
  std::map<std::string, std::size_t> m;
  for (const auto& c : sources) ++m[sentiment_class(c)];
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& k : class_order())
    if (m.contains(k)) out.emplace_back(k, m[k]);
  return out;
}

}  // namespace

std::string sentiment_class(const Comment& c) {
  return c.sentiment ? std::string(to_string(*c.sentiment)) : std::string("unclassified");
}

std::map<std::string, std::size_t> apportion(const std::vector<std::pair<std::string, std::size_t>>& counts,
                                             std::size_t seats) {
  std::map<std::string, std::size_t> out;
  std::size_t total = 0;
  for (const auto& [k, n] : counts) {
    out[k] = 0;
    total += n;
  }
  if (total == 0) return out;
  struct Rem {
    std::size_t remainder, count, order;
    std::string key;
  };
  std::vector<Rem> rems;
  std::size_t given = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto exact = seats * counts[i].second;
    out[counts[i].first] = exact / total;
    given += exact / total;
    rems.push_back({exact % total, counts[i].second, i, counts[i].first});
  }
  std::sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    if (a.count != b.count) return a.count > b.count;
    return a.order < b.order;
  });
  for (std::size_t i = 0; given < seats; ++i, ++given) ++out[rems[i % rems.size()].key];
  return out;
}

bool ValidationReport::publishable(int balance_tolerance) const {
  for (const auto& a : attributes)
    if (a.status != Status::Supported) return false;
  return !balance || balance->deviation <= balance_tolerance;
}

ValidationReport validate(const SummaryDraft& draft, std::span<const Comment> sources, const SummaryConfig& config,
                          std::span<const Snippet> snippets) {
  const auto index = index_sources(sources);
  ValidationReport report;
  for (const auto& cat : draft.categories) {
    for (std::size_t i = 0; i < cat.attributes.size(); ++i) {
      AttributeReport ar{cat.name, i, Status::Supported, {}, 0};
      for (const auto& cit : cat.attributes[i].citations) {
        const auto s = check_citation(cit, index);
        ar.citations.push_back(s);
        if (s == Status::Supported) ++ar.supported;
        else if (ar.status == Status::Supported) ar.status = s;
      }
      if (ar.status == Status::Supported && ar.supported < static_cast<std::size_t>(config.min_supported_citations))
        ar.status = Status::UnderSupported;
      report.attributes.push_back(std::move(ar));
    }
  }
  if (!snippets.empty()) {
    BalanceReport b;
    const auto counts = class_counts(sources);
    for (const auto& [k, n] : counts) b.corpus[k] = n;
    b.expected = apportion(counts, snippets.size());
    for (const auto& s : snippets) ++b.snippets[s.sentiment];
    std::set<std::string> keys;
    for (const auto& [k, _] : b.expected) keys.insert(k);
    for (const auto& [k, _] : b.snippets) keys.insert(k);
    for (const auto& k : keys) {
      const auto e = b.expected.contains(k) ? static_cast<int>(b.expected[k]) : 0;
      const auto s = b.snippets.contains(k) ? static_cast<int>(b.snippets[k]) : 0;
      b.deviation = std::max(b.deviation, std::abs(e - s));
    }
    report.balance = std::move(b);
  }
  return report;
}

std::vector<Snippet> select_snippets(const SummaryDraft& draft, std::span<const Comment> sources,
                                     const SummaryConfig& config) {
  const auto index = index_sources(sources);
  std::map<std::string, Snippet> candidates;
  for (const auto& cat : draft.categories) {
    for (const auto& attr : cat.attributes) {
      std::set<std::string> seen;
      for (const auto& cit : attr.citations) {
        if (check_citation(cit, index) != Status::Supported) continue;
        auto [it, inserted] = candidates.try_emplace(cit.comment_id);
        auto& s = it->second;
        if (inserted) {
          s = {cit.comment_id, cit.extract, sentiment_class(*index.at(cit.comment_id)), 0};
        } else if (cit.extract.size() < s.text.size()) {
          s.text = cit.extract;
        }
        if (seen.insert(cit.comment_id).second) ++s.cited_by;
      }
    }
  }
  const auto want = static_cast<std::size_t>(config.snippet_count);
  if (candidates.size() < want)
    throw Error(ErrorKind::InsufficientSupported, std::to_string(want) + " snippets requested, " +
                                                      std::to_string(candidates.size()) + " supported comments cited");

  std::vector<const Snippet*> ranked;
  for (const auto& [_, s] : candidates) ranked.push_back(&s);
  std::sort(ranked.begin(), ranked.end(), [](const Snippet* a, const Snippet* b) {
    if (a->cited_by != b->cited_by) return a->cited_by > b->cited_by;
    if (a->text.size() != b->text.size()) return a->text.size() < b->text.size();
    return a->comment_id < b->comment_id;
  });

  auto quotas = apportion(class_counts(sources), want);
  std::vector<const Snippet*> chosen;
  std::set<const Snippet*> taken;
  for (const auto& cls : class_order()) {
    auto& q = quotas[cls];
    for (const auto* s : ranked) {
      if (q == 0) break;
      if (s->sentiment != cls) continue;
      chosen.push_back(s);
      taken.insert(s);
      --q;
    }
  }
  for (const auto* s : ranked) {
    if (chosen.size() >= want) break;
    if (!taken.contains(s)) {
      chosen.push_back(s);
      taken.insert(s);
    }
  }
  std::vector<Snippet> out;
  for (const auto* s : chosen) out.push_back(*s);
  return out;
}

RepairResult repair(const SummaryDraft& draft, const ValidationReport& report, std::span<const Comment> sources,
                    const SummaryConfig& config, const std::set<std::string>& expand) {
  const auto index = index_sources(sources);
  std::map<std::pair<std::string, std::size_t>, const AttributeReport*> by_attr;
  for (const auto& a : report.attributes) by_attr[{a.category, a.index}] = &a;

  RepairResult out{draft, {}};
  out.draft.categories.clear();
  for (const auto& cat : draft.categories) {
    CategorySummary kept{cat.name, {}};
    for (std::size_t i = 0; i < cat.attributes.size(); ++i) {
      const auto& attr = cat.attributes[i];
      const auto it = by_attr.find({cat.name, i});
      const bool matches = it != by_attr.end() && it->second->citations.size() == attr.citations.size();
      Attribute fixed{attr.statement, {}};
      for (std::size_t j = 0; j < attr.citations.size(); ++j) {
        auto cit = attr.citations[j];
        const auto status = matches ? it->second->citations[j] : check_citation(cit, index);
        if (status != Status::Supported) {
          out.changes.push_back(cat.name + " #" + std::to_string(i) + ": dropped citation " + cit.comment_id + " (" +
                                std::string(to_string(status)) + ")");
          continue;
        }
        if (expand.contains(cit.comment_id)) {
          const auto& full = index.at(cit.comment_id)->working_text();
          if (cit.extract != full) {
            cit.extract = full;
            out.changes.push_back(cat.name + " #" + std::to_string(i) + ": expanded extract of " + cit.comment_id);
          }
        }
        fixed.citations.push_back(std::move(cit));
      }
      if (fixed.citations.size() < static_cast<std::size_t>(config.min_supported_citations)) {
        out.changes.push_back(cat.name + " #" + std::to_string(i) + ": removed attribute \"" + attr.statement + "\"");
        continue;
      }
      kept.attributes.push_back(std::move(fixed));
    }
    if (kept.attributes.empty()) {
      out.changes.push_back(cat.name + ": removed category with no supported attributes");
      continue;
    }
    out.draft.categories.push_back(std::move(kept));
  }
  return out;
}

std::string render_markdown(const SummaryDraft& draft, std::span<const Snippet> snippets, std::size_t total_comments,
                            const SummaryConfig& config) {
  std::ostringstream out;
  if (total_comments <= static_cast<std::size_t>(config.low_volume_max))
    out << "> Low volume (" << total_comments << " comments): representativeness caution.\n\n";
  for (const auto& cat : draft.categories) {
    out << "**" << cat.name << ":**";
    for (const auto& a : cat.attributes) {
      out << ' ' << a.statement << " [";
      for (std::size_t i = 0; i < a.citations.size(); ++i) out << (i ? ", " : "") << a.citations[i].comment_id;
      out << ']';
    }
    out << "\n\n";
  }
  if (!snippets.empty()) {
    out << "Selected comments:\n\n";
    for (const auto& s : snippets) out << "- \"" << s.text << "\" (" << s.comment_id << ", " << s.sentiment << ")\n";
    out << '\n';
  }
  return out.str();
}

}  // namespace uxfb::summ
