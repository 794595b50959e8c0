#include "uxfb/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>

#include "uxfb/error.hpp"

namespace uxfb::synth {

namespace {

struct Phrases {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
};

const std::map<std::string, Phrases>& phrase_book() {
  static const std::map<std::string, Phrases> book = {
      {"Usability",
       {{"navigation is intuitive", "easy to find every menu", "the workflow is smooth and simple",
         "onboarding wizard guides me through each step"},
        {"the navigation is confusing", "hard to find the menu I need", "too many clicks to finish a simple task",
         "the workflow feels clunky"}}},
      {"Functionality",
       {{"the feature set covers everything we need", "love the new filter option",
         "export feature works as expected"},
        {"missing a feature for bulk export", "the filter option does not support dates",
         "needs a feature to schedule recurring jobs"}}},
      {"Error",
       {{"no crash since the last update", "the bug fix solved the error on upload"},
        {"the app crashes when I save", "got an error message while uploading", "a bug deleted my draft",
         "the page throws an exception on submit"}}},
      {"Other",
       {{"my colleague recommended this survey", "filled this in during the conference break"},
        {"my manager forced me to fill out this survey", "this questionnaire popped up during the conference"}}},
      {"Performance",
       {{"pages load fast", "search is quick and responsive", "reports render in seconds"},
        {"loading takes forever", "the dashboard is painfully slow", "high latency when searching"}}},
      {"General Feedback",
       {{"great product overall", "overall an excellent experience", "keep up the good work"},
        {"overall a disappointing experience", "not impressed overall", "overall it feels unfinished"}}},
      {"Help",
       {{"the documentation is thorough", "tutorial examples are clear", "support team answered quickly"},
        {"the documentation is outdated", "the tutorial video skips steps", "support never answered my ticket"}}},
      {"Visual Design",
       {{"beautiful layout and colors", "clean modern design", "the icons look crisp"},
        {"the colors are hard to read", "the font is tiny", "the layout looks cluttered"}}},
      {"Integration",
       {{"the api integration with our crm works", "slack plugin syncs nicely", "connector to salesforce is solid"},
        {"cannot connect to our crm", "the api sync with salesforce fails", "there is no plugin for slack"}}},
      {"Licensing",
       {{"pricing is fair for the license", "subscription cost is reasonable", "trial period was generous"},
        {"the license price is too high", "subscription renewal is expensive", "the trial expired too soon"}}},
  };
  return book;
}

const std::vector<std::string>& filler() {
  static const std::vector<std::string> f = {"I used it for a week.", "We use it daily in our team.", "Thanks.",
                                             "Just my two cents.", "Started last month."};
  return f;
}

const std::vector<std::string>& empty_texts() {
  static const std::vector<std::string> f = {"No further comments.", "Nothing to add.", "n/a", "-", "All fine."};
  return f;
}

// Default label volumes, used as draw weights.
const std::map<std::string, int>& label_weights() {
  static const std::map<std::string, int> w = {
      {"Usability", 721}, {"Functionality", 606}, {"Error", 420},          {"Other", 352},
      {"Performance", 339}, {"General Feedback", 239}, {"Help", 207}, {"Visual Design", 114},
      {"Integration", 113}, {"Licensing", 91}};
  return w;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

Sentiment draw_sentiment(Rng& rng) {
  const double u = rng.uniform();
  return u < 0.5 ? Sentiment::Negative : (u < 0.7 ? Sentiment::Mixed : Sentiment::Positive);
}

Timestamp draw_time(int year, Rng& rng) {
  using namespace std::chrono;
  const sys_days start = year_month_day{std::chrono::year{year}, January, day{1}};
  const sys_days end = year_month_day{std::chrono::year{year + 1}, January, day{1}};
  const auto span = static_cast<std::uint64_t>((end - start).count()) * 86400;
  return Timestamp{seconds{static_cast<std::int64_t>(rng.below(span))}} + (start - sys_days{});
}

int clamp_rating(int v, int lo, int hi) { return std::clamp(v, lo, hi); }

}  // namespace

std::string comment_text(const LabelSet& labels, Sentiment sentiment, Rng& rng) {
  const auto& book = phrase_book();
  std::vector<std::string> sentences;
  if (rng.uniform() < 0.3) sentences.push_back(pick(filler(), rng));
  if (labels.empty()) {
    sentences.push_back(pick(empty_texts(), rng));
  } else {
    bool first = true;
    for (const auto& l : labels) {
      const auto it = book.find(l);
      if (it == book.end()) {
        sentences.push_back("About " + l + ".");
        continue;
      }
      const auto& p = it->second;
      if (sentiment == Sentiment::Mixed) {
        // one good and one bad remark overall
        sentences.push_back(capitalize(pick(first ? p.positive : p.negative, rng)) + ".");
        if (labels.size() == 1) sentences.push_back("But " + pick(p.negative, rng) + ".");
      } else {
        sentences.push_back(capitalize(pick(sentiment == Sentiment::Positive ? p.positive : p.negative, rng)) + ".");
      }
      first = false;
    }
  }
  if (rng.uniform() < 0.2) sentences.push_back(pick(filler(), rng));
  std::string text;
  for (const auto& s : sentences) {
    if (!text.empty()) text += ' ';
    text += s;
  }
  return text;
}

LabelSet draw_labels(const TopicTaxonomy& taxonomy, Rng& rng) {
  const double u = rng.uniform();
  const std::size_t count = u < 0.05 ? 0 : (u < 0.8 ? 1 : 2);
  std::vector<std::pair<std::string, int>> weights;
  int total = 0;
  for (const auto& def : taxonomy.labels()) {
    const auto it = label_weights().find(def.name);
    const int w = it == label_weights().end() ? 100 : it->second;
    weights.emplace_back(def.name, w);
    total += w;
  }
  LabelSet out;
  while (out.size() < std::min(count, weights.size())) {
    auto r = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
    for (const auto& [name, w] : weights) {
      if (r < w) {
        out.insert(name);
        break;
      }
      r -= w;
    }
  }
  return out;
}

std::vector<Comment> labeled_comments(std::size_t count, std::uint64_t seed, const TopicTaxonomy& taxonomy) {
  Rng rng(derive_seed({seed, 0xC0}));
  std::vector<Comment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Comment c;
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i + 1);
    c.id = id;
    c.product_id = "product-a";
    c.timestamp = draw_time(2024, rng);
    c.language = "en";
    c.sentiment = draw_sentiment(rng);
    c.labels = draw_labels(taxonomy, rng);
    c.text = comment_text(c.labels, *c.sentiment, rng);
    c.label_source = LabelSource::Human;
    out.push_back(std::move(c));
  }
  return out;
}

SurveyData survey_corpus(const SurveyOptions& options, const TopicTaxonomy& taxonomy) {
  if (options.tutorial_table.size() != 3 || options.app_table.size() != 3)
    throw Error(ErrorKind::InvalidArgument, "survey tables need three sentiment rows");
  if (options.tutorial_products.empty() || options.app_products.empty())
    throw Error(ErrorKind::InvalidArgument, "each survey needs at least one product");
  Rng rng(derive_seed({options.seed, 0x5u}));

  struct Spec {
    SurveyKind kind;
    std::optional<Sentiment> sentiment;
    int column;  // -1: no table cell (unlinked response or comment-only)
    std::string product;
    Timestamp time;
    bool has_response;
  };
  std::vector<Spec> specs;
  auto add_table = [&](SurveyKind kind, const std::vector<std::vector<std::int64_t>>& table,
                       const std::vector<std::string>& products) {
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < table[r].size(); ++c)
        for (std::int64_t k = 0; k < table[r][c]; ++k)
          specs.push_back({kind, kSentimentRows[r], static_cast<int>(c), pick(products, rng), draw_time(options.year, rng), true});
  };
  add_table(SurveyKind::Tutorial, options.tutorial_table, options.tutorial_products);
  add_table(SurveyKind::AppUsability, options.app_table, options.app_products);
  for (std::size_t i = 0; i < options.tutorial_without_comment; ++i)
    specs.push_back({SurveyKind::Tutorial, std::nullopt, -1, pick(options.tutorial_products, rng), draw_time(options.year, rng), true});
  for (std::size_t i = 0; i < options.app_without_comment; ++i)
    specs.push_back({SurveyKind::AppUsability, std::nullopt, -1, pick(options.app_products, rng), draw_time(options.year, rng), true});
  for (std::size_t i = 0; i < options.small_product_comments; ++i)
    specs.push_back({SurveyKind::AppUsability, draw_sentiment(rng), -1, options.small_product, draw_time(options.year, rng), false});
  std::stable_sort(specs.begin(), specs.end(), [](const Spec& a, const Spec& b) { return a.time < b.time; });

  SurveyData out;
  std::size_t comment_no = 0, response_no = 0;
  for (const auto& s : specs) {
    std::optional<std::string> comment_id;
    if (s.sentiment) {
      Comment c;
      char id[32];
      std::snprintf(id, sizeof id, "c%05zu", ++comment_no);
      c.id = id;
      c.product_id = s.product;
      c.timestamp = s.time;
      c.language = "en";
      c.sentiment = s.sentiment;
      const auto labels = draw_labels(taxonomy, rng);
      c.text = comment_text(labels, *s.sentiment, rng);
      if (rng.uniform() < options.human_fraction) {
        c.labels = labels;
        c.label_source = LabelSource::Human;
      }
      comment_id = c.id;
      out.comments.push_back(std::move(c));
    }
    if (!s.has_response) continue;
    SurveyResponse r;
    char id[32];
    std::snprintf(id, sizeof id, "r%05zu", ++response_no);
    r.respondent_id = id;
    r.product_id = s.product;
    r.timestamp = s.time;
    r.kind = s.kind;
    r.comment_id = comment_id;
    if (s.kind == SurveyKind::Tutorial) {
      static constexpr std::array<std::pair<int, int>, 3> ranges = {{{0, 6}, {7, 8}, {9, 10}}};
      const auto [lo, hi] = s.column >= 0 ? ranges[static_cast<std::size_t>(s.column)]
                                          : ranges[static_cast<std::size_t>(rng.below(3))];
      const int nps = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
      r.answers[std::string(question::kNps)] = nps;
      for (auto key : question::kTutorialQuality) {
        if (rng.uniform() < 0.1) continue;
        r.answers[std::string(key)] = clamp_rating(nps + static_cast<int>(rng.below(5)) - 2, 0, 10);
      }
    } else {
      const int psat = s.column >= 0 ? s.column + 1 : 1 + static_cast<int>(rng.below(5));
      r.answers[std::string(question::kPsat)] = psat;
      r.answers[std::string(question::kUxLiteEase)] = clamp_rating(psat + static_cast<int>(rng.below(3)) - 1, 1, 5);
      r.answers[std::string(question::kUxLiteDoesWhat)] = clamp_rating(psat + static_cast<int>(rng.below(3)) - 1, 1, 5);
    }
    out.responses.push_back(std::move(r));
  }
  return out;
}

}  // namespace uxfb::synth
