#include <chrono>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "uxfb/endpoint.hpp"
#include "uxfb/error.hpp"
#include "uxfb/summarize.hpp"

using namespace uxfb;
using namespace uxfb::summ;
using testing::comment;

namespace {

std::vector<Comment> product(std::size_t n, const std::vector<std::pair<std::string, std::size_t>>& labels) {
  std::vector<Comment> out;
  std::size_t next = 0;
  for (const auto& [label, count] : labels)
    for (std::size_t i = 0; i < count; ++i, ++next)
      out.push_back(comment("c" + std::to_string(next), label + " comment number " + std::to_string(next), {label},
                            next % 4 == 0 ? Sentiment::Positive : Sentiment::Negative));
  while (out.size() < n) {
    out.push_back(comment("c" + std::to_string(next), "filler " + std::to_string(next), {}, Sentiment::Negative));
    ++next;
  }
  return out;
}

Embedder small_embedder() {
  EmbeddingOptions o;
  o.dim = 16;
  o.bucket_count = 4096;
  return Embedder(EmbeddingModel::subword(o), PreprocessConfig{});
}

SummaryDraft one_attribute(std::string id, std::string extract) {
  SummaryDraft d;
  d.categories.push_back({"Usability", {{"statement", {{std::move(id), std::move(extract)}}}}});
  return d;
}

class ScriptedTransport : public Transport {
 public:
  std::vector<HttpResult> script;
  int calls = 0;
  HttpResult post_json(const std::string&, const std::string&, double) override {
    const auto i = static_cast<std::size_t>(std::min<int>(calls, static_cast<int>(script.size()) - 1));
    ++calls;
    return script[i];
  }
};

}  // namespace

TEST_CASE("eligibility") {
  SummaryConfig cfg;
  CHECK(!eligible(product(19, {{"Usability", 19}}), cfg).eligible);
  CHECK(eligible(product(20, {{"Usability", 20}}), cfg).eligible);

  const auto e = eligible(product(25, {{"Usability", 10}, {"Help", 3}, {"Error", 4}}), cfg);
  CHECK(e.category_threshold == 4);
  std::vector<std::string> names;
  for (const auto& c : e.categories) names.push_back(c.name);
  CHECK(names == std::vector<std::string>{"Usability", "Error"});

  cfg.include_small_categories = {"Help"};
  const auto overridden = eligible(product(25, {{"Usability", 10}, {"Help", 3}, {"Error", 4}}), cfg);
  CHECK(overridden.categories.back() == CategoryCount{"Help", 3, true});

  SummaryConfig four;
  const auto ranked = eligible(
      product(78, {{"Usability", 30}, {"Functionality", 25}, {"Error", 10}, {"Help", 8}, {"Performance", 5}}), four);
  names.clear();
  for (const auto& c : ranked.categories) names.push_back(c.name);
  CHECK(names == std::vector<std::string>{"Usability", "Functionality", "Error", "Help"});

  CHECK(cfg.category_threshold(1000) == 20);
  CHECK(cfg.category_threshold(10) == 4);
}

TEST_CASE("prompts") {
  SummaryConfig cfg;
  auto a = product(30, {{"Usability", 10}, {"Help", 10}});
  a[0].labels.insert("Help");
  const auto ea = eligible(a, cfg);
  const auto pa = build_prompt(a, ea, cfg);
  CHECK(pa.render() == build_prompt(a, ea, cfg).render());
  CHECK(pa.comments[0].labels == std::vector<std::string>{"Help", "Usability"});
  CHECK(pa.render().find("Help; Usability") != std::string::npos);

  auto b = product(40, {{"Error", 20}});
  const auto pb = build_prompt(b, eligible(b, cfg), cfg);
  CHECK(pa.instructions == pb.instructions);
  CHECK(pa.instructions == instructions(cfg));
  CHECK_THROWS_AS(build_prompt(product(5, {}), eligible(product(5, {}), cfg), cfg), Error);
}

TEST_CASE("offline drafts are extractive and self-cited") {
  SummaryConfig cfg;
  const auto comments = product(25, {{"Usability", 10}, {"Help", 8}, {"Error", 2}});
  const auto prompt = build_prompt(comments, eligible(comments, cfg), cfg);
  const auto draft = generate(comments, prompt, small_embedder(), cfg);
  CHECK(draft.mode == "offline");
  REQUIRE(draft.categories.size() == 2);
  for (const auto& cat : draft.categories) {
    REQUIRE(cat.attributes.size() == 1);
    const auto& attr = cat.attributes[0];
    CHECK(attr.citations.front().extract == attr.statement);
    CHECK(attr.citations.size() <= static_cast<std::size_t>(cfg.offline_citations));
  }
  CHECK(validate(draft, comments, cfg).publishable(cfg.balance_tolerance));
  CHECK(to_json(draft) == to_json(generate(comments, prompt, small_embedder(), cfg)));
  CHECK(draft_from_json(to_json(draft)) == draft);
}

TEST_CASE("validation") {
  SummaryConfig cfg;
  const std::vector<Comment> src = {comment("c1", "Very  easy to use overall", {}, Sentiment::Positive)};
  CHECK(validate(one_attribute("c999", "easy"), src, cfg).attributes[0].status == Status::MissingId);
  CHECK(validate(one_attribute("c1", "easy to use"), src, cfg).attributes[0].status == Status::Supported);
  CHECK(validate(one_attribute("c1", "VERY easy"), src, cfg).attributes[0].status == Status::Supported);
  CHECK(validate(one_attribute("c1", "hard to use"), src, cfg).attributes[0].status == Status::ExtractNotFound);
  SummaryDraft bare;
  bare.categories.push_back({"Usability", {{"claim", {}}}});
  CHECK(validate(bare, src, cfg).attributes[0].status == Status::UnderSupported);
  CHECK(normalize_for_match("It’s  “fine”\n") == "it's \"fine\"");
}

TEST_CASE("snippet selection follows the sentiment mix") {
  SummaryConfig cfg;
  cfg.snippet_count = 4;
  std::vector<Comment> src;
  SummaryDraft d;
  d.categories.push_back({"Usability", {{"s", {}}}});
  for (int i = 0; i < 8; ++i) {
    src.push_back(comment("n" + std::to_string(i), "bad thing " + std::to_string(i), {}, Sentiment::Negative));
    d.categories[0].attributes[0].citations.push_back({src.back().id, src.back().text});
  }
  for (int i = 0; i < 4; ++i) {
    // 12 sources, 75% negative
    src.push_back(comment("p" + std::to_string(i), "good thing " + std::to_string(i), {}, Sentiment::Positive));
    d.categories[0].attributes[0].citations.push_back({src.back().id, src.back().text});
  }
  const auto snippets = select_snippets(d, src, cfg);
  REQUIRE(snippets.size() == 4);
  CHECK(std::count_if(snippets.begin(), snippets.end(), [](const Snippet& s) { return s.sentiment == "negative"; }) == 3);
  const auto report = validate(d, src, cfg, snippets);
  REQUIRE(report.balance);
  CHECK(report.balance->deviation == 0);

  std::vector<Comment> same(src.begin(), src.begin() + 8);
  for (const auto& s : select_snippets(d, same, cfg)) CHECK(s.sentiment == "negative");

  cfg.snippet_count = 20;
  CHECK_THROWS_AS(select_snippets(d, src, cfg), Error);

  CHECK(apportion({{"negative", 3}, {"positive", 1}}, 4) == std::map<std::string, std::size_t>{{"negative", 3}, {"positive", 1}});
  CHECK(apportion({{"a", 1}, {"b", 1}, {"c", 1}}, 2) == std::map<std::string, std::size_t>{{"a", 1}, {"b", 1}, {"c", 0}});
}

TEST_CASE("repair") {
  SummaryConfig cfg;
  const std::vector<Comment> src = {comment("c1", "The menu is confusing", {}, Sentiment::Negative),
                                    comment("c2", "Search is slow", {}, Sentiment::Negative)};
  SUBCASE("attribute left without citations is removed") {
    const auto d = one_attribute("c9", "confusing");
    const auto r = repair(d, validate(d, src, cfg), src, cfg);
    CHECK(r.draft.categories.empty());
    CHECK(r.changes.size() >= 2);
  }
  SUBCASE("one bad citation is dropped, the attribute stays") {
    auto d = one_attribute("c1", "menu is confusing");
    d.categories[0].attributes[0].citations.push_back({"c2", "search is fast"});
    const auto r = repair(d, validate(d, src, cfg), src, cfg);
    REQUIRE(r.draft.categories.size() == 1);
    CHECK(r.draft.categories[0].attributes[0].citations.size() == 1);
    CHECK(validate(r.draft, src, cfg).publishable(cfg.balance_tolerance));
  }
  SUBCASE("clean drafts are unchanged") {
    const auto d = one_attribute("c1", "menu");
    const auto r = repair(d, validate(d, src, cfg), src, cfg);
    CHECK(r.draft == d);
    CHECK(r.changes.empty());
  }
  SUBCASE("expansion widens to the full text") {
    const auto d = one_attribute("c1", "menu");
    const auto r = repair(d, validate(d, src, cfg), src, cfg, {"c1"});
    CHECK(r.draft.categories[0].attributes[0].citations[0].extract == "The menu is confusing");
  }
}

TEST_CASE("rendering") {
  SummaryConfig cfg;
  SummaryDraft d;
  d.categories.push_back({"Usability", {{"Some users find the menu confusing.", {{"c1", "menu is confusing"}}}}});
  d.categories.push_back({"Help", {{"Docs are outdated.", {{"c2", "docs"}}}}});
  const std::vector<Snippet> snippets = {{"c1", "menu is confusing", "negative", 1}};
  const auto md = render_markdown(d, snippets, 30, cfg);
  CHECK(md.find("**Usability:** Some users find the menu confusing. [c1]") != std::string::npos);
  CHECK(md.find("**Help:**") != std::string::npos);
  CHECK(md.find("menu is confusing") != std::string::npos);
  CHECK(md.find("Low volume") != std::string::npos);  // banner for 30 comments
  CHECK(render_markdown(d, snippets, 500, cfg).find("Low volume") == std::string::npos);
}

TEST_CASE("endpoint client") {
  PromptDocument prompt;
  prompt.instructions = "x";
  EndpointConfig ec;
  ec.url = "http://127.0.0.1:1/v1";
  ec.retries = 2;

  SUBCASE("timeouts are retried then reported") {
    ScriptedTransport t;
    t.script = {{HttpResult::Outcome::Timeout, 0, "", "timeout"}};
    try {
      call_endpoint(prompt, ec, t);
      FAIL("expected EndpointTimeout");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EndpointTimeout);
    }
    CHECK(t.calls == 3);
  }
  SUBCASE("status errors and malformed bodies") {
    ScriptedTransport t;
    t.script = {{HttpResult::Outcome::Ok, 503, "busy", ""}};
    CHECK_THROWS_AS(call_endpoint(prompt, ec, t), EndpointStatusError);
    t.script = {{HttpResult::Outcome::Ok, 200, "{not json", ""}};
    try {
      call_endpoint(prompt, ec, t);
      FAIL("expected ResponseSchema");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ResponseSchema);
    }
    CHECK_THROWS(parse_response(R"({"categories":[{"name":"A","attributes":[{"statement":1,"citations":[]}]}]})"));
  }
  SUBCASE("a timeout then success") {
    ScriptedTransport t;
    t.script = {{HttpResult::Outcome::Timeout, 0, "", ""},
                {HttpResult::Outcome::Ok, 200,
                 R"({"categories":[{"name":"Usability","attributes":[{"statement":"s","citations":[{"id":"c1","extract":"menu"}]}]}]})",
                 ""}};
    const auto d = call_endpoint(prompt, ec, t);
    CHECK(t.calls == 2);
    CHECK(d.categories.at(0).attributes.at(0).citations.at(0).comment_id == "c1");
  }
  SUBCASE("offline fallback only when configured") {
    SummaryConfig cfg;
    cfg.endpoint = ec;
    const auto comments = product(25, {{"Usability", 10}});
    const auto p = build_prompt(comments, eligible(comments, cfg), cfg);
    ScriptedTransport t;
    t.script = {{HttpResult::Outcome::Failed, 0, "", "refused"}};
    CHECK_THROWS_AS(generate(comments, p, small_embedder(), cfg, &t), Error);
    cfg.endpoint->fallback_offline = true;
    CHECK(generate(comments, p, small_embedder(), cfg, &t).mode == "offline");
  }
}

TEST_CASE("HTTP transport against a local server") {
  httplib::Server server;
  server.Post("/ok", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out = {{"categories", nlohmann::json::array()}};
    if (body.contains("prompt")) out["categories"].push_back({{"name", "Echo"}, {"attributes", nlohmann::json::array()}});
    res.set_content(out.dump(), "application/json");
  });
  server.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content("{}", "application/json");
  });
  server.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpTransport http;
  PromptDocument prompt;
  prompt.instructions = "summarize";
  EndpointConfig ec;
  ec.retries = 1;
  ec.timeout_seconds = 0.2;
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  ec.url = base + "/ok";
  CHECK(call_endpoint(prompt, ec, http).categories.at(0).name == "Echo");
  ec.url = base + "/fail";
  try {
    call_endpoint(prompt, ec, http);
    FAIL("expected status error");
  } catch (const EndpointStatusError& e) {
    CHECK(e.status() == 500);
  }
  ec.url = base + "/slow";
  try {
    call_endpoint(prompt, ec, http);
    FAIL("expected timeout");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EndpointTimeout);
  }
  server.stop();
  worker.join();
}
