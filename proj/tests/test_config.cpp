#include "doctest.h"
#include "helpers.hpp"
#include "uxfb/config.hpp"
#include "uxfb/error.hpp"

using namespace uxfb;

namespace {

ErrorKind failure(const std::string& text) {
  try {
    cfg::parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;  // not raised
}

}  // namespace

TEST_CASE("TOML subset") {
  const auto doc = cfg::parse_toml(R"(
# comment
seed = 7
name = "a # not a comment"
[a.b]
flag = true
xs = [1, 2.5, "three"]
lit = 'raw\n'
neg = -3
)");
  CHECK(doc["seed"] == 7);
  CHECK(doc["name"] == "a # not a comment");
  CHECK(doc["a"]["b"]["flag"] == true);
  CHECK(doc["a"]["b"]["xs"].size() == 3);
  CHECK(doc["a"]["b"]["lit"] == "raw\\n");
  CHECK(doc["a"]["b"]["neg"] == -3);
  CHECK_THROWS_AS(cfg::parse_toml("x = 1\nx = 2\n"), LineError);
  CHECK_THROWS_AS(cfg::parse_toml("[t]\n[t]\n"), LineError);
  try {
    cfg::parse_toml("ok = 1\nbroken =\n");
    FAIL("expected error");
  } catch (const LineError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("pipeline config") {
  const auto c = cfg::parse_config(R"(
seed = 9
jobs = 2
period = "2024Q1"
[paths]
comments = "data/c.jsonl"
[embedding]
dim = 32
[train]
n_rounds = 5
[grid]
folds = 3
n_rounds = [5, 10]
[summary]
snippet_count = 4
include_small_categories = ["Help"]
[summary.endpoint]
url = "http://localhost:8080/gen"
retries = 1
)",
                                   "/base");
  CHECK(c.seed == 9);
  CHECK(c.summary.seed == 9);
  CHECK(c.jobs == 2);
  CHECK(c.paths.comments == "/base/data/c.jsonl");
  CHECK(c.embedding.dim == 32);
  CHECK(c.train.n_rounds == 5);
  CHECK(c.grid.n_rounds == std::vector<int>{5, 10});
  CHECK(c.folds == 3);
  CHECK(c.summary.snippet_count == 4);
  CHECK(c.summary.include_small_categories == std::set<std::string>{"Help"});
  REQUIRE(c.summary.endpoint);
  CHECK(c.summary.endpoint->retries == 1);
}

TEST_CASE("config parsing fails closed") {
  CHECK(failure("unknown = 1\n") == ErrorKind::Config);
  CHECK(failure("[paths]\ncorpus = \"x\"\n") == ErrorKind::Config);
  CHECK(failure("[mystery]\n") == ErrorKind::Config);
  CHECK(failure("seed = \"seven\"\n") == ErrorKind::Config);
  CHECK(failure("[train]\nlearning_rate = 0\n") == ErrorKind::Config);
  CHECK(failure("[summary]\nmax_categories = 0\n") == ErrorKind::Config);
  CHECK(failure("period = \"someday\"\n") == ErrorKind::Config);
}

TEST_CASE("config round trip") {
  auto c = cfg::parse_config("seed = 3\n[paths]\ncomments = \"/x/c.jsonl\"\n[grid]\nmax_depth = [2]\n");
  const auto again = cfg::parse_config(cfg::to_toml(c));
  CHECK(cfg::to_toml(again) == cfg::to_toml(c));
  CHECK(again.grid.max_depth == std::vector<int>{2});
  CHECK(again.seed == 3);
}

TEST_CASE("missing config file") {
  try {
    cfg::load_config("/nonexistent/uxfb.toml");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
