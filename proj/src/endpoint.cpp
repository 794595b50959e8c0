#include "uxfb/endpoint.hpp"

#include <cmath>

#include "httplib.h"
#include "uxfb/error.hpp"

namespace uxfb::summ {

using nlohmann::json;

namespace {

struct Url {
  std::string origin;  // scheme://host:port
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0)
    throw Error(ErrorKind::EndpointError, "unsupported endpoint url '" + url + "' (expected http://host[:port]/path)");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpResult HttpTransport::post_json(const std::string& url, const std::string& body, double timeout_seconds) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - std::floor(timeout_seconds)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  auto res = client.Post(parts.path, body, "application/json");
  HttpResult out;
  if (!res) {
    const auto err = res.error();
    out.outcome = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) ? HttpResult::Outcome::Timeout
                                                                                           : HttpResult::Outcome::Failed;
    out.error = httplib::to_string(err);
    return out;
  }
  out.outcome = HttpResult::Outcome::Ok;
  out.status = res->status;
  out.body = res->body;
  return out;
}

json request_body(const PromptDocument& prompt, const EndpointConfig& config) {
  return {{"prompt", prompt.render()}, {"max_tokens", config.max_tokens}, {"temperature", config.temperature}};
}

namespace {

[[noreturn]] void schema_error(const std::string& where) {
  throw Error(ErrorKind::ResponseSchema, "endpoint response: " + where);
}

const json& field(const json& obj, const char* key, json::value_t type, const std::string& where) {
  if (!obj.is_object()) schema_error(where + " is not an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where + " lacks '" + key + "'");
  if (it->type() != type) schema_error(where + "." + key + " has the wrong type");
  return *it;
}

}  // namespace

SummaryDraft parse_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    schema_error(std::string("not valid JSON (") + e.what() + ")");
  }
  SummaryDraft draft;
  const auto& cats = field(doc, "categories", json::value_t::array, "document");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const auto where = "categories[" + std::to_string(i) + "]";
    CategorySummary cat;
    cat.name = field(cats[i], "name", json::value_t::string, where).get<std::string>();
    const auto& attrs = field(cats[i], "attributes", json::value_t::array, where);
    for (std::size_t j = 0; j < attrs.size(); ++j) {
      const auto aw = where + ".attributes[" + std::to_string(j) + "]";
      Attribute attr;
      attr.statement = field(attrs[j], "statement", json::value_t::string, aw).get<std::string>();
      const auto& cites = field(attrs[j], "citations", json::value_t::array, aw);
      for (std::size_t k = 0; k < cites.size(); ++k) {
        const auto cw = aw + ".citations[" + std::to_string(k) + "]";
        attr.citations.push_back({field(cites[k], "id", json::value_t::string, cw).get<std::string>(),
                                  field(cites[k], "extract", json::value_t::string, cw).get<std::string>()});
      }
      cat.attributes.push_back(std::move(attr));
    }
    draft.categories.push_back(std::move(cat));
  }
  return draft;
}

SummaryDraft call_endpoint(const PromptDocument& prompt, const EndpointConfig& config, Transport& transport) {
  const auto body = request_body(prompt, config).dump();
  const int attempts = config.retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const auto res = transport.post_json(config.url, body, config.timeout_seconds);
    switch (res.outcome) {
      case HttpResult::Outcome::Timeout:
        if (attempt == attempts)
          throw Error(ErrorKind::EndpointTimeout, "endpoint timed out after " + std::to_string(attempts) + " attempts");
        continue;
      case HttpResult::Outcome::Failed:
        throw Error(ErrorKind::EndpointError, "endpoint request failed: " + res.error);
      case HttpResult::Outcome::Ok:
        if (res.status < 200 || res.status >= 300) throw EndpointStatusError(res.status, res.body);
        return parse_response(res.body);
    }
  }
  throw Error(ErrorKind::EndpointTimeout, "endpoint timed out");
}

}  // namespace uxfb::summ
