#pragma once

#include <string>

#include "json.hpp"
#include "uxfb/summarize.hpp"

// Client for the external text-generation endpoint.

namespace uxfb::summ {

struct HttpResult {
  enum class Outcome { Ok, Timeout, Failed };
  Outcome outcome = Outcome::Failed;
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResult post_json(const std::string& url, const std::string& body, double timeout_seconds) = 0;
};

/// cpp-httplib backed transport; plain http only.
class HttpTransport : public Transport {
 public:
  HttpResult post_json(const std::string& url, const std::string& body, double timeout_seconds) override;
};

nlohmann::json request_body(const PromptDocument& prompt, const EndpointConfig& config);

/// Strict parse of {categories: [{name, attributes: [{statement, citations:
/// [{id, extract}]}]}]}. Throws ResponseSchema.
SummaryDraft parse_response(const std::string& body);

/// POSTs the prompt, retrying timeouts only (retries + 1 attempts in total).
/// Throws EndpointTimeout, EndpointStatusError, EndpointError, ResponseSchema.
SummaryDraft call_endpoint(const PromptDocument& prompt, const EndpointConfig& config, Transport& transport);

}  // namespace uxfb::summ
