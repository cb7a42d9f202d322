#include "cfexplain/llm_gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#ifdef CFX_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "cfexplain/errors.hpp"

namespace cfx {

using json = nlohmann::json;

void BackendConfig::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (timeout.count() <= 0) throw ConfigError("timeout must be > 0");
  if (model_name.empty()) throw ConfigError("model name must not be empty");
}

std::string_view to_string(ChatTurn::Role role) {
  return role == ChatTurn::Role::User ? "user" : "assistant";
}

std::string_view to_string(CallKind kind) {
  switch (kind) {
    case CallKind::Classify: return "Classify";
    case CallKind::MakeCounterfactual: return "MakeCounterfactual";
    case CallKind::TopKWithClass: return "TopKWithClass";
    case CallKind::TopKFromPair: return "TopKFromPair";
    case CallKind::RefineTopK: return "RefineTopK";
    case CallKind::FillMasks: return "FillMasks";
  }
  return "Unknown";
}

CallKind call_kind_for(PromptStep step) {
  switch (step) {
    case PromptStep::DpTopK: return CallKind::TopKWithClass;
    case PromptStep::ClassifyOnly:
    case PromptStep::ClassifyCounterfactual:
    case PromptStep::DcrReclassify: return CallKind::Classify;
    case PromptStep::MakeCounterfactual: return CallKind::MakeCounterfactual;
    case PromptStep::CfpTopKFromPair: return CallKind::TopKFromPair;
    case PromptStep::CfsRefine: return CallKind::RefineTopK;
    case PromptStep::DcrFillMasks: return CallKind::FillMasks;
  }
  throw UnsupportedCall("unknown prompt step");
}

BackendCall BackendCall::make(const TemplateId& id, Bindings bindings,
                              std::vector<ChatTurn> history) {
  BackendCall call;
  call.kind = call_kind_for(id.step);
  call.id = id;
  call.transcript = std::move(history);
  call.transcript.push_back({ChatTurn::Role::User, render(id, bindings)});
  call.bindings = std::move(bindings);
  return call;
}

ParsedReply parse_reply(const BackendCall& call, std::string_view raw) {
  ParsedReply out;
  out.kind = call.kind;
  out.raw = std::string(raw);
  switch (call.kind) {
    case CallKind::Classify:
      out.label = parse_label(parse_tagged(raw));
      break;
    case CallKind::MakeCounterfactual:
    case CallKind::FillMasks:
      out.text = parse_text_reply(raw, call.id.dataset);
      break;
    case CallKind::TopKWithClass: {
      auto cw = parse_class_words(raw, call.id.k);
      out.label = cw.label;
      out.words = std::move(cw.words);
      out.warnings = std::move(cw.warnings);
      break;
    }
    case CallKind::TopKFromPair:
    case CallKind::RefineTopK: {
      auto wl = parse_word_list(raw, call.id.k);
      out.words = std::move(wl.words);
      out.warnings = std::move(wl.warnings);
      break;
    }
    default:
      throw UnsupportedCall("no parser for call kind");
  }
  return out;
}

CallStats& CallStats::operator+=(const CallStats& other) {
  calls_made += other.calls_made;
  retries_used += other.retries_used;
  parse_failures += other.parse_failures;
  return *this;
}

// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(std::shared_ptr<Backend> backend, BackendConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  config_.validate();
  if (!backend_) throw ConfigError("gateway requires a backend");
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds LlmGateway::backoff_delay(int attempt) const {
  thread_local std::mt19937 rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  const double base_ms = 1000.0 * std::ldexp(1.0, attempt);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(base_ms * jitter(rng))));
}

std::string LlmGateway::complete(const BackendCall& call, CallStats* tally) {
  for (int attempt = 0;; ++attempt) {
    calls_made_.fetch_add(1, std::memory_order_relaxed);
    if (tally) ++tally->calls_made;
    std::string reply;
    try {
      reply = backend_->send(call, config_);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= config_.max_retries) throw;
      retries_used_.fetch_add(1, std::memory_order_relaxed);
      if (tally) ++tally->retries_used;
      sleeper_(backoff_delay(attempt));
      continue;
    }
    if (trim(reply).empty()) throw EmptyReply("backend returned an empty reply");
    return reply;
  }
}

ParsedReply LlmGateway::complete_parsed(const BackendCall& call, CallStats* tally) {
  std::string last_problem;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    try {
      const std::string raw = complete(call, tally);
      return parse_reply(call, raw);
    } catch (const ParseError& e) {
      last_problem = e.what();
    } catch (const EmptyReply& e) {
      last_problem = e.what();
    }
    parse_failures_.fetch_add(1, std::memory_order_relaxed);
    if (tally) ++tally->parse_failures;
  }
  throw ParseExhausted(std::string(to_string(call.kind)) + ": no parseable reply after " +
                       std::to_string(config_.max_retries + 1) + " attempt(s): " + last_problem);
}

CallStats LlmGateway::stats() const {
  return {calls_made_.load(), retries_used_.load(), parse_failures_.load()};
}

// ---------------------------------------------------------------------------

json build_request_body(const BackendCall& call, const BackendConfig& config) {
  json messages = json::array();
  for (const auto& turn : call.transcript) {
    messages.push_back({{"role", to_string(turn.role)}, {"content", turn.content}});
  }
  return {{"model", config.model_name},
          {"temperature", config.temperature},
          {"n", 1},
          {"messages", std::move(messages)}};
}

std::string extract_reply_content(const std::string& body) {
  const json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) throw TransportError("response body is not JSON", false);
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty())
    throw TransportError("response has no choices", false);
  const auto& message = (*choices)[0].value("message", json::object());
  const auto content = message.find("content");
  if (content == message.end() || content->is_null()) return {};
  if (!content->is_string()) throw TransportError("message content is not a string", false);
  return content->get<std::string>();
}

ParsedUrl split_endpoint_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("unsupported URL scheme '" + scheme + "'");
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpBackend::HttpBackend(const BackendConfig& config) {
  const char* key = std::getenv(config.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw AuthError("environment variable " + config.api_key_env_var +
                    " is not set; it must hold the API credential");
  }
  api_key_ = key;
  const auto url = split_endpoint_url(config.endpoint_url);
#ifndef CFX_WITH_OPENSSL
  if (url.scheme_host_port.rfind("https", 0) == 0)
    throw ConfigError("built without TLS support; https endpoints are unavailable");
#endif
}

std::string HttpBackend::send(const BackendCall& call, const BackendConfig& config) {
  const auto url = split_endpoint_url(config.endpoint_url);
  httplib::Client client(url.scheme_host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  const std::string body = build_request_body(call, config).dump();
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));

  const int status = res->status;
  if (status == 401 || status == 403)
    throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
  if (status >= 500 || status == 408 || status == 429)
    throw TransportError("HTTP " + std::to_string(status));
  if (status < 200 || status >= 300)
    throw TransportError("HTTP " + std::to_string(status) + ": " + res->body, false);
  return extract_reply_content(res->body);
}

}  // namespace cfx
