#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfexplain/prompt_templates.hpp"
#include "cfexplain/types.hpp"

namespace cfx {

struct BackendConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::string api_key_env_var = "OPENAI_API_KEY";

  /// Throws ConfigError on negative temperature/retries or non-positive timeout.
  void validate() const;
};

struct ChatTurn {
  enum class Role { User, Assistant };
  Role role = Role::User;
  std::string content;
};

std::string_view to_string(ChatTurn::Role role);

enum class CallKind { Classify, MakeCounterfactual, TopKWithClass, TopKFromPair, RefineTopK, FillMasks };

std::string_view to_string(CallKind kind);
CallKind call_kind_for(PromptStep step);

/// A typed request. `transcript` is what a remote model sees; `id` and
/// `bindings` let a local backend answer without reading prompt text.
struct BackendCall {
  CallKind kind = CallKind::Classify;
  TemplateId id;
  Bindings bindings;
  std::vector<ChatTurn> transcript;
  // Distinguishes repeated sampling runs; part of the oracle's jitter seed.
  std::uint64_t sample_stream = 0;

  /// Renders the prompt for `id` and appends it as the final user turn.
  static BackendCall make(const TemplateId& id, Bindings bindings,
                          std::vector<ChatTurn> history = {});
};

struct ParsedReply {
  CallKind kind = CallKind::Classify;
  std::string raw;
  std::optional<Label> label;
  std::string text;
  std::vector<std::string> words;
  std::vector<ParseWarning> warnings;
};

/// Applies the parser matching call.kind. Throws ParseError.
ParsedReply parse_reply(const BackendCall& call, std::string_view raw);

struct CallStats {
  std::uint64_t calls_made = 0;
  std::uint64_t retries_used = 0;
  std::uint64_t parse_failures = 0;

  CallStats& operator+=(const CallStats& other);
  bool operator==(const CallStats&) const = default;
};

struct BackendIdentity {
  std::string model_name;
  double temperature = 0.0;

  bool operator==(const BackendIdentity&) const = default;
};

/// Something that turns one call into one raw reply. Implementations throw
/// TransportError for retryable transport faults and AuthError for rejected
/// credentials. Must be safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string send(const BackendCall& call, const BackendConfig& config) = 0;
};

/// Retry/parse front end shared by every pipeline.
class LlmGateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LlmGateway(std::shared_ptr<Backend> backend, BackendConfig config);

  /// One logical completion. Transport failures are retried up to
  /// max_retries times with exponential backoff; auth failures are not.
  /// Throws TransportError, AuthError, EmptyReply.
  std::string complete(const BackendCall& call, CallStats* tally = nullptr);

  /// complete() followed by the kind's parser; unparseable or empty replies
  /// re-issue the identical call up to max_retries times, then ParseExhausted.
  ParsedReply complete_parsed(const BackendCall& call, CallStats* tally = nullptr);

  CallStats stats() const;
  const BackendConfig& config() const { return config_; }
  BackendIdentity identity() const { return {config_.model_name, config_.temperature}; }

  /// Delay before retry number `attempt` (0-based): 1s * 2^attempt, +-20%.
  std::chrono::milliseconds backoff_delay(int attempt) const;
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  std::shared_ptr<Backend> backend_;
  BackendConfig config_;
  Sleeper sleeper_;
  std::atomic<std::uint64_t> calls_made_{0};
  std::atomic<std::uint64_t> retries_used_{0};
  std::atomic<std::uint64_t> parse_failures_{0};
};

/// OpenAI-compatible chat-completions client.
class HttpBackend : public Backend {
 public:
  /// Resolves the bearer token from config.api_key_env_var; throws AuthError
  /// if it is unset or empty.
  explicit HttpBackend(const BackendConfig& config);
  std::string send(const BackendCall& call, const BackendConfig& config) override;

 private:
  std::string api_key_;
};

nlohmann::json build_request_body(const BackendCall& call, const BackendConfig& config);

/// choices[0].message.content of a chat-completions response body.
std::string extract_reply_content(const std::string& body);

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;
};

ParsedUrl split_endpoint_url(const std::string& url);

}  // namespace cfx
