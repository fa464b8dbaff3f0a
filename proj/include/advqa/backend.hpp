#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace advqa {

enum class MessageRole { system, user, assistant };

std::string_view to_string(MessageRole role);

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string content;
};

// One model endpoint configuration. An empty endpoint_url selects the
// scripted mock backend; anything else must be an OpenAI-compatible
// chat-completions server.
struct BackendBinding {
    std::string backend_id;
    std::string endpoint_url;
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string api_key_env;
    std::optional<std::int64_t> request_seed;
    // Approximate context window in tokens; 0 means unlimited (no
    // truncation checks are applied).
    std::int64_t context_window_tokens = 0;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool estimated = false;

    std::int64_t total() const { return prompt_tokens + completion_tokens; }

    TokenUsage& operator+=(const TokenUsage& other) {
        prompt_tokens += other.prompt_tokens;
        completion_tokens += other.completion_tokens;
        estimated = estimated || other.estimated;
        return *this;
    }
};

struct CompletionResult {
    std::string text;
    TokenUsage usage;
    bool cached = false;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Network failure or HTTP >= 500 after retries were exhausted.
class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

// HTTP 4xx other than 429; never retried.
class ProviderError : public BackendError {
public:
    ProviderError(int status, const std::string& what)
        : BackendError(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

// Provider returned a response with no assistant text.
class EmptyCompletion : public BackendError {
public:
    using BackendError::BackendError;
};

// The mock backend has no rule matching this request.
class ScriptMiss : public BackendError {
public:
    using BackendError::BackendError;
};

// ceil(character_count / 4); the conventional rough chars-per-token heuristic.
// Results are flagged estimated=true wherever they feed a TokenUsage.
std::int64_t estimate_tokens(std::string_view text);

// 256-bit hex digest over the canonical serialization of the request:
// (backend_id, model_name, temperature, max_tokens, request_seed, messages
// in order). Equal inputs give equal keys.
std::string cache_key(const BackendBinding& binding,
                      const std::vector<ChatMessage>& messages);

class Backend {
public:
    virtual ~Backend() = default;

    // Returns the provider's first choice text plus usage. Must be safe for
    // concurrent invocation. Throws a BackendError subclass on failure.
    virtual CompletionResult complete(const BackendBinding& binding,
                                      const std::vector<ChatMessage>& messages) = 0;
};

}  // namespace advqa
