#include "advqa/http_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <thread>

namespace advqa {

namespace {

struct ParsedUrl {
    std::string scheme_host_port;  // e.g. "http://localhost:8080"
    std::string base_path;         // e.g. "/v1" (possibly empty)
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw TransportError("malformed endpoint URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl parsed;
    if (path_start == std::string::npos) {
        parsed.scheme_host_port = url;
    } else {
        parsed.scheme_host_port = url.substr(0, path_start);
        parsed.base_path = url.substr(path_start);
        while (!parsed.base_path.empty() && parsed.base_path.back() == '/') {
            parsed.base_path.pop_back();
        }
    }
    return parsed;
}

}  // namespace

Transport make_httplib_transport() {
    return [](const std::string& url, const HttpHeaders& headers,
              const std::string& body) -> HttpResponse {
        const std::string suffix = "/chat/completions";
        std::string base = url;
        std::string path = suffix;
        if (base.size() > suffix.size() &&
            base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
            base.resize(base.size() - suffix.size());
        }
        ParsedUrl parsed = split_url(base);
        path = parsed.base_path + suffix;

        httplib::Client client(parsed.scheme_host_port);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(300, 0);
        client.set_write_timeout(30, 0);

        httplib::Headers hdrs;
        for (const auto& [k, v] : headers) hdrs.emplace(k, v);

        auto res = client.Post(path, hdrs, body, "application/json");
        HttpResponse out;
        if (!res) {
            out.transport_ok = false;
            out.transport_error = httplib::to_string(res.error());
            return out;
        }
        out.transport_ok = true;
        out.status = res->status;
        out.body = res->body;
        return out;
    };
}

// Bounded in-flight counter per backend_id.
class HttpBackend::Gate {
public:
    explicit Gate(int limit) : limit_(limit) {}

    void acquire() {
        if (limit_ <= 0) return;
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return inflight_ < limit_; });
        ++inflight_;
    }

    void release() {
        if (limit_ <= 0) return;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --inflight_;
        }
        cv_.notify_one();
    }

private:
    int limit_;
    int inflight_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

HttpBackend::HttpBackend(RetryPolicy policy, Transport transport)
    : policy_(policy),
      transport_(transport ? std::move(transport) : make_httplib_transport()) {}

void HttpBackend::set_max_inflight(int limit) {
    std::lock_guard<std::mutex> lock(gates_mutex_);
    max_inflight_ = limit;
    gates_.clear();
}

std::shared_ptr<HttpBackend::Gate> HttpBackend::gate_for(const std::string& backend_id) {
    std::lock_guard<std::mutex> lock(gates_mutex_);
    auto& gate = gates_[backend_id];
    if (!gate) gate = std::make_shared<Gate>(max_inflight_);
    return gate;
}

CompletionResult HttpBackend::complete(const BackendBinding& binding,
                                       const std::vector<ChatMessage>& messages) {
    if (messages.empty() || messages.front().role != MessageRole::system) {
        throw std::invalid_argument("complete: messages must start with a system message");
    }

    nlohmann::ordered_json body;
    body["model"] = binding.model_name;
    auto msgs = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = binding.temperature;
    body["max_tokens"] = binding.max_tokens;
    if (binding.request_seed.has_value()) body["seed"] = *binding.request_seed;

    HttpHeaders headers;
    if (!binding.api_key_env.empty()) {
        const char* key = std::getenv(binding.api_key_env.c_str());
        if (key != nullptr && *key != '\0') {
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        }
    }

    const std::string url = binding.endpoint_url + "/chat/completions";
    const std::string payload = body.dump();

    auto gate = gate_for(binding.backend_id);
    gate->acquire();
    struct Release {
        Gate* g;
        ~Release() { g->release(); }
    } release{gate.get()};

    HttpResponse last;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        last = transport_(url, headers, payload);

        const bool retryable =
            !last.transport_ok || last.status >= 500 || last.status == 429;
        if (!retryable || attempt == policy_.max_attempts) break;

        std::int64_t delay = static_cast<std::int64_t>(policy_.base_delay_ms)
                             << (attempt - 1);
        if (delay > policy_.max_delay_ms) delay = policy_.max_delay_ms;
        if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }

    if (!last.transport_ok) {
        throw TransportError("backend '" + binding.backend_id + "': " +
                             (last.transport_error.empty() ? "connection failed"
                                                           : last.transport_error) +
                             " after " + std::to_string(policy_.max_attempts) +
                             " attempts");
    }
    if (last.status >= 500 || last.status == 429) {
        throw TransportError("backend '" + binding.backend_id + "': HTTP " +
                             std::to_string(last.status) + " after " +
                             std::to_string(policy_.max_attempts) + " attempts");
    }
    if (last.status >= 400) {
        throw ProviderError(last.status, "backend '" + binding.backend_id +
                                             "': HTTP " + std::to_string(last.status) +
                                             ": " + last.body.substr(0, 300));
    }

    auto doc = nlohmann::json::parse(last.body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty()) {
        throw EmptyCompletion("backend '" + binding.backend_id +
                              "': response has no choices");
    }
    const auto& choice = doc["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw EmptyCompletion("backend '" + binding.backend_id +
                              "': choice has no message content");
    }

    CompletionResult result;
    result.text = choice["message"]["content"].get<std::string>();
    if (result.text.empty()) {
        throw EmptyCompletion("backend '" + binding.backend_id +
                              "': provider returned empty text");
    }

    if (doc.contains("usage") && doc["usage"].is_object()) {
        result.usage.prompt_tokens =
            doc["usage"].value("prompt_tokens", std::int64_t{0});
        result.usage.completion_tokens =
            doc["usage"].value("completion_tokens", std::int64_t{0});
        result.usage.estimated = false;
    } else {
        std::int64_t prompt_chars = 0;
        for (const auto& m : messages) {
            prompt_chars += static_cast<std::int64_t>(m.content.size());
        }
        result.usage.prompt_tokens = (prompt_chars + 3) / 4;
        result.usage.completion_tokens = estimate_tokens(result.text);
        result.usage.estimated = true;
    }
    result.cached = false;
    return result;
}

}  // namespace advqa
