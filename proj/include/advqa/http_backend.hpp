#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "advqa/backend.hpp"

namespace advqa {

struct RetryPolicy {
    int max_attempts = 3;
    int base_delay_ms = 500;
    int max_delay_ms = 8000;
};

struct HttpResponse {
    bool transport_ok = false;   // false means connection-level failure
    int status = 0;
    std::string body;
    std::string transport_error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body to a URL. Injectable so retry behavior is testable
// without sockets; the default implementation uses cpp-httplib.
using Transport =
    std::function<HttpResponse(const std::string& url, const HttpHeaders& headers,
                               const std::string& body)>;

Transport make_httplib_transport();

// OpenAI-compatible chat-completions client: POST {endpoint_url}/chat/completions
// with model, messages, temperature, max_tokens, and optional seed; reads
// choices[0].message.content plus usage. Transport failures and HTTP >= 500
// retry with exponential backoff, as does 429; other 4xx fail immediately.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(RetryPolicy policy = {}, Transport transport = {});

    CompletionResult complete(const BackendBinding& binding,
                              const std::vector<ChatMessage>& messages) override;

    // Caps in-flight requests per backend_id; 0 disables the cap.
    void set_max_inflight(int limit);

private:
    class Gate;

    RetryPolicy policy_;
    Transport transport_;
    int max_inflight_ = 0;
    std::mutex gates_mutex_;
    std::map<std::string, std::shared_ptr<Gate>> gates_;

    std::shared_ptr<Gate> gate_for(const std::string& backend_id);
};

}  // namespace advqa
