#include "advqa/backend.hpp"

#include <json.hpp>

#include "advqa/sha256.hpp"

namespace advqa {

std::string_view to_string(MessageRole role) {
    switch (role) {
        case MessageRole::system: return "system";
        case MessageRole::user: return "user";
        case MessageRole::assistant: return "assistant";
    }
    return "user";
}

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::string cache_key(const BackendBinding& binding,
                      const std::vector<ChatMessage>& messages) {
    nlohmann::ordered_json canonical;
    canonical["backend_id"] = binding.backend_id;
    canonical["model_name"] = binding.model_name;
    canonical["temperature"] = binding.temperature;
    canonical["max_tokens"] = binding.max_tokens;
    if (binding.request_seed.has_value()) {
        canonical["request_seed"] = *binding.request_seed;
    } else {
        canonical["request_seed"] = nullptr;
    }
    auto msgs = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    canonical["messages"] = std::move(msgs);
    return sha256_hex(canonical.dump());
}

}  // namespace advqa
