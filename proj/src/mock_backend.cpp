#include "advqa/mock_backend.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace advqa {

std::vector<MockRule> load_mock_rules_json(const std::string& json_text) {
    auto doc = nlohmann::json::parse(json_text);
    const nlohmann::json* rules_node = &doc;
    if (doc.is_object()) {
        if (!doc.contains("rules")) {
            throw std::runtime_error("mock script: expected a rule array or {\"rules\": [...]}");
        }
        rules_node = &doc["rules"];
    }
    if (!rules_node->is_array()) {
        throw std::runtime_error("mock script: rules must be an array");
    }
    std::vector<MockRule> rules;
    for (const auto& item : *rules_node) {
        MockRule rule;
        rule.match = item.value("match", std::string());
        if (!item.contains("response") || !item["response"].is_string()) {
            throw std::runtime_error("mock script: every rule needs a string response");
        }
        rule.response = item["response"].get<std::string>();
        rule.model = item.value("model", std::string());
        rule.regex = item.value("regex", false);
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<MockRule> load_mock_rules_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("mock script: cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_mock_rules_json(buf.str());
}

CompletionResult MockBackend::complete(const BackendBinding& binding,
                                       const std::vector<ChatMessage>& messages) {
    if (messages.empty() || messages.front().role != MessageRole::system) {
        throw std::invalid_argument("complete: messages must start with a system message");
    }

    std::string user;
    std::string system;
    std::int64_t prompt_chars = 0;
    for (const auto& m : messages) {
        prompt_chars += static_cast<std::int64_t>(m.content.size());
        if (m.role == MessageRole::user) user += m.content;
        if (m.role == MessageRole::system && system.empty()) system = m.content;
    }

    int matched = -1;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const MockRule& rule = rules_[i];
        if (!rule.model.empty() && rule.model != binding.model_name) continue;
        bool hit;
        if (rule.match.empty()) {
            hit = true;
        } else if (rule.regex) {
            hit = std::regex_search(user, std::regex(rule.match));
        } else {
            hit = user.find(rule.match) != std::string::npos;
        }
        if (hit) {
            matched = static_cast<int>(i);
            break;
        }
    }

    {
        std::lock_guard<std::mutex> lock(mutex_);
        MockCall call;
        call.seq = next_seq_++;
        call.backend_id = binding.backend_id;
        call.model_name = binding.model_name;
        call.request_seed = binding.request_seed;
        call.system = system;
        call.user = user;
        call.matched_rule = matched;
        calls_.push_back(std::move(call));
    }

    if (matched < 0) {
        std::string preview = user.substr(0, 120);
        std::replace(preview.begin(), preview.end(), '\n', ' ');
        throw ScriptMiss("mock script has no rule for model '" + binding.model_name +
                         "', user content: \"" + preview + "...\"");
    }

    CompletionResult result;
    result.text = rules_[static_cast<std::size_t>(matched)].response;
    result.usage.prompt_tokens = (prompt_chars + 3) / 4;
    result.usage.completion_tokens = estimate_tokens(result.text);
    result.usage.estimated = true;
    result.cached = false;
    return result;
}

std::vector<MockCall> MockBackend::trace() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

std::int64_t MockBackend::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<std::int64_t>(calls_.size());
}

std::int64_t MockBackend::call_count_for_model(const std::string& model_name) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return std::count_if(calls_.begin(), calls_.end(), [&](const MockCall& c) {
        return c.model_name == model_name;
    });
}

void MockBackend::clear_trace() {
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.clear();
}

}  // namespace advqa
