#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "advqa/backend.hpp"

namespace advqa {

// One scripted response rule. `match` is applied to the concatenated user
// content of the request (substring by default, ECMAScript regex when
// `regex` is true; empty matches everything). An optional `model` field
// restricts the rule to bindings with that exact model_name, which is how a
// script gives role-specific replies when roles share prompt text.
struct MockRule {
    std::string match;
    std::string response;
    std::string model;
    bool regex = false;
};

struct MockCall {
    std::int64_t seq = 0;
    std::string backend_id;
    std::string model_name;
    std::optional<std::int64_t> request_seed;
    std::string system;
    std::string user;
    int matched_rule = -1;
};

std::vector<MockRule> load_mock_rules_json(const std::string& json_text);
std::vector<MockRule> load_mock_rules_file(const std::filesystem::path& path);

// Deterministic scripted backend: first matching rule wins, no match throws
// ScriptMiss. Records every invocation so tests can assert call counts and
// ordering. Thread safe.
class MockBackend : public Backend {
public:
    MockBackend() = default;
    explicit MockBackend(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

    CompletionResult complete(const BackendBinding& binding,
                              const std::vector<ChatMessage>& messages) override;

    std::vector<MockCall> trace() const;
    std::int64_t call_count() const;
    std::int64_t call_count_for_model(const std::string& model_name) const;
    void clear_trace();

private:
    std::vector<MockRule> rules_;
    mutable std::mutex mutex_;
    std::vector<MockCall> calls_;
    std::int64_t next_seq_ = 0;
};

}  // namespace advqa
