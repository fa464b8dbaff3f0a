#include "advqa/core.hpp"

namespace advqa {

Question placeholder_question(int index) {
    return Question{index, 0, std::string(kPlaceholderQuestionText)};
}

std::string_view to_string(AnswerRole role) {
    return role == AnswerRole::strong ? "strong" : "weak";
}

std::string_view to_string(ParseStatus status) {
    switch (status) {
        case ParseStatus::parsed: return "parsed";
        case ParseStatus::recovered: return "recovered";
        case ParseStatus::failed: return "failed";
    }
    return "failed";
}

std::string_view to_string(TruncationPolicy policy) {
    return policy == TruncationPolicy::error ? "error" : "truncate_head";
}

std::vector<std::string> validate_config(const RunConfig& config) {
    std::vector<std::string> problems;
    if (config.n_questions < 1) problems.push_back("n_questions must be >= 1");
    if (config.n_iterations < 1) problems.push_back("n_iterations must be >= 1");
    if (config.concurrency_limit < 1) {
        problems.push_back("concurrency_limit must be >= 1");
    }
    if (config.dedup_threshold < 0.0 || config.dedup_threshold > 1.0) {
        problems.push_back("dedup_threshold must lie in [0,1]");
    }
    const std::pair<const char*, const BackendBinding*> roles[] = {
        {"strong", &config.role_settings.strong},
        {"weak", &config.role_settings.weak},
        {"feedback", &config.role_settings.feedback},
        {"guide", &config.role_settings.guide},
        {"revise", &config.role_settings.revise},
    };
    for (const auto& [name, binding] : roles) {
        const std::string prefix = "roles." + std::string(name) + ": ";
        if (binding->temperature < 0.0) {
            problems.push_back(prefix + "temperature must be >= 0");
        }
        if (binding->max_tokens < 1) {
            problems.push_back(prefix + "max_tokens must be >= 1");
        }
        if (binding->model_name.empty()) {
            problems.push_back(prefix + "model_name must be non-empty");
        }
        const std::string& url = binding->endpoint_url;
        if (!url.empty() && url.rfind("http://", 0) != 0 &&
            url.rfind("https://", 0) != 0) {
            problems.push_back(prefix + "endpoint_url must start with http:// or https://");
        }
    }
    return problems;
}

std::int64_t derive_request_seed(std::int64_t base_seed, int question_index,
                                 int iteration) {
    return base_seed + static_cast<std::int64_t>(question_index) * 10007 + iteration;
}

}  // namespace advqa
