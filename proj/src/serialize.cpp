#include "advqa/serialize.hpp"

#include <set>

namespace advqa {

namespace {

const Json& require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw CorruptState(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string()) {
        throw CorruptState(std::string("field '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

std::int64_t require_int(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_integer()) {
        throw CorruptState(std::string("field '") + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

double require_number(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number()) {
        throw CorruptState(std::string("field '") + key + "' must be a number");
    }
    return v.get<double>();
}

bool require_bool(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_boolean()) {
        throw CorruptState(std::string("field '") + key + "' must be a boolean");
    }
    return v.get<bool>();
}

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                    const char* what) {
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (known.find(it.key()) == known.end()) {
            throw CorruptState(std::string("unknown key '") + it.key() + "' in " + what);
        }
    }
}

}  // namespace

Json to_json(const TokenUsage& usage) {
    return Json{{"prompt_tokens", usage.prompt_tokens},
                {"completion_tokens", usage.completion_tokens},
                {"estimated", usage.estimated}};
}

TokenUsage usage_from_json(const Json& j) {
    reject_unknown(j, {"prompt_tokens", "completion_tokens", "estimated"}, "usage");
    TokenUsage usage;
    usage.prompt_tokens = require_int(j, "prompt_tokens");
    usage.completion_tokens = require_int(j, "completion_tokens");
    usage.estimated = require_bool(j, "estimated");
    if (usage.prompt_tokens < 0 || usage.completion_tokens < 0) {
        throw CorruptState("usage counts must be nonnegative");
    }
    return usage;
}

Json to_json(const Question& question) {
    return Json{{"question_index", question.question_index},
                {"iteration", question.iteration},
                {"text", question.text}};
}

Question question_from_json(const Json& j) {
    reject_unknown(j, {"question_index", "iteration", "text"}, "question");
    Question q;
    q.question_index = static_cast<int>(require_int(j, "question_index"));
    q.iteration = static_cast<int>(require_int(j, "iteration"));
    q.text = require_string(j, "text");
    if (q.question_index < 0 || q.iteration < 0) {
        throw CorruptState("question indices must be nonnegative");
    }
    return q;
}

Json to_json(const Answer& answer) {
    return Json{{"role", to_string(answer.role)},
                {"text", answer.text},
                {"backend_id", answer.backend_id},
                {"usage", to_json(answer.usage)}};
}

Answer answer_from_json(const Json& j) {
    reject_unknown(j, {"role", "text", "backend_id", "usage"}, "answer");
    Answer a;
    const std::string role = require_string(j, "role");
    if (role == "strong") {
        a.role = AnswerRole::strong;
    } else if (role == "weak") {
        a.role = AnswerRole::weak;
    } else {
        throw CorruptState("answer role must be 'strong' or 'weak'");
    }
    a.text = require_string(j, "text");
    a.backend_id = require_string(j, "backend_id");
    a.usage = usage_from_json(require(j, "usage"));
    return a;
}

Json to_json(const TrajectoryStep& step) {
    Json j;
    j["question_index"] = step.question_index;
    j["iteration"] = step.iteration;
    j["question_before"] = to_json(step.question_before);
    j["answer_strong"] = to_json(step.answer_strong);
    j["answer_weak"] = to_json(step.answer_weak);
    j["score"] = step.feedback.score;
    j["critique"] = step.feedback.critique;
    j["gradient"] = step.gradient.text;
    j["question_after"] = to_json(step.question_after);
    j["parse_status"] = to_string(step.feedback.parse_status);
    j["timestamps"] = Json{{"strong", step.timestamps.strong},
                           {"weak", step.timestamps.weak},
                           {"feedback", step.timestamps.feedback},
                           {"guide", step.timestamps.guide},
                           {"revise", step.timestamps.revise}};
    return j;
}

TrajectoryStep step_from_json(const Json& j) {
    reject_unknown(j,
                   {"question_index", "iteration", "question_before", "answer_strong",
                    "answer_weak", "score", "critique", "gradient", "question_after",
                    "parse_status", "timestamps"},
                   "trajectory step");
    TrajectoryStep step;
    step.question_index = static_cast<int>(require_int(j, "question_index"));
    step.iteration = static_cast<int>(require_int(j, "iteration"));
    step.question_before = question_from_json(require(j, "question_before"));
    step.answer_strong = answer_from_json(require(j, "answer_strong"));
    step.answer_weak = answer_from_json(require(j, "answer_weak"));
    step.feedback.score = require_number(j, "score");
    step.feedback.critique = require_string(j, "critique");
    const std::string status = require_string(j, "parse_status");
    if (status == "parsed") {
        step.feedback.parse_status = ParseStatus::parsed;
    } else if (status == "recovered") {
        step.feedback.parse_status = ParseStatus::recovered;
    } else if (status == "failed") {
        step.feedback.parse_status = ParseStatus::failed;
    } else {
        throw CorruptState("unknown parse_status '" + status + "'");
    }
    step.gradient.text = require_string(j, "gradient");
    step.gradient.source_feedback_score = step.feedback.score;
    step.question_after = question_from_json(require(j, "question_after"));
    const Json& ts = require(j, "timestamps");
    reject_unknown(ts, {"strong", "weak", "feedback", "guide", "revise"}, "timestamps");
    step.timestamps.strong = require_int(ts, "strong");
    step.timestamps.weak = require_int(ts, "weak");
    step.timestamps.feedback = require_int(ts, "feedback");
    step.timestamps.guide = require_int(ts, "guide");
    step.timestamps.revise = require_int(ts, "revise");

    if (step.question_after.iteration != step.question_before.iteration + 1 ||
        step.question_after.question_index != step.question_before.question_index) {
        throw CorruptState("trajectory step lineage violated at (" +
                           std::to_string(step.question_index) + "," +
                           std::to_string(step.iteration) + ")");
    }
    if (step.feedback.parse_status != ParseStatus::failed &&
        (step.feedback.score < 0.0 || step.feedback.score > 1.0)) {
        throw CorruptState("score out of [0,1] in parsed step");
    }
    return step;
}

Json to_json(const BackendBinding& binding) {
    Json j;
    j["backend_id"] = binding.backend_id;
    j["endpoint_url"] = binding.endpoint_url;
    j["model_name"] = binding.model_name;
    j["temperature"] = binding.temperature;
    j["max_tokens"] = binding.max_tokens;
    j["api_key_env"] = binding.api_key_env;
    if (binding.request_seed.has_value()) {
        j["request_seed"] = *binding.request_seed;
    } else {
        j["request_seed"] = nullptr;
    }
    j["context_window_tokens"] = binding.context_window_tokens;
    return j;
}

BackendBinding binding_from_json(const Json& j) {
    reject_unknown(j,
                   {"backend_id", "endpoint_url", "model_name", "temperature",
                    "max_tokens", "api_key_env", "request_seed",
                    "context_window_tokens"},
                   "binding");
    BackendBinding b;
    b.backend_id = require_string(j, "backend_id");
    if (j.contains("endpoint_url")) b.endpoint_url = require_string(j, "endpoint_url");
    b.model_name = require_string(j, "model_name");
    if (j.contains("temperature")) b.temperature = require_number(j, "temperature");
    if (j.contains("max_tokens")) {
        b.max_tokens = static_cast<int>(require_int(j, "max_tokens"));
    }
    if (j.contains("api_key_env")) b.api_key_env = require_string(j, "api_key_env");
    if (j.contains("request_seed") && !j.at("request_seed").is_null()) {
        b.request_seed = require_int(j, "request_seed");
    }
    if (j.contains("context_window_tokens")) {
        b.context_window_tokens = require_int(j, "context_window_tokens");
    }
    return b;
}

Json to_json(const RunConfig& config) {
    Json j;
    j["n_questions"] = config.n_questions;
    j["n_iterations"] = config.n_iterations;
    j["seed"] = config.seed;
    j["concurrency_limit"] = config.concurrency_limit;
    j["dedup_threshold"] = config.dedup_threshold;
    j["truncation_policy"] = to_string(config.truncation_policy);
    j["plateau_stop"] = config.plateau_stop;
    j["include_contract_in_guide"] = config.include_contract_in_guide;
    j["roles"] = Json{{"strong", to_json(config.role_settings.strong)},
                      {"weak", to_json(config.role_settings.weak)},
                      {"feedback", to_json(config.role_settings.feedback)},
                      {"guide", to_json(config.role_settings.guide)},
                      {"revise", to_json(config.role_settings.revise)}};
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    reject_unknown(j,
                   {"n_questions", "n_iterations", "seed", "concurrency_limit",
                    "dedup_threshold", "truncation_policy", "plateau_stop",
                    "include_contract_in_guide", "roles"},
                   "run config");
    RunConfig c;
    c.n_questions = static_cast<int>(require_int(j, "n_questions"));
    c.n_iterations = static_cast<int>(require_int(j, "n_iterations"));
    c.seed = require_int(j, "seed");
    c.concurrency_limit = static_cast<int>(require_int(j, "concurrency_limit"));
    c.dedup_threshold = require_number(j, "dedup_threshold");
    const std::string policy = require_string(j, "truncation_policy");
    if (policy == "error") {
        c.truncation_policy = TruncationPolicy::error;
    } else if (policy == "truncate_head") {
        c.truncation_policy = TruncationPolicy::truncate_head;
    } else {
        throw CorruptState("unknown truncation_policy '" + policy + "'");
    }
    if (j.contains("plateau_stop")) c.plateau_stop = require_bool(j, "plateau_stop");
    if (j.contains("include_contract_in_guide")) {
        c.include_contract_in_guide = require_bool(j, "include_contract_in_guide");
    }
    const Json& roles = require(j, "roles");
    reject_unknown(roles, {"strong", "weak", "feedback", "guide", "revise"}, "roles");
    c.role_settings.strong = binding_from_json(require(roles, "strong"));
    c.role_settings.weak = binding_from_json(require(roles, "weak"));
    c.role_settings.feedback = binding_from_json(require(roles, "feedback"));
    c.role_settings.guide = binding_from_json(require(roles, "guide"));
    c.role_settings.revise = binding_from_json(require(roles, "revise"));
    return c;
}

}  // namespace advqa
