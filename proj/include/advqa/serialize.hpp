#pragma once

#include <json.hpp>

#include <stdexcept>

#include "advqa/core.hpp"

namespace advqa {

using Json = nlohmann::ordered_json;

// Persisted state that cannot be trusted: parse failures, schema violations,
// and integrity-hash mismatches all surface as CorruptState.
class CorruptState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json to_json(const TokenUsage& usage);
TokenUsage usage_from_json(const Json& j);

Json to_json(const Question& question);
Question question_from_json(const Json& j);

Json to_json(const Answer& answer);
Answer answer_from_json(const Json& j);

// Fixed trajectory.jsonl line schema: question_index, iteration,
// question_before, answer_strong, answer_weak, score, critique, gradient,
// question_after, parse_status, timestamps.
Json to_json(const TrajectoryStep& step);
TrajectoryStep step_from_json(const Json& j);

Json to_json(const BackendBinding& binding);
BackendBinding binding_from_json(const Json& j);

Json to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& j);

}  // namespace advqa
