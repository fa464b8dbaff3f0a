#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advqa/backend.hpp"

namespace advqa {

// The fixed domain document grounding every agent call in a run.
struct DocumentContext {
    std::string id;
    std::string text;
    std::string source_path;
    std::int64_t token_estimate = 0;
};

// The optimized variable: question text plus lineage. Identity is
// (question_index, iteration), never text content; two questions may share
// text when a revision degenerates.
struct Question {
    int question_index = 0;
    int iteration = 0;
    std::string text;
};

inline constexpr std::string_view kPlaceholderQuestionText = "Q: ???";

// The iteration-0 question every trajectory starts from.
Question placeholder_question(int index);

enum class AnswerRole { strong, weak };

std::string_view to_string(AnswerRole role);

struct Answer {
    AnswerRole role = AnswerRole::strong;
    std::string text;
    TokenUsage usage;
    std::string backend_id;
};

enum class ParseStatus { parsed, recovered, failed };

std::string_view to_string(ParseStatus status);

// The disagreement loss: numeric incorrectness of the weak answer in [0,1]
// plus the judge's critique. score and critique are only meaningful when
// parse_status != failed.
struct FeedbackResult {
    double score = 0.0;
    std::string critique;
    std::string raw_text;
    ParseStatus parse_status = ParseStatus::failed;
};

// Natural-language editing instruction for the next question revision.
struct GradientInstruction {
    std::string text;
    double source_feedback_score = 0.0;
};

// Logical call-completion stamps within one step. Values encode the enforced
// order (both answers before feedback, feedback before guide, guide before
// revise); they are deterministic so persisted trajectories are reproducible
// byte for byte. Wall-clock times go to the event log instead.
struct StepTimestamps {
    std::int64_t strong = 0;
    std::int64_t weak = 0;
    std::int64_t feedback = 0;
    std::int64_t guide = 0;
    std::int64_t revise = 0;
};

// One inner-loop record: both answers, feedback, gradient, revised question.
struct TrajectoryStep {
    int question_index = 0;
    int iteration = 0;
    Question question_before;
    Answer answer_strong;
    Answer answer_weak;
    FeedbackResult feedback;
    GradientInstruction gradient;
    Question question_after;
    StepTimestamps timestamps;
};

// One synthetic dataset entry: a final question paired with the strong
// model's answer. final_score is the feedback score from the last loop
// iteration (the final question itself is never scored).
struct QARecord {
    Question question;
    std::string answer;
    std::string context_id;
    double final_score = 0.0;
};

enum class TruncationPolicy { error, truncate_head };

std::string_view to_string(TruncationPolicy policy);

struct RoleBindings {
    BackendBinding strong;
    BackendBinding weak;
    BackendBinding feedback;
    BackendBinding guide;
    BackendBinding revise;
};

struct RunConfig {
    int n_questions = 1;       // N
    int n_iterations = 1;      // T
    std::int64_t seed = 0;
    int concurrency_limit = 1;
    double dedup_threshold = 0.9;
    TruncationPolicy truncation_policy = TruncationPolicy::error;
    RoleBindings role_settings;
    // Optional economy stop: end a trajectory early once the score has been
    // flat within +-0.05 for two consecutive iterations. Off by default.
    bool plateau_stop = false;
    // Whether guide/revise prompts also see the contract text.
    bool include_contract_in_guide = false;
};

// Returns human-readable problems; empty means the config is valid.
std::vector<std::string> validate_config(const RunConfig& config);

// Deterministic per-call request seed: distinct but reproducible sampling
// for every (question, iteration) call site.
std::int64_t derive_request_seed(std::int64_t base_seed, int question_index,
                                 int iteration);

}  // namespace advqa
