#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "advqa/core.hpp"
#include "advqa/prompts.hpp"

namespace advqa {

enum class RoleName { strong, weak, feedback, guide, revise };

std::string_view to_string(RoleName name);

struct AgentRole {
    RoleName name = RoleName::strong;
    std::string system_prompt;
    BackendBinding binding;
};

// Thrown when the contract does not fit the binding's context window and the
// truncation policy is `error`.
class ContextTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The five role agents plus the backend they speak through. Stateless given
// the binding; safe for concurrent use across questions.
struct AgentSet {
    AgentRole strong;
    AgentRole weak;
    AgentRole feedback;
    AgentRole guide;
    AgentRole revise;
    Backend* backend = nullptr;
    PromptSet prompts;
    TruncationPolicy truncation = TruncationPolicy::error;
    bool include_contract_in_guide = false;

    const AgentRole& role(RoleName name) const;
};

AgentSet make_agent_set(const RunConfig& config, Backend& backend,
                        PromptSet prompts = PromptSet::defaults());

struct ScoreParse {
    double score = 0.0;
    ParseStatus status = ParseStatus::failed;
    // The matched score fragment in the raw text (cue word included when it
    // directly qualifies the number); empty when status == failed.
    std::size_t fragment_begin = 0;
    std::size_t fragment_end = 0;
};

// Total function: extracts the first in-range [0,1] numeric literal,
// preferring numbers within 20 characters of a cue word (score,
// incorrectness, rating). A cued match is `parsed`, an uncued in-range
// literal is `recovered`, no usable literal is `failed`.
ScoreParse parse_score(std::string_view raw);

// Queries the strong or weak agent with (contract, question).
Answer answer_question(const AgentSet& agents, AnswerRole which,
                       const DocumentContext& context, const Question& question,
                       std::optional<std::int64_t> request_seed = std::nullopt);

// Fills the discrepancy-evaluation template, queries the feedback agent, and
// parses the incorrectness score. A parse failure triggers one re-ask with a
// format reminder; if that also fails the result carries parse_status=failed
// (the caller decides how to proceed — no loss is ever fabricated).
FeedbackResult evaluate_feedback(const AgentSet& agents,
                                 const DocumentContext& context,
                                 const Question& question, const Answer& strong,
                                 const Answer& weak,
                                 std::optional<std::int64_t> request_seed = std::nullopt,
                                 TokenUsage* usage_out = nullptr);

// Asks the guide agent for a natural-language editing instruction,
// conditioned on the question and the feedback critique plus score.
GradientInstruction guide_revision(const AgentSet& agents,
                                   const DocumentContext& context,
                                   const Question& question,
                                   const FeedbackResult& feedback,
                                   std::optional<std::int64_t> request_seed = std::nullopt,
                                   TokenUsage* usage_out = nullptr);

struct ReviseResult {
    Question question;
    // The model returned empty text, so the previous wording was kept.
    bool empty_revision = false;
};

// Applies the editing instruction: same question_index, iteration + 1, text
// from the revise agent stripped of surrounding quotes and markup.
ReviseResult revise_question(const AgentSet& agents, const Question& question,
                             const GradientInstruction& gradient,
                             std::optional<std::int64_t> request_seed = std::nullopt,
                             TokenUsage* usage_out = nullptr);

// One completion through a role's binding and system prompt with an
// arbitrary user message. Used by the baseline generators.
CompletionResult complete_role_user(const AgentSet& agents, RoleName role,
                                    const std::string& user,
                                    std::optional<std::int64_t> request_seed = std::nullopt,
                                    TokenUsage* usage_out = nullptr);

// Contract text as it would actually be sent for this role: unchanged when
// it fits the binding's window, truncated to the leading portion under
// truncate_head, ContextTooLarge under the error policy.
std::string fit_contract_for_role(const AgentSet& agents, RoleName role,
                                  const std::string& contract,
                                  std::int64_t overhead_chars);

}  // namespace advqa
