#include "advqa/agents.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace advqa {

namespace {

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", score);
    return buf;
}

struct CueSpan {
    std::size_t begin;
    std::size_t end;
};

// Case-insensitive word occurrences of score/incorrectness/rating, optional
// plural 's'.
std::vector<CueSpan> find_cues(std::string_view raw) {
    static constexpr std::array<std::string_view, 3> kCues = {"score", "incorrectness",
                                                              "rating"};
    std::string lower(raw);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    std::vector<CueSpan> spans;
    for (std::string_view cue : kCues) {
        std::size_t pos = 0;
        while ((pos = lower.find(cue, pos)) != std::string::npos) {
            const std::size_t begin = pos;
            std::size_t end = pos + cue.size();
            const bool left_ok = begin == 0 || !is_ascii_alpha(lower[begin - 1]);
            if (end < lower.size() && lower[end] == 's') ++end;
            const bool right_ok = end >= lower.size() || !is_ascii_alpha(lower[end]);
            if (left_ok && right_ok) spans.push_back({begin, end});
            pos = begin + 1;
        }
    }
    std::sort(spans.begin(), spans.end(),
              [](const CueSpan& a, const CueSpan& b) { return a.begin < b.begin; });
    return spans;
}

struct NumberSpan {
    std::size_t begin;
    std::size_t end;
    double value;
};

// Decimal literals with optional sign; skips digit runs glued to more dotted
// digits (version-like strings such as 3.2.1).
std::vector<NumberSpan> find_numbers(std::string_view raw) {
    std::vector<NumberSpan> spans;
    const std::size_t n = raw.size();
    std::size_t i = 0;
    while (i < n) {
        const bool starts_number =
            is_ascii_digit(raw[i]) ||
            (raw[i] == '.' && i + 1 < n && is_ascii_digit(raw[i + 1]));
        if (!starts_number) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        if (begin > 0 && (raw[begin - 1] == '-' || raw[begin - 1] == '+')) --begin;
        if (begin > 0 && (is_ascii_digit(raw[begin - 1]) || raw[begin - 1] == '.')) {
            // glued to a preceding literal; not a standalone number
            while (i < n && (is_ascii_digit(raw[i]) || raw[i] == '.')) ++i;
            continue;
        }
        std::size_t end = i;
        while (end < n && is_ascii_digit(raw[end])) ++end;
        if (end < n && raw[end] == '.' && end + 1 < n && is_ascii_digit(raw[end + 1])) {
            ++end;
            while (end < n && is_ascii_digit(raw[end])) ++end;
        }
        const bool version_like =
            end + 1 < n && raw[end] == '.' && is_ascii_digit(raw[end + 1]);
        if (!version_like) {
            const std::string literal(raw.substr(begin, end - begin));
            spans.push_back({begin, end, std::strtod(literal.c_str(), nullptr)});
        } else {
            while (end < n && (is_ascii_digit(raw[end]) || raw[end] == '.')) ++end;
        }
        i = end;
    }
    return spans;
}

bool is_adjacent(const CueSpan& cue, const NumberSpan& num) {
    if (num.begin >= cue.end) return num.begin - cue.end <= 20;
    if (cue.begin >= num.end) return cue.begin - num.end <= 20;
    return false;
}

bool is_fragment_separator(char c) {
    return c == ':' || c == '=' || c == ' ' || c == '\t' || c == '-' || c == '(' ||
           c == ')';
}

// Contract text as actually sent, honoring the binding's window under the
// truncation policy. overhead_chars counts every other character in the
// assembled messages.
std::string fit_contract(const AgentSet& agents, const AgentRole& role,
                         const std::string& contract,
                         std::int64_t overhead_chars) {
    const std::int64_t window = role.binding.context_window_tokens;
    if (window <= 0) return contract;
    const std::int64_t budget = window * 4 - overhead_chars;
    if (static_cast<std::int64_t>(contract.size()) <= budget) return contract;
    if (agents.truncation == TruncationPolicy::error || budget <= 0) {
        throw ContextTooLarge(
            std::string(to_string(role.name)) + ": context estimate " +
            std::to_string(estimate_tokens(contract) +
                           (overhead_chars + 3) / 4) +
            " tokens exceeds window of " + std::to_string(window));
    }
    // truncate_head keeps the leading portion of the document.
    return contract.substr(0, static_cast<std::size_t>(budget));
}

CompletionResult call_role(const AgentSet& agents, const AgentRole& role,
                           const std::string& user,
                           std::optional<std::int64_t> request_seed) {
    BackendBinding binding = role.binding;
    if (request_seed.has_value()) binding.request_seed = request_seed;
    const std::vector<ChatMessage> messages = {
        {MessageRole::system, role.system_prompt},
        {MessageRole::user, user},
    };
    return agents.backend->complete(binding, messages);
}

}  // namespace

std::string_view to_string(RoleName name) {
    switch (name) {
        case RoleName::strong: return "strong";
        case RoleName::weak: return "weak";
        case RoleName::feedback: return "feedback";
        case RoleName::guide: return "guide";
        case RoleName::revise: return "revise";
    }
    return "strong";
}

const AgentRole& AgentSet::role(RoleName name) const {
    switch (name) {
        case RoleName::strong: return strong;
        case RoleName::weak: return weak;
        case RoleName::feedback: return feedback;
        case RoleName::guide: return guide;
        case RoleName::revise: return revise;
    }
    return strong;
}

AgentSet make_agent_set(const RunConfig& config, Backend& backend, PromptSet prompts) {
    AgentSet agents;
    agents.strong = {RoleName::strong, prompts.strong_system, config.role_settings.strong};
    agents.weak = {RoleName::weak, prompts.weak_system, config.role_settings.weak};
    agents.feedback = {RoleName::feedback, prompts.feedback_system,
                       config.role_settings.feedback};
    agents.guide = {RoleName::guide, prompts.guide_system, config.role_settings.guide};
    agents.revise = {RoleName::revise, prompts.revise_system,
                     config.role_settings.revise};
    agents.backend = &backend;
    agents.prompts = std::move(prompts);
    agents.truncation = config.truncation_policy;
    agents.include_contract_in_guide = config.include_contract_in_guide;
    return agents;
}

ScoreParse parse_score(std::string_view raw) {
    const auto cues = find_cues(raw);
    const auto numbers = find_numbers(raw);

    const NumberSpan* first_cued = nullptr;
    const CueSpan* first_cued_cue = nullptr;
    const NumberSpan* first_in_range = nullptr;
    for (const NumberSpan& num : numbers) {
        if (num.value < 0.0 || num.value > 1.0) continue;
        if (first_in_range == nullptr) first_in_range = &num;
        if (first_cued == nullptr) {
            for (const CueSpan& cue : cues) {
                if (is_adjacent(cue, num)) {
                    first_cued = &num;
                    first_cued_cue = &cue;
                    break;
                }
            }
        }
        if (first_cued != nullptr) break;
    }

    ScoreParse result;
    const NumberSpan* chosen = first_cued != nullptr ? first_cued : first_in_range;
    if (chosen == nullptr) {
        result.status = ParseStatus::failed;
        return result;
    }
    result.score = chosen->value;
    result.status = first_cued != nullptr ? ParseStatus::parsed : ParseStatus::recovered;
    result.fragment_begin = chosen->begin;
    result.fragment_end = chosen->end;
    if (first_cued_cue != nullptr && first_cued_cue->end <= chosen->begin) {
        bool separators_only = true;
        for (std::size_t i = first_cued_cue->end; i < chosen->begin; ++i) {
            if (!is_fragment_separator(raw[i])) {
                separators_only = false;
                break;
            }
        }
        if (separators_only) result.fragment_begin = first_cued_cue->begin;
    }
    return result;
}

Answer answer_question(const AgentSet& agents, AnswerRole which,
                       const DocumentContext& context, const Question& question,
                       std::optional<std::int64_t> request_seed) {
    const AgentRole& role =
        which == AnswerRole::strong ? agents.strong : agents.weak;

    const std::string shell = render_template(
        agents.prompts.answer_user, {{"contract", ""}, {"question", question.text}});
    const std::string contract = fit_contract(
        agents, role, context.text,
        static_cast<std::int64_t>(shell.size() + role.system_prompt.size()));
    const std::string user = render_template(
        agents.prompts.answer_user,
        {{"contract", contract}, {"question", question.text}});

    const CompletionResult completion = call_role(agents, role, user, request_seed);

    Answer result;
    result.role = which;
    result.text = completion.text;
    result.usage = completion.usage;
    result.backend_id = role.binding.backend_id;
    return result;
}

FeedbackResult evaluate_feedback(const AgentSet& agents,
                                 const DocumentContext& context,
                                 const Question& question, const Answer& strong,
                                 const Answer& weak,
                                 std::optional<std::int64_t> request_seed,
                                 TokenUsage* usage_out) {
    const AgentRole& role = agents.feedback;
    const std::map<std::string, std::string> base_slots = {
        {"contract", ""},
        {"question", question.text},
        {"response_strong", strong.text},
        {"response_weak", weak.text},
    };
    const std::string shell = render_template(agents.prompts.feedback_user, base_slots);
    const std::string contract = fit_contract(
        agents, role, context.text,
        static_cast<std::int64_t>(shell.size() + role.system_prompt.size()));

    auto slots = base_slots;
    slots["contract"] = contract;
    const std::string user = render_template(agents.prompts.feedback_user, slots);

    CompletionResult completion = call_role(agents, role, user, request_seed);
    if (usage_out != nullptr) *usage_out += completion.usage;
    ScoreParse parse = parse_score(completion.text);
    if (parse.status == ParseStatus::failed) {
        const std::string retry_user =
            user +
            "\n\nReply with 'Score: <number between 0 and 1>' on the first line.";
        completion = call_role(agents, role, retry_user, request_seed);
        if (usage_out != nullptr) *usage_out += completion.usage;
        parse = parse_score(completion.text);
    }

    FeedbackResult result;
    result.raw_text = completion.text;
    result.parse_status = parse.status;
    if (parse.status == ParseStatus::failed) {
        result.score = 0.0;
        result.critique.clear();
        return result;
    }
    result.score = parse.score;

    std::string critique = completion.text;
    critique.erase(parse.fragment_begin, parse.fragment_end - parse.fragment_begin);
    std::size_t b = 0;
    while (b < critique.size() &&
           (critique[b] == ' ' || critique[b] == '\t' || critique[b] == '\n' ||
            critique[b] == ':' || critique[b] == '=' || critique[b] == '-' ||
            critique[b] == '.' || critique[b] == ',' || critique[b] == ';')) {
        ++b;
    }
    critique = trim(critique.substr(b));
    result.critique = critique.empty() ? completion.text : critique;
    return result;
}

GradientInstruction guide_revision(const AgentSet& agents,
                                   const DocumentContext& context,
                                   const Question& question,
                                   const FeedbackResult& feedback,
                                   std::optional<std::int64_t> request_seed,
                                   TokenUsage* usage_out) {
    if (feedback.parse_status == ParseStatus::failed) {
        throw std::logic_error("guide_revision requires parseable feedback");
    }
    const AgentRole& role = agents.guide;
    const std::string feedback_slot =
        "Score: " + format_score(feedback.score) + "\nCritique: " + feedback.critique;

    std::string user;
    if (agents.include_contract_in_guide) {
        const std::map<std::string, std::string> base_slots = {
            {"contract", ""}, {"question", question.text}, {"feedback", feedback_slot}};
        const std::string shell =
            render_template(agents.prompts.guide_user_with_contract, base_slots);
        const std::string contract = fit_contract(
            agents, role, context.text,
            static_cast<std::int64_t>(shell.size() + role.system_prompt.size()));
        auto slots = base_slots;
        slots["contract"] = contract;
        user = render_template(agents.prompts.guide_user_with_contract, slots);
    } else {
        user = render_template(
            agents.prompts.guide_user,
            {{"question", question.text}, {"feedback", feedback_slot}});
    }

    const CompletionResult completion = call_role(agents, role, user, request_seed);
    if (usage_out != nullptr) *usage_out += completion.usage;
    GradientInstruction instruction;
    instruction.text = trim(completion.text);
    instruction.source_feedback_score = feedback.score;
    return instruction;
}

namespace {

// Revisions come back wrapped in quotes or code fences often enough that the
// raw reply is rarely the question itself.
std::string strip_revision_markup(std::string text) {
    text = trim(text);
    if (text.rfind("```", 0) == 0) {
        const std::size_t first_newline = text.find('\n');
        const std::size_t closing = text.rfind("```");
        if (first_newline != std::string::npos && closing > first_newline) {
            text = trim(text.substr(first_newline + 1, closing - first_newline - 1));
        }
    }
    const auto strip_pair = [&](char open, char close) {
        if (text.size() >= 2 && text.front() == open && text.back() == close) {
            text = trim(text.substr(1, text.size() - 2));
        }
    };
    strip_pair('"', '"');
    strip_pair('\'', '\'');
    strip_pair('`', '`');
    return text;
}

}  // namespace

CompletionResult complete_role_user(const AgentSet& agents, RoleName role,
                                    const std::string& user,
                                    std::optional<std::int64_t> request_seed,
                                    TokenUsage* usage_out) {
    const CompletionResult result =
        call_role(agents, agents.role(role), user, request_seed);
    if (usage_out != nullptr) *usage_out += result.usage;
    return result;
}

std::string fit_contract_for_role(const AgentSet& agents, RoleName role,
                                  const std::string& contract,
                                  std::int64_t overhead_chars) {
    return fit_contract(agents, agents.role(role), contract, overhead_chars);
}

ReviseResult revise_question(const AgentSet& agents, const Question& question,
                             const GradientInstruction& gradient,
                             std::optional<std::int64_t> request_seed,
                             TokenUsage* usage_out) {
    if (gradient.text.empty()) {
        throw std::logic_error("revise_question requires a non-empty instruction");
    }
    const std::string user = render_template(
        agents.prompts.revise_user,
        {{"question", question.text}, {"instruction", gradient.text}});

    const CompletionResult completion =
        call_role(agents, agents.revise, user, request_seed);
    if (usage_out != nullptr) *usage_out += completion.usage;
    const std::string revised = strip_revision_markup(completion.text);

    ReviseResult result;
    result.question.question_index = question.question_index;
    result.question.iteration = question.iteration + 1;
    if (revised.empty()) {
        result.question.text = question.text;
        result.empty_revision = true;
    } else {
        result.question.text = revised;
    }
    return result;
}

}  // namespace advqa
