#include "advqa/prompts.hpp"

#include <fstream>
#include <sstream>

namespace advqa {

namespace {

constexpr const char* kExpertAnswerSystem =
    "You are an expert in interpreting contracts.\n"
    "The user will provide a contract and a question about it.\n"
    "Provide the most accurate, thorough answer based on the contract's text.\n"
    "Stay strictly within the contract's details and do not invent external laws.";

constexpr const char* kFeedbackSystem =
    "You are an expert in legal contract analysis.\n"
    "Given two responses (correct vs. potentially incorrect), identify "
    "contradictions, omissions, or errors in the second response.\n"
    "Provide a numeric incorrectness score (0.0 to 1.0) with detailed explanation.";

constexpr const char* kGuideSystem =
    "You are an expert at probing the limits of contract-interpretation "
    "assistants.\n"
    "Given a question and an evaluation of how a weaker response diverged from "
    "an expert response, write one concise natural-language editing instruction "
    "that revises the question to accentuate the weaknesses and failure modes "
    "the evaluation revealed.\n"
    "Reply with the editing instruction only.";

constexpr const char* kReviseSystem =
    "You are an expert editor of questions about legal contracts.\n"
    "Apply the given editing instruction to the question.\n"
    "Reply with the revised question only, without quotes or commentary.";

constexpr const char* kAnswerUser =
    "Contract:\n{contract}\n\nQuestion: {question}";

constexpr const char* kFeedbackUser =
    "Compare the following responses:\n"
    "<CONTRACT>: {contract}\n"
    "<QUESTION>: {question}\n"
    "<CORRECT_RESPONSE>: {response_strong}\n"
    "<POSSIBLY_INCORRECT_RESPONSE>: {response_weak}\n"
    "Rate the incorrectness of the second response (0 to 1) and explain errors, "
    "contradictions, or missing details.";

constexpr const char* kGuideUser =
    "Current question:\n{question}\n\n"
    "Evaluation of the weaker response:\n{feedback}\n\n"
    "Reply with one editing instruction that revises the question to further "
    "expose the weaknesses described above.";

constexpr const char* kGuideUserWithContract =
    "Contract:\n{contract}\n\n"
    "Current question:\n{question}\n\n"
    "Evaluation of the weaker response:\n{feedback}\n\n"
    "Reply with one editing instruction that revises the question to further "
    "expose the weaknesses described above.";

constexpr const char* kReviseUser =
    "Question:\n{question}\n\n"
    "Editing instruction:\n{instruction}\n\n"
    "Reply with the revised question only.";

bool read_override(const std::filesystem::path& path, std::string& target) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    target = buf.str();
    // Editors append a trailing newline; templates never want one.
    while (!target.empty() && (target.back() == '\n' || target.back() == '\r')) {
        target.pop_back();
    }
    return true;
}

}  // namespace

PromptSet PromptSet::defaults() {
    PromptSet prompts;
    prompts.strong_system = kExpertAnswerSystem;
    prompts.weak_system = kExpertAnswerSystem;
    prompts.feedback_system = kFeedbackSystem;
    prompts.guide_system = kGuideSystem;
    prompts.revise_system = kReviseSystem;
    prompts.answer_user = kAnswerUser;
    prompts.feedback_user = kFeedbackUser;
    prompts.guide_user = kGuideUser;
    prompts.guide_user_with_contract = kGuideUserWithContract;
    prompts.revise_user = kReviseUser;
    return prompts;
}

void PromptSet::apply_overrides(const std::filesystem::path& dir) {
    read_override(dir / "strong_system.txt", strong_system);
    read_override(dir / "weak_system.txt", weak_system);
    read_override(dir / "feedback_system.txt", feedback_system);
    read_override(dir / "guide_system.txt", guide_system);
    read_override(dir / "revise_system.txt", revise_system);
    read_override(dir / "answer_user.txt", answer_user);
    read_override(dir / "feedback_user.txt", feedback_user);
    read_override(dir / "guide_user.txt", guide_user);
    read_override(dir / "guide_user_with_contract.txt", guide_user_with_contract);
    read_override(dir / "revise_user.txt", revise_user);
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& slots) {
    std::string out(tmpl);
    for (const auto& [name, value] : slots) {
        const std::string marker = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(marker, pos)) != std::string::npos) {
            out.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    return out;
}

}  // namespace advqa
