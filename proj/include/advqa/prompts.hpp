#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace advqa {

// System prompts and user-message templates for the five roles. Templates
// carry named slot markers ({contract}, {question}, {response_strong},
// {response_weak}, {feedback}, {instruction}); every default can be replaced
// by a same-named .txt file in an override directory.
struct PromptSet {
    std::string strong_system;
    std::string weak_system;
    std::string feedback_system;
    std::string guide_system;
    std::string revise_system;

    std::string answer_user;
    std::string feedback_user;
    std::string guide_user;
    std::string guide_user_with_contract;
    std::string revise_user;

    static PromptSet defaults();

    // Loads overrides from dir: strong_system.txt, weak_system.txt,
    // feedback_system.txt, guide_system.txt, revise_system.txt,
    // answer_user.txt, feedback_user.txt, guide_user.txt,
    // guide_user_with_contract.txt, revise_user.txt. Missing files keep
    // their defaults.
    void apply_overrides(const std::filesystem::path& dir);
};

// Replaces every {name} marker that has an entry in slots; unknown markers
// are left untouched.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& slots);

}  // namespace advqa
