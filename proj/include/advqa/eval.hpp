#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "advqa/backend.hpp"
#include "advqa/events.hpp"

namespace advqa {

// Malformed task file; the message names file and line.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Normalization { lowercase_strip, exact };

std::string normalize_answer(std::string_view text, Normalization normalization);

struct EvalTask {
    std::string task_id;
    std::string instruction;
    // Fixed few-shot demonstrations (input, gold answer).
    std::vector<std::pair<std::string, std::string>> examples;
    // Scored instances (input, gold answer); never overlaps the demos.
    std::vector<std::pair<std::string, std::string>> instances;
    Normalization answer_normalization = Normalization::lowercase_strip;
};

struct TaskScore {
    std::int64_t n_correct = 0;
    std::int64_t n_total = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    std::map<std::string, TaskScore> per_task;
    double overall_accuracy = 0.0;  // micro-average over instances
    TokenUsage token_usage;
    std::string model_id;
};

// Reads every <task>.tsv (header row with "text" and "answer" columns) plus
// its <task>.json metadata (instruction, few_shot_indices, normalization)
// from dir. Demo rows are excluded from the scored instances.
std::vector<EvalTask> load_tasks(const std::filesystem::path& dir);

struct EvalOptions {
    int concurrency = 1;
    // Fail the run on backend errors instead of counting them incorrect.
    bool strict = false;
};

// Few-shot exact-match evaluation at temperature 0: instruction as the
// system message, then demo input/answer lines, then the instance input.
EvalReport evaluate(const std::vector<EvalTask>& tasks, const BackendBinding& binding,
                    Backend& backend, const EvalOptions& options = {},
                    EventLog* log = nullptr);

struct ComparisonTable {
    std::string text;  // aligned human-readable rendering
    std::string csv;   // label,tokens,<subset...>,avg,rel_gain_pct
};

// Rows sorted by average accuracy descending; the relative-gain column is
// computed against the lowest-average row.
ComparisonTable compare_runs(const std::vector<EvalReport>& reports,
                             const std::vector<TokenUsage>& budgets);

}  // namespace advqa
