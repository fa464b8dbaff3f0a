#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advqa/agents.hpp"
#include "advqa/core.hpp"
#include "advqa/events.hpp"
#include "advqa/optimizer.hpp"

namespace advqa {

class ExportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SyntheticDataset {
    std::vector<QARecord> records;
    std::string context_id;
    std::string run_id;
    // Sum of the usages of the calls that produced the included answers.
    TokenUsage token_total;
};

// Jaccard similarity of 3-word shingle sets after lowercasing and whitespace
// normalization. Texts too short to shingle compare by exact match.
double shingle_similarity(std::string_view a, std::string_view b);

struct BuildOptions {
    double dedup_threshold = 0.9;
    // Also emit (question, strong answer) pairs for intermediate iterations,
    // reusing the loop's already-computed strong answers.
    bool include_intermediate = false;
    // Drop records whose final_score falls below this.
    std::optional<double> min_score;
    int concurrency = 1;
    // Build from an incomplete run (only finished trajectories contribute).
    bool allow_partial = false;
};

// Pairs each final question with a fresh strong-model answer (the loop never
// answered the iteration-T question), then deduplicates near-identical
// questions keeping the lowest question_index.
SyntheticDataset build_dataset(const RunState& state, const AgentSet& agents,
                               const BuildOptions& options = {},
                               EventLog* log = nullptr);

enum class ExportFormat { jsonl_qa, jsonl_chat };

ExportFormat export_format_from_string(std::string_view name);
std::string_view to_string(ExportFormat format);

// jsonl_qa lines: {"question","answer","context_id","final_score"};
// jsonl_chat lines: {"messages":[user question, assistant answer]}. UTF-8,
// one record per line, ordered by question_index.
void export_dataset(const SyntheticDataset& dataset, ExportFormat format,
                    const std::filesystem::path& path);

// Parses an exported file back; only the fields the format carries are
// recovered (question indices are assigned by line order).
SyntheticDataset import_dataset(ExportFormat format,
                                const std::filesystem::path& path);

}  // namespace advqa
