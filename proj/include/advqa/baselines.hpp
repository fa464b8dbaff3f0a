#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advqa/agents.hpp"
#include "advqa/core.hpp"
#include "advqa/dataset.hpp"
#include "advqa/events.hpp"

namespace advqa {

// Fixed-size character chunking with overlap; chunks tile the document
// exactly.
struct ChunkPlan {
    std::int64_t chunk_size_chars = 4000;
    std::int64_t overlap_chars = 500;

    // (begin, end) offsets into the text. Throws std::invalid_argument when
    // overlap_chars is not in [0, chunk_size_chars).
    std::vector<std::pair<std::size_t, std::size_t>> chunks(std::string_view text) const;
};

// Paraphrase baseline: k restatements of every chunk from the strong agent.
// No weak-model feedback and no refinement; per-chunk failures skip that
// chunk with a logged warning.
SyntheticDataset generate_paraphrases(const DocumentContext& context,
                                      const AgentSet& agents, int k,
                                      const ChunkPlan& plan, std::int64_t seed,
                                      int concurrency = 1, EventLog* log = nullptr);

// Uninformed-QA baseline: one-shot prompt for n challenging questions, each
// answered by the strong agent. Under-generation returns what parsed.
SyntheticDataset generate_uninformed_qa(const DocumentContext& context,
                                        const AgentSet& agents, int n,
                                        std::int64_t seed, int concurrency = 1,
                                        EventLog* log = nullptr);

// Splits a model reply into list items; accepts "1.", "1)" and "-" bullets.
std::vector<std::string> parse_question_list(std::string_view reply);

}  // namespace advqa
