#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "advqa/agents.hpp"
#include "advqa/core.hpp"
#include "advqa/events.hpp"
#include "advqa/serialize.hpp"

namespace advqa {

enum class RunStatus { pending, running, complete, failed };

std::string_view to_string(RunStatus status);

struct RunState {
    RunConfig config;
    DocumentContext context;
    // trajectories[i] holds the steps of question i in iteration order.
    std::vector<std::vector<TrajectoryStep>> trajectories;
    RunStatus status = RunStatus::pending;
    std::int64_t rng_seed = 0;
    // Set when a backend failure aborted a question; other questions are
    // unaffected and the partial trajectory stays persisted.
    std::vector<std::uint8_t> aborted;
    TokenUsage loop_usage;

    // Deterministic identifier derived from the context and config.
    std::string run_id() const;

    bool trajectory_complete(int question_index) const;
    int completed_count() const;

    // Final question of trajectory i (the last revision, or the placeholder
    // when no step has run).
    Question final_question(int question_index) const;
};

struct OptimizeOutcome {
    std::vector<TrajectoryStep> steps;
    Question final_question;
    bool aborted = false;
    bool plateau_stopped = false;
    std::string error;
    TokenUsage usage;
};

using StepSink = std::function<void(const TrajectoryStep&)>;

// Cooperative stop used for graceful signal handling: running loops finish
// the step in flight, persist it, and return partial state.
void request_global_stop();
void clear_global_stop();
bool stop_requested();

// One question's refinement loop, from q_start.iteration to T-1: strong and
// weak answers (issued concurrently), feedback, guide, revise. A feedback
// parse failure records the step and carries the question text forward
// unchanged. Backend errors abort this question only; completed steps are
// kept and reported through the sink as they finish.
OptimizeOutcome optimize_question(const DocumentContext& context,
                                  const Question& q_start, const AgentSet& agents,
                                  const RunConfig& config,
                                  const StepSink& sink = {}, EventLog* log = nullptr,
                                  std::vector<double> prior_scores = {});

// Algorithm outer loop: N placeholder-initialized questions optimized under
// concurrency_limit, each step persisted to run_dir/trajectory.jsonl as it
// completes. On completion the log is rewritten in (question, iteration)
// order so deterministic backends give byte-identical artifacts.
RunState run(const RunConfig& config, const DocumentContext& context,
             const AgentSet& agents, const std::filesystem::path& run_dir,
             EventLog* log = nullptr);

// Reads manifest.json plus trajectory.jsonl back into a RunState. Throws
// CorruptState on parse failures, schema violations, digest mismatches, or
// broken step chains.
RunState load_run_state(const std::filesystem::path& run_dir);

// Continues an interrupted run: completed trajectories are untouched,
// incomplete ones pick up from their last persisted step. The response cache
// keeps already-answered calls free. Resuming a complete run is a no-op.
RunState resume(const std::filesystem::path& run_dir, Backend& backend,
                PromptSet prompts = PromptSet::defaults(), EventLog* log = nullptr);

// State as of iteration t: trajectory prefixes of length t.
RunState slice_run_state(const RunState& state, int t);

// Materializes run states for several iteration budgets from one run at
// max(t_values); smaller budgets are prefixes of the same trajectories.
std::map<int, RunState> sweep_iterations(const RunConfig& config,
                                         const DocumentContext& context,
                                         const AgentSet& agents,
                                         const std::vector<int>& t_values,
                                         const std::filesystem::path& run_dir,
                                         EventLog* log = nullptr);

}  // namespace advqa
