#include "advqa/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>

#include "advqa/parallel.hpp"
#include "advqa/sha256.hpp"

namespace advqa {

namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;
constexpr double kPlateauBand = 0.05;

std::atomic<bool> g_stop{false};

// Serialized appender; one flushed line per completed step keeps the log
// crash-safe.
class TrajectoryWriter {
public:
    TrajectoryWriter(const fs::path& path, bool append)
        : out_(path, append ? std::ios::app : std::ios::trunc) {
        if (!out_) {
            throw std::runtime_error("cannot open trajectory log " + path.string());
        }
    }

    void append(const TrajectoryStep& step) {
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << to_json(step).dump() << '\n';
        out_.flush();
    }

private:
    std::mutex mutex_;
    std::ofstream out_;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptState("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Plateau rule: the loss has stayed within +-0.05 across the two most recent
// consecutive score pairs.
bool plateau_reached(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    return n >= 3 && std::fabs(scores[n - 1] - scores[n - 2]) <= kPlateauBand &&
           std::fabs(scores[n - 2] - scores[n - 3]) <= kPlateauBand;
}

std::vector<double> parsed_scores(const std::vector<TrajectoryStep>& steps) {
    std::vector<double> scores;
    for (const auto& step : steps) {
        if (step.feedback.parse_status != ParseStatus::failed) {
            scores.push_back(step.feedback.score);
        }
    }
    return scores;
}

Json manifest_json(const RunState& state) {
    const Json config_json = to_json(state.config);
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["run_id"] = state.run_id();
    j["status"] = std::string(to_string(state.status));
    j["config"] = config_json;
    j["config_digest"] = sha256_hex(config_json.dump());
    j["context"] = Json{{"id", state.context.id},
                        {"source_path", state.context.source_path},
                        {"token_estimate", state.context.token_estimate},
                        {"sha256", sha256_hex(state.context.text)},
                        {"text", state.context.text}};
    j["totals"] = to_json(state.loop_usage);
    j["n_complete"] = state.completed_count();
    return j;
}

void write_manifest(const fs::path& run_dir, const RunState& state) {
    const fs::path tmp = run_dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << manifest_json(state).dump(2) << '\n';
    }
    fs::rename(tmp, run_dir / "manifest.json");
}

// Canonical on-disk order once a run settles: lines sorted by
// (question_index, iteration). The mid-run file is append-ordered.
void rewrite_sorted_trajectory(const fs::path& run_dir, const RunState& state) {
    const fs::path tmp = run_dir / "trajectory.jsonl.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        for (const auto& trajectory : state.trajectories) {
            for (const auto& step : trajectory) {
                out << to_json(step).dump() << '\n';
            }
        }
    }
    fs::rename(tmp, run_dir / "trajectory.jsonl");
}

void finalize_run(const fs::path& run_dir, RunState& state) {
    state.status = state.completed_count() == state.config.n_questions
                       ? RunStatus::complete
                       : RunStatus::failed;
    rewrite_sorted_trajectory(run_dir, state);
    write_manifest(run_dir, state);
}

}  // namespace

std::string_view to_string(RunStatus status) {
    switch (status) {
        case RunStatus::pending: return "pending";
        case RunStatus::running: return "running";
        case RunStatus::complete: return "complete";
        case RunStatus::failed: return "failed";
    }
    return "pending";
}

std::string RunState::run_id() const {
    const std::string material = context.id + ":" + std::to_string(rng_seed) + ":" +
                                 std::to_string(config.n_questions) + "x" +
                                 std::to_string(config.n_iterations);
    return sha256_hex(material).substr(0, 12);
}

bool RunState::trajectory_complete(int question_index) const {
    const auto& steps = trajectories[static_cast<std::size_t>(question_index)];
    if (static_cast<int>(steps.size()) >= config.n_iterations) return true;
    if (config.plateau_stop && !steps.empty() &&
        plateau_reached(parsed_scores(steps))) {
        return true;
    }
    return false;
}

int RunState::completed_count() const {
    int done = 0;
    for (int i = 0; i < static_cast<int>(trajectories.size()); ++i) {
        if (trajectory_complete(i)) ++done;
    }
    return done;
}

Question RunState::final_question(int question_index) const {
    const auto& steps = trajectories[static_cast<std::size_t>(question_index)];
    return steps.empty() ? placeholder_question(question_index)
                         : steps.back().question_after;
}

void request_global_stop() { g_stop.store(true); }
void clear_global_stop() { g_stop.store(false); }
bool stop_requested() { return g_stop.load(); }

OptimizeOutcome optimize_question(const DocumentContext& context,
                                  const Question& q_start, const AgentSet& agents,
                                  const RunConfig& config, const StepSink& sink,
                                  EventLog* log, std::vector<double> prior_scores) {
    OptimizeOutcome out;
    out.final_question = q_start;

    Question current = q_start;
    std::vector<double>& scores = prior_scores;
    const int question_index = q_start.question_index;
    const int total_iterations = config.n_iterations;

    try {
        for (int t = current.iteration; t < total_iterations; ++t) {
            if (stop_requested()) {
                out.aborted = true;
                out.error = "interrupted";
                break;
            }
            const std::int64_t seed =
                derive_request_seed(config.seed, question_index, t);

            auto strong_future = std::async(std::launch::async, [&] {
                return answer_question(agents, AnswerRole::strong, context, current,
                                       seed);
            });
            const Answer weak =
                answer_question(agents, AnswerRole::weak, context, current, seed);
            const Answer strong = strong_future.get();

            TokenUsage aux_usage;
            const FeedbackResult feedback = evaluate_feedback(
                agents, context, current, strong, weak, seed, &aux_usage);

            TrajectoryStep step;
            step.question_index = question_index;
            step.iteration = t;
            step.question_before = current;
            step.answer_strong = strong;
            step.answer_weak = weak;
            step.feedback = feedback;
            const std::int64_t base = static_cast<std::int64_t>(t) * 5;
            step.timestamps.strong = base + 1;
            step.timestamps.weak = base + 2;
            step.timestamps.feedback = base + 3;

            if (feedback.parse_status == ParseStatus::failed) {
                // No loss signal; never fabricate one. The question text is
                // carried forward so the trajectory keeps its length.
                step.gradient = GradientInstruction{"", 0.0};
                step.question_after = Question{question_index, t + 1, current.text};
                if (log != nullptr) {
                    log->warn("feedback_parse_failed",
                              "question " + std::to_string(question_index) +
                                  " iteration " + std::to_string(t) +
                                  ": revision skipped");
                }
            } else {
                const GradientInstruction gradient = guide_revision(
                    agents, context, current, feedback, seed, &aux_usage);
                step.timestamps.guide = base + 4;
                const ReviseResult revised =
                    revise_question(agents, current, gradient, seed, &aux_usage);
                step.timestamps.revise = base + 5;
                if (revised.empty_revision && log != nullptr) {
                    log->warn("empty_revision",
                              "question " + std::to_string(question_index) +
                                  " iteration " + std::to_string(t) +
                                  ": model returned no text, wording kept");
                }
                step.gradient = gradient;
                step.question_after = revised.question;
                scores.push_back(feedback.score);
            }

            out.usage += strong.usage;
            out.usage += weak.usage;
            out.usage += aux_usage;

            current = step.question_after;
            out.final_question = current;
            out.steps.push_back(step);
            if (sink) sink(out.steps.back());

            if (config.plateau_stop && plateau_reached(scores)) {
                out.plateau_stopped = true;
                if (log != nullptr) {
                    log->info("plateau_stop",
                              "question " + std::to_string(question_index) +
                                  " stopped after iteration " + std::to_string(t));
                }
                break;
            }
        }
    } catch (const ContextTooLarge& e) {
        out.aborted = true;
        out.error = e.what();
        if (log != nullptr) {
            log->error("question_aborted", "question " +
                                               std::to_string(question_index) + ": " +
                                               e.what());
        }
    } catch (const BackendError& e) {
        out.aborted = true;
        out.error = e.what();
        if (log != nullptr) {
            log->error("question_aborted", "question " +
                                               std::to_string(question_index) + ": " +
                                               e.what());
        }
    }
    return out;
}

RunState run(const RunConfig& config, const DocumentContext& context,
             const AgentSet& agents, const fs::path& run_dir, EventLog* log) {
    const auto problems = validate_config(config);
    if (!problems.empty()) {
        throw std::invalid_argument("invalid run config: " + problems.front());
    }
    if (context.text.empty()) {
        throw std::invalid_argument("document context text is empty");
    }

    fs::create_directories(run_dir);

    RunState state;
    state.config = config;
    state.context = context;
    state.rng_seed = config.seed;
    state.status = RunStatus::running;
    state.trajectories.resize(static_cast<std::size_t>(config.n_questions));
    state.aborted.assign(static_cast<std::size_t>(config.n_questions), 0);
    write_manifest(run_dir, state);

    TrajectoryWriter writer(run_dir / "trajectory.jsonl", /*append=*/false);
    std::mutex state_mutex;

    parallel_for(config.n_questions, config.concurrency_limit, [&](int i) {
        OptimizeOutcome outcome = optimize_question(
            context, placeholder_question(i), agents, config,
            [&writer](const TrajectoryStep& step) { writer.append(step); }, log);
        std::lock_guard<std::mutex> lock(state_mutex);
        state.trajectories[static_cast<std::size_t>(i)] = std::move(outcome.steps);
        state.aborted[static_cast<std::size_t>(i)] = outcome.aborted ? 1 : 0;
        state.loop_usage += outcome.usage;
    });

    finalize_run(run_dir, state);
    return state;
}

RunState load_run_state(const fs::path& run_dir) {
    const fs::path manifest_path = run_dir / "manifest.json";
    auto manifest = Json::parse(read_file(manifest_path), nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) {
        throw CorruptState("manifest.json is not valid JSON");
    }
    if (!manifest.contains("schema_version") ||
        manifest["schema_version"].get<int>() != kSchemaVersion) {
        throw CorruptState("unsupported manifest schema version");
    }

    RunState state;
    if (!manifest.contains("config")) throw CorruptState("manifest missing config");
    state.config = run_config_from_json(manifest["config"]);
    const std::string stored_digest = manifest.value("config_digest", std::string());
    if (stored_digest != sha256_hex(manifest["config"].dump())) {
        throw CorruptState("config digest mismatch in manifest");
    }
    state.rng_seed = state.config.seed;

    const auto& ctx = manifest["context"];
    state.context.id = ctx.value("id", std::string());
    state.context.source_path = ctx.value("source_path", std::string());
    state.context.token_estimate = ctx.value("token_estimate", std::int64_t{0});
    state.context.text = ctx.value("text", std::string());
    if (state.context.text.empty()) throw CorruptState("manifest context text empty");
    if (ctx.value("sha256", std::string()) != sha256_hex(state.context.text)) {
        throw CorruptState("context hash mismatch in manifest");
    }

    const std::string status = manifest.value("status", std::string("pending"));
    if (status == "running") {
        state.status = RunStatus::running;
    } else if (status == "complete") {
        state.status = RunStatus::complete;
    } else if (status == "failed") {
        state.status = RunStatus::failed;
    } else {
        state.status = RunStatus::pending;
    }

    state.trajectories.assign(static_cast<std::size_t>(state.config.n_questions), {});
    state.aborted.assign(static_cast<std::size_t>(state.config.n_questions), 0);

    const fs::path log_path = run_dir / "trajectory.jsonl";
    if (fs::exists(log_path)) {
        std::istringstream lines(read_file(log_path));
        std::string line;
        int line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto doc = Json::parse(line, nullptr, false);
            if (doc.is_discarded()) {
                throw CorruptState("trajectory.jsonl line " + std::to_string(line_no) +
                                   " is truncated or corrupt");
            }
            TrajectoryStep step = step_from_json(doc);
            if (step.question_index < 0 ||
                step.question_index >= state.config.n_questions) {
                throw CorruptState("trajectory.jsonl line " + std::to_string(line_no) +
                                   ": question_index out of range");
            }
            state.trajectories[static_cast<std::size_t>(step.question_index)]
                .push_back(std::move(step));
        }
    }

    for (auto& trajectory : state.trajectories) {
        std::sort(trajectory.begin(), trajectory.end(),
                  [](const TrajectoryStep& a, const TrajectoryStep& b) {
                      return a.iteration < b.iteration;
                  });
        for (std::size_t t = 0; t < trajectory.size(); ++t) {
            if (trajectory[t].iteration != static_cast<int>(t)) {
                throw CorruptState("trajectory has a gap or duplicate at iteration " +
                                   std::to_string(trajectory[t].iteration));
            }
            if (t > 0 && trajectory[t].question_before.text !=
                             trajectory[t - 1].question_after.text) {
                throw CorruptState("trajectory chain broken at iteration " +
                                   std::to_string(t));
            }
        }
    }
    return state;
}

RunState resume(const fs::path& run_dir, Backend& backend, PromptSet prompts,
                EventLog* log) {
    RunState state = load_run_state(run_dir);
    if (state.completed_count() == state.config.n_questions) {
        return state;  // nothing to do; leave the files untouched
    }

    const AgentSet agents = make_agent_set(state.config, backend, std::move(prompts));

    std::vector<int> pending;
    for (int i = 0; i < state.config.n_questions; ++i) {
        if (!state.trajectory_complete(i)) pending.push_back(i);
    }

    TrajectoryWriter writer(run_dir / "trajectory.jsonl", /*append=*/true);
    std::mutex state_mutex;

    parallel_for(static_cast<int>(pending.size()), state.config.concurrency_limit,
                 [&](int k) {
                     const int i = pending[static_cast<std::size_t>(k)];
                     const auto& done =
                         state.trajectories[static_cast<std::size_t>(i)];
                     const Question q_start = done.empty()
                                                  ? placeholder_question(i)
                                                  : done.back().question_after;
                     OptimizeOutcome outcome = optimize_question(
                         state.context, q_start, agents, state.config,
                         [&writer](const TrajectoryStep& step) { writer.append(step); },
                         log, parsed_scores(done));
                     std::lock_guard<std::mutex> lock(state_mutex);
                     auto& trajectory =
                         state.trajectories[static_cast<std::size_t>(i)];
                     for (auto& step : outcome.steps) {
                         trajectory.push_back(std::move(step));
                     }
                     state.aborted[static_cast<std::size_t>(i)] =
                         outcome.aborted ? 1 : 0;
                     state.loop_usage += outcome.usage;
                 });

    finalize_run(run_dir, state);
    return state;
}

RunState slice_run_state(const RunState& state, int t) {
    RunState out = state;
    out.config.n_iterations = t;
    for (auto& trajectory : out.trajectories) {
        if (static_cast<int>(trajectory.size()) > t) {
            trajectory.resize(static_cast<std::size_t>(t));
        }
    }
    out.status = out.completed_count() == out.config.n_questions ? RunStatus::complete
                                                                 : RunStatus::failed;
    return out;
}

std::map<int, RunState> sweep_iterations(const RunConfig& config,
                                         const DocumentContext& context,
                                         const AgentSet& agents,
                                         const std::vector<int>& t_values,
                                         const fs::path& run_dir, EventLog* log) {
    if (t_values.empty()) {
        throw std::invalid_argument("sweep_iterations needs at least one t value");
    }
    for (int t : t_values) {
        if (t < 1) throw std::invalid_argument("sweep t values must be >= 1");
    }

    RunConfig full_config = config;
    full_config.n_iterations = *std::max_element(t_values.begin(), t_values.end());
    const RunState full = run(full_config, context, agents, run_dir, log);

    std::map<int, RunState> out;
    for (int t : t_values) out.emplace(t, slice_run_state(full, t));
    return out;
}

}  // namespace advqa
