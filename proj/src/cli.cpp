#include "advqa/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <set>
#include <fstream>
#include <iostream>
#include <sstream>

#include "advqa/baselines.hpp"
#include "advqa/cache.hpp"
#include "advqa/dataset.hpp"
#include "advqa/eval.hpp"
#include "advqa/events.hpp"
#include "advqa/http_backend.hpp"
#include "advqa/mock_backend.hpp"
#include "advqa/optimizer.hpp"
#include "advqa/serialize.hpp"

namespace advqa {

namespace fs = std::filesystem;

namespace {

std::string read_file_or_throw(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(std::string(what) + " not readable: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Per-role sampling defaults: answers and scoring stay greedy, editing gets
// diversity. All overridable in the config file.
double default_temperature(const std::string& role) {
    return (role == "guide" || role == "revise") ? 0.7 : 0.0;
}

BackendBinding parse_role_binding(const Json& roles, const std::string& role,
                                  const fs::path& config_path) {
    if (!roles.contains(role)) {
        throw ConfigError(config_path.string() + ": roles." + role + " is missing");
    }
    try {
        BackendBinding binding = binding_from_json(roles.at(role));
        if (!roles.at(role).contains("temperature")) {
            binding.temperature = default_temperature(role);
        }
        return binding;
    } catch (const CorruptState& e) {
        throw ConfigError(config_path.string() + ": roles." + role + ": " + e.what());
    }
}

// Routes each call to the scripted mock (empty endpoint_url) or the HTTP
// client.
class DispatchBackend : public Backend {
public:
    DispatchBackend(std::unique_ptr<MockBackend> mock, std::unique_ptr<HttpBackend> http)
        : mock_(std::move(mock)), http_(std::move(http)) {}

    CompletionResult complete(const BackendBinding& binding,
                              const std::vector<ChatMessage>& messages) override {
        if (binding.endpoint_url.empty()) {
            if (!mock_) {
                throw ScriptMiss("binding '" + binding.backend_id +
                                 "' is a mock but no mock_script is configured");
            }
            return mock_->complete(binding, messages);
        }
        return http_->complete(binding, messages);
    }

private:
    std::unique_ptr<MockBackend> mock_;
    std::unique_ptr<HttpBackend> http_;
};

struct Pipeline {
    std::unique_ptr<DispatchBackend> dispatch;
    std::unique_ptr<CachedBackend> cached;
    PromptSet prompts;

    Backend& backend() { return *cached; }
};

Pipeline make_pipeline(const CliConfig& config) {
    Pipeline p;
    std::unique_ptr<MockBackend> mock;
    if (!config.mock_script.empty()) {
        mock = std::make_unique<MockBackend>(load_mock_rules_file(config.mock_script));
    }
    RetryPolicy retry;
    retry.max_attempts = config.retry_max_attempts;
    retry.base_delay_ms = config.retry_base_delay_ms;
    auto http = std::make_unique<HttpBackend>(retry);
    http->set_max_inflight(config.run.concurrency_limit);
    p.dispatch = std::make_unique<DispatchBackend>(std::move(mock), std::move(http));
    p.cached = std::make_unique<CachedBackend>(*p.dispatch, config.cache_dir);

    p.prompts = PromptSet::defaults();
    if (!config.prompt_dir.empty()) p.prompts.apply_overrides(config.prompt_dir);
    return p;
}

void apply_common_overrides(CliConfig& config, const CommonOverrides& common) {
    if (common.seed.has_value()) config.run.seed = *common.seed;
    if (common.concurrency.has_value()) config.run.concurrency_limit = *common.concurrency;
}

int exit_code_for(const RunState& state) {
    const int done = state.completed_count();
    if (done == state.config.n_questions) return kExitOk;
    return done > 0 ? kExitPartial : kExitFailure;
}

void export_run_dataset(const CliConfig& config, const RunState& state,
                        Pipeline& pipeline, EventLog& log) {
    BuildOptions options;
    options.dedup_threshold = config.run.dedup_threshold;
    options.include_intermediate = config.include_intermediate;
    options.min_score = config.min_score;
    options.concurrency = config.run.concurrency_limit;
    options.allow_partial = true;

    const AgentSet agents = make_agent_set(config.run, pipeline.backend(), pipeline.prompts);
    const SyntheticDataset dataset = build_dataset(state, agents, options, &log);
    if (dataset.records.empty()) {
        log.warn("dataset_empty", "no records to export");
        return;
    }
    export_dataset(dataset, ExportFormat::jsonl_qa, config.run_dir / "dataset.jsonl");
    std::cerr << "dataset: " << dataset.records.size() << " records, ~"
              << dataset.token_total.total() << " tokens -> "
              << (config.run_dir / "dataset.jsonl").string() << std::endl;
}

volatile std::sig_atomic_t g_signal_seen = 0;

void handle_signal(int) {
    g_signal_seen = 1;
    request_global_stop();
}

struct SignalGuard {
    SignalGuard() {
        clear_global_stop();
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
    }
    ~SignalGuard() {
        std::signal(SIGINT, SIG_DFL);
        std::signal(SIGTERM, SIG_DFL);
    }
};

}  // namespace

CliConfig load_cli_config(const fs::path& path) {
    auto doc = Json::parse(read_file_or_throw(path, "config file"), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError(path.string() + ": not valid JSON");
    }

    static const std::set<std::string> known = {
        "contract_path", "run_dir", "cache_dir", "prompt_dir", "mock_script",
        "n_questions", "n_iterations", "seed", "concurrency_limit",
        "dedup_threshold", "truncation_policy", "plateau_stop",
        "include_contract_in_guide", "include_intermediate", "min_score",
        "retry_max_attempts", "retry_base_delay_ms", "roles", "eval_binding"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (known.find(it.key()) == known.end()) {
            throw ConfigError(path.string() + ": unknown key '" + it.key() + "'");
        }
    }

    CliConfig config;
    try {
        if (doc.contains("contract_path")) {
            config.contract_path = doc["contract_path"].get<std::string>();
        }
        if (!doc.contains("run_dir")) {
            throw ConfigError(path.string() + ": 'run_dir' is required");
        }
        config.run_dir = doc["run_dir"].get<std::string>();
        config.cache_dir = doc.contains("cache_dir")
                               ? fs::path(doc["cache_dir"].get<std::string>())
                               : config.run_dir / "cache";
        if (doc.contains("prompt_dir")) {
            config.prompt_dir = doc["prompt_dir"].get<std::string>();
        }
        if (doc.contains("mock_script")) {
            config.mock_script = doc["mock_script"].get<std::string>();
        }

        config.run.n_questions = doc.value("n_questions", 1);
        config.run.n_iterations = doc.value("n_iterations", 1);
        config.run.seed = doc.value("seed", std::int64_t{0});
        config.run.concurrency_limit = doc.value("concurrency_limit", 1);
        config.run.dedup_threshold = doc.value("dedup_threshold", 0.9);
        config.run.plateau_stop = doc.value("plateau_stop", false);
        config.run.include_contract_in_guide =
            doc.value("include_contract_in_guide", false);
        const std::string policy =
            doc.value("truncation_policy", std::string("error"));
        if (policy == "error") {
            config.run.truncation_policy = TruncationPolicy::error;
        } else if (policy == "truncate_head") {
            config.run.truncation_policy = TruncationPolicy::truncate_head;
        } else {
            throw ConfigError(path.string() + ": unknown truncation_policy '" +
                              policy + "'");
        }

        config.include_intermediate = doc.value("include_intermediate", false);
        if (doc.contains("min_score")) {
            config.min_score = doc["min_score"].get<double>();
        }
        config.retry_max_attempts = doc.value("retry_max_attempts", 3);
        config.retry_base_delay_ms = doc.value("retry_base_delay_ms", 500);

        if (!doc.contains("roles") || !doc["roles"].is_object()) {
            throw ConfigError(path.string() + ": 'roles' object is required");
        }
        const Json& roles = doc["roles"];
        for (auto it = roles.begin(); it != roles.end(); ++it) {
            if (it.key() != "strong" && it.key() != "weak" && it.key() != "feedback" &&
                it.key() != "guide" && it.key() != "revise") {
                throw ConfigError(path.string() + ": unknown role '" + it.key() + "'");
            }
        }
        config.run.role_settings.strong = parse_role_binding(roles, "strong", path);
        config.run.role_settings.weak = parse_role_binding(roles, "weak", path);
        config.run.role_settings.feedback = parse_role_binding(roles, "feedback", path);
        config.run.role_settings.guide = parse_role_binding(roles, "guide", path);
        config.run.role_settings.revise = parse_role_binding(roles, "revise", path);

        if (doc.contains("eval_binding")) {
            try {
                config.eval_binding = binding_from_json(doc["eval_binding"]);
            } catch (const CorruptState& e) {
                throw ConfigError(path.string() + ": eval_binding: " + e.what());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config;
}

void validate_cli_config(const CliConfig& config) {
    const auto problems = validate_config(config.run);
    if (!problems.empty()) {
        throw ConfigError("invalid config: " + problems.front());
    }
    if (config.retry_max_attempts < 1) {
        throw ConfigError("retry_max_attempts must be >= 1");
    }

    const std::pair<const char*, const BackendBinding*> bindings[] = {
        {"strong", &config.run.role_settings.strong},
        {"weak", &config.run.role_settings.weak},
        {"feedback", &config.run.role_settings.feedback},
        {"guide", &config.run.role_settings.guide},
        {"revise", &config.run.role_settings.revise},
    };
    bool any_mock = false;
    for (const auto& [name, binding] : bindings) {
        if (binding->endpoint_url.empty()) {
            any_mock = true;
            continue;
        }
        if (!binding->api_key_env.empty()) {
            const char* value = std::getenv(binding->api_key_env.c_str());
            if (value == nullptr || *value == '\0') {
                throw ConfigError("environment variable " + binding->api_key_env +
                                  " is not set (required by roles." +
                                  std::string(name) + ")");
            }
        }
    }
    if (any_mock) {
        if (config.mock_script.empty()) {
            throw ConfigError(
                "a role uses the mock backend but 'mock_script' is not configured");
        }
        if (!fs::exists(config.mock_script)) {
            throw ConfigError("mock_script not found: " + config.mock_script.string());
        }
    }
}

DocumentContext load_contract(const fs::path& path) {
    DocumentContext context;
    context.text = read_file_or_throw(path, "contract file");
    if (context.text.empty()) {
        throw ConfigError("contract file is empty: " + path.string());
    }
    context.id = path.stem().string();
    context.source_path = path.string();
    context.token_estimate = estimate_tokens(context.text);
    return context;
}

int cmd_generate(const fs::path& config_path, const GenerateOptions& options) {
    CliConfig config;
    try {
        config = load_cli_config(config_path);
        apply_common_overrides(config, options.common);
        if (options.include_intermediate) config.include_intermediate = true;
        if (options.min_score.has_value()) config.min_score = options.min_score;
        validate_cli_config(config);
        if (config.contract_path.empty()) {
            throw ConfigError("'contract_path' is required for generate");
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitFailure;
    }

    const int n = config.run.n_questions;
    const int t = config.run.n_iterations;
    if (options.dry_run) {
        const std::pair<const char*, const BackendBinding*> bindings[] = {
            {"strong", &config.run.role_settings.strong},
            {"weak", &config.run.role_settings.weak},
            {"feedback", &config.run.role_settings.feedback},
            {"guide", &config.run.role_settings.guide},
            {"revise", &config.run.role_settings.revise},
        };
        std::cout << "plan:\n"
                  << "  contract: " << config.contract_path.string() << "\n"
                  << "  run_dir:  " << config.run_dir.string() << "\n"
                  << "  questions (N): " << n << "\n"
                  << "  iterations (T): " << t << "\n"
                  << "  seed: " << config.run.seed << "\n"
                  << "  concurrency: " << config.run.concurrency_limit << "\n"
                  << "  roles:\n";
        for (const auto& [name, binding] : bindings) {
            std::cout << "    " << name << ": model=" << binding->model_name
                      << " endpoint="
                      << (binding->endpoint_url.empty() ? "mock" : binding->endpoint_url)
                      << " temperature=" << binding->temperature << "\n";
        }
        std::cout << "  estimated backend calls: " << (5 * n * t + n) << "\n";
        return kExitOk;
    }

    try {
        const DocumentContext context = load_contract(config.contract_path);
        fs::create_directories(config.run_dir);
        EventLog log(config.run_dir / "events.jsonl");

        Pipeline pipeline = make_pipeline(config);
        const AgentSet agents =
            make_agent_set(config.run, pipeline.backend(), pipeline.prompts);

        SignalGuard signals;
        RunState state;
        if (fs::exists(config.run_dir / "manifest.json")) {
            log.info("resume", "manifest found, continuing run");
            state = resume(config.run_dir, pipeline.backend(), pipeline.prompts, &log);
        } else {
            state = run(config.run, context, agents, config.run_dir, &log);
        }

        if (state.completed_count() > 0) {
            export_run_dataset(config, state, pipeline, log);
        }
        if (g_signal_seen != 0) {
            log.warn("interrupted", "checkpointed; rerun the same command to resume");
        }
        return exit_code_for(state);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const CorruptState& e) {
        std::cerr << "corrupt run state: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitFailure;
    }
}

int cmd_baseline(const std::string& kind, const fs::path& config_path,
                 const BaselineOptions& options) {
    if (kind != "paraphrase" && kind != "naiveqa") {
        std::cerr << "usage error: unknown baseline kind '" << kind
                  << "' (expected paraphrase or naiveqa)" << std::endl;
        return kExitUsage;
    }

    try {
        CliConfig config = load_cli_config(config_path);
        apply_common_overrides(config, options.common);
        validate_cli_config(config);
        if (config.contract_path.empty()) {
            throw ConfigError("'contract_path' is required for baseline");
        }

        const DocumentContext context = load_contract(config.contract_path);
        fs::create_directories(config.run_dir);
        EventLog log(config.run_dir / "events.jsonl");
        Pipeline pipeline = make_pipeline(config);
        const AgentSet agents =
            make_agent_set(config.run, pipeline.backend(), pipeline.prompts);

        SyntheticDataset dataset;
        std::size_t expected = 0;
        if (kind == "paraphrase") {
            const int k = options.count > 0 ? options.count : 6;
            ChunkPlan plan;
            if (options.chunk_size.has_value()) plan.chunk_size_chars = *options.chunk_size;
            if (options.chunk_overlap.has_value()) plan.overlap_chars = *options.chunk_overlap;
            expected = plan.chunks(context.text).size() * static_cast<std::size_t>(k);
            dataset = generate_paraphrases(context, agents, k, plan, config.run.seed,
                                           config.run.concurrency_limit, &log);
        } else {
            const int count = options.count > 0 ? options.count : 10;
            expected = static_cast<std::size_t>(count);
            dataset = generate_uninformed_qa(context, agents, count, config.run.seed,
                                             config.run.concurrency_limit, &log);
        }

        if (dataset.records.empty()) {
            std::cerr << "baseline produced no records" << std::endl;
            return kExitFailure;
        }
        export_dataset(dataset, ExportFormat::jsonl_qa,
                       config.run_dir / "dataset.jsonl");
        std::cerr << "baseline " << kind << ": " << dataset.records.size()
                  << " records -> " << (config.run_dir / "dataset.jsonl").string()
                  << std::endl;
        return dataset.records.size() == expected ? kExitOk : kExitPartial;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitFailure;
    }
}

int cmd_eval(const fs::path& tasks_dir, const fs::path& config_path,
             const EvalOptionsCli& options) {
    try {
        CliConfig config = load_cli_config(config_path);
        apply_common_overrides(config, options.common);
        validate_cli_config(config);

        const std::vector<EvalTask> tasks = load_tasks(tasks_dir);
        if (tasks.empty()) {
            std::cerr << "no task files found in " << tasks_dir.string() << std::endl;
            return kExitFailure;
        }

        fs::create_directories(options.out_dir);
        EventLog log(options.out_dir / "events.jsonl");
        Pipeline pipeline = make_pipeline(config);

        const BackendBinding binding = config.eval_binding.has_value()
                                           ? *config.eval_binding
                                           : config.run.role_settings.weak;
        EvalOptions eval_options;
        eval_options.concurrency = config.run.concurrency_limit;
        eval_options.strict = options.strict;

        const EvalReport report =
            evaluate(tasks, binding, pipeline.backend(), eval_options, &log);
        const ComparisonTable table = compare_runs({report}, {report.token_usage});

        {
            std::ofstream csv(options.out_dir / "report.csv", std::ios::trunc);
            csv << table.csv;
            std::ofstream txt(options.out_dir / "report.txt", std::ios::trunc);
            txt << table.text;
        }
        std::cout << table.text;
        std::cout << "overall accuracy: " << report.overall_accuracy << std::endl;
        return kExitOk;
    } catch (const SchemaError& e) {
        std::cerr << "task schema error: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitFailure;
    }
}

int cmd_inspect(const fs::path& run_dir, int question_index) {
    try {
        const RunState state = load_run_state(run_dir);
        if (question_index < 0 || question_index >= state.config.n_questions) {
            std::cerr << "question index " << question_index
                      << " out of range; valid range is 0.."
                      << (state.config.n_questions - 1) << std::endl;
            return kExitFailure;
        }

        const auto& steps =
            state.trajectories[static_cast<std::size_t>(question_index)];
        std::cout << "question " << question_index << ": " << steps.size()
                  << " iteration(s)"
                  << (state.trajectory_complete(question_index) ? "" : " (incomplete)")
                  << "\n";
        for (const auto& step : steps) {
            std::cout << "\niteration " << step.iteration << ":\n"
                      << "  question: " << step.question_before.text << "\n"
                      << "  score:    " << step.feedback.score << " ("
                      << to_string(step.feedback.parse_status) << ")\n"
                      << "  critique: " << step.feedback.critique << "\n"
                      << "  gradient: " << step.gradient.text << "\n"
                      << "  revised:  " << step.question_after.text << "\n";
        }
        if (!steps.empty()) {
            std::cout << "\nfinal question (iteration "
                      << steps.back().question_after.iteration
                      << "): " << steps.back().question_after.text << std::endl;
        }
        return kExitOk;
    } catch (const CorruptState& e) {
        std::cerr << "corrupt run state: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitFailure;
    }
}

int cmd_export(const fs::path& run_dir, const std::string& format,
               const fs::path& out_path) {
    ExportFormat fmt;
    try {
        fmt = export_format_from_string(format);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << std::endl;
        return kExitUsage;
    }
    try {
        const SyntheticDataset dataset =
            import_dataset(ExportFormat::jsonl_qa, run_dir / "dataset.jsonl");
        export_dataset(dataset, fmt, out_path);
        std::cerr << "exported " << dataset.records.size() << " records -> "
                  << out_path.string() << std::endl;
        return kExitOk;
    } catch (const ExportError& e) {
        std::cerr << "export error: " << e.what() << std::endl;
        return kExitFailure;
    }
}

int cmd_sweep(const fs::path& config_path, std::vector<int> t_values,
              const SweepOptions& options) {
    if (t_values.empty()) {
        std::cerr << "usage error: sweep requires at least one -t value" << std::endl;
        return kExitUsage;
    }
    for (int t : t_values) {
        if (t < 1) {
            std::cerr << "usage error: sweep t values must be >= 1" << std::endl;
            return kExitUsage;
        }
    }

    try {
        CliConfig config = load_cli_config(config_path);
        apply_common_overrides(config, options.common);
        validate_cli_config(config);
        if (config.contract_path.empty()) {
            throw ConfigError("'contract_path' is required for sweep");
        }

        const DocumentContext context = load_contract(config.contract_path);
        fs::create_directories(config.run_dir);
        EventLog log(config.run_dir / "events.jsonl");
        Pipeline pipeline = make_pipeline(config);
        const AgentSet agents =
            make_agent_set(config.run, pipeline.backend(), pipeline.prompts);

        SignalGuard signals;
        const auto states = sweep_iterations(config.run, context, agents, t_values,
                                             config.run_dir, &log);

        BuildOptions build_options;
        build_options.dedup_threshold = config.run.dedup_threshold;
        build_options.concurrency = config.run.concurrency_limit;
        build_options.allow_partial = true;

        int worst = kExitOk;
        for (const auto& [t, state] : states) {
            const SyntheticDataset dataset =
                build_dataset(state, agents, build_options, &log);
            if (!dataset.records.empty()) {
                export_dataset(dataset, ExportFormat::jsonl_qa,
                               config.run_dir /
                                   ("dataset_T" + std::to_string(t) + ".jsonl"));
            }
            worst = std::max(worst, exit_code_for(state));
            std::cerr << "sweep T=" << t << ": " << dataset.records.size()
                      << " records" << std::endl;
        }
        return worst;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitFailure;
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"iterative adversarial question generation over a domain document"};
    app.require_subcommand(1);

    std::string config_path;
    CommonOverrides common;
    std::int64_t seed_value = 0;
    int concurrency_value = 0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON config file")->required();
        cmd->add_option("--seed", seed_value, "override the config seed")
            ->each([&](const std::string&) { common.seed = seed_value; });
        cmd->add_option("--concurrency", concurrency_value,
                        "override the concurrency limit")
            ->each([&](const std::string&) { common.concurrency = concurrency_value; });
    };

    // generate
    auto* generate = app.add_subcommand(
        "generate", "run the adversarial refinement loop and emit the dataset");
    GenerateOptions generate_options;
    add_common(generate);
    generate->add_flag("--dry-run", generate_options.dry_run,
                       "print the resolved plan and exit without any calls");
    generate->add_flag("--include-intermediate",
                       generate_options.include_intermediate,
                       "also emit intermediate-iteration question/answer pairs");
    double min_score_value = 0.0;
    generate
        ->add_option("--min-score", min_score_value,
                     "drop records scoring below this")
        ->each([&](const std::string&) { generate_options.min_score = min_score_value; });

    // baseline
    auto* baseline =
        app.add_subcommand("baseline", "generate a comparison dataset");
    std::string baseline_kind;
    BaselineOptions baseline_options;
    baseline->add_option("kind", baseline_kind, "paraphrase | naiveqa")->required();
    add_common(baseline);
    baseline->add_option("-k,--count", baseline_options.count,
                         "paraphrases per chunk / questions to generate");
    std::int64_t chunk_size = 0, chunk_overlap = -1;
    baseline->add_option("--chunk-size", chunk_size, "chunk size in characters")
        ->each([&](const std::string&) { baseline_options.chunk_size = chunk_size; });
    baseline->add_option("--chunk-overlap", chunk_overlap, "chunk overlap in characters")
        ->each([&](const std::string&) { baseline_options.chunk_overlap = chunk_overlap; });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "few-shot exact-match evaluation");
    std::string tasks_dir;
    EvalOptionsCli eval_options;
    std::string eval_out = ".";
    eval_cmd->add_option("tasks", tasks_dir, "directory of task .tsv/.json files")
        ->required();
    add_common(eval_cmd);
    eval_cmd->add_option("-o,--out", eval_out, "report output directory");
    eval_cmd->add_flag("--strict", eval_options.strict,
                       "backend failures abort instead of scoring incorrect");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "pretty-print one question's trajectory");
    std::string inspect_run_dir;
    int inspect_index = 0;
    inspect->add_option("run_dir", inspect_run_dir, "run directory")->required();
    inspect->add_option("question", inspect_index, "question index")->required();
    inspect->add_option("--seed", seed_value, "accepted for flag uniformity");
    inspect->add_option("--concurrency", concurrency_value, "accepted for flag uniformity");

    // export
    auto* export_cmd =
        app.add_subcommand("export", "re-export a run's dataset in another format");
    std::string export_run_dir, export_format_name = "jsonl_chat", export_out;
    export_cmd->add_option("run_dir", export_run_dir, "run directory")->required();
    export_cmd->add_option("-f,--format", export_format_name, "jsonl_qa | jsonl_chat");
    export_cmd->add_option("-o,--out", export_out, "output file")->required();
    export_cmd->add_option("--seed", seed_value, "accepted for flag uniformity");
    export_cmd->add_option("--concurrency", concurrency_value, "accepted for flag uniformity");

    // sweep
    auto* sweep = app.add_subcommand(
        "sweep", "one run at max(T), datasets for every requested iteration budget");
    SweepOptions sweep_options;
    std::vector<int> t_values;
    add_common(sweep);
    sweep->add_option("-t,--iterations", t_values, "iteration budgets (repeatable)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << std::endl;
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All) << std::endl;
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << std::endl;
        return kExitUsage;
    }

    generate_options.common = common;
    baseline_options.common = common;
    eval_options.common = common;
    eval_options.out_dir = eval_out;
    sweep_options.common = common;

    if (generate->parsed()) return cmd_generate(config_path, generate_options);
    if (baseline->parsed()) return cmd_baseline(baseline_kind, config_path, baseline_options);
    if (eval_cmd->parsed()) return cmd_eval(tasks_dir, config_path, eval_options);
    if (inspect->parsed()) return cmd_inspect(inspect_run_dir, inspect_index);
    if (export_cmd->parsed()) {
        return cmd_export(export_run_dir, export_format_name, export_out);
    }
    if (sweep->parsed()) return cmd_sweep(config_path, t_values, sweep_options);
    return kExitUsage;
}

}  // namespace advqa
