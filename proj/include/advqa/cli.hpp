#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advqa/core.hpp"

namespace advqa {

// Stable exit codes for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitUsage = 64;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The JSON config file: RunConfig plus paths. Unknown keys are rejected;
// secrets stay in environment variables named by api_key_env.
struct CliConfig {
    RunConfig run;
    std::filesystem::path contract_path;
    std::filesystem::path run_dir;
    std::filesystem::path cache_dir;    // defaults to run_dir/cache
    std::filesystem::path prompt_dir;   // optional template overrides
    std::filesystem::path mock_script;  // required when any binding is mock
    std::optional<BackendBinding> eval_binding;  // defaults to roles.weak
    bool include_intermediate = false;
    std::optional<double> min_score;
    int retry_max_attempts = 3;
    int retry_base_delay_ms = 500;
};

CliConfig load_cli_config(const std::filesystem::path& path);

// Full validation, including API-key environment variables for non-mock
// bindings. Must succeed before any backend is constructed.
void validate_cli_config(const CliConfig& config);

DocumentContext load_contract(const std::filesystem::path& path);

struct CommonOverrides {
    std::optional<std::int64_t> seed;
    std::optional<int> concurrency;
};

struct GenerateOptions {
    CommonOverrides common;
    bool dry_run = false;
    bool include_intermediate = false;
    std::optional<double> min_score;
};

int cmd_generate(const std::filesystem::path& config_path,
                 const GenerateOptions& options);

struct BaselineOptions {
    CommonOverrides common;
    int count = 0;  // k for paraphrase, n for naiveqa; 0 picks the default
    std::optional<std::int64_t> chunk_size;
    std::optional<std::int64_t> chunk_overlap;
};

int cmd_baseline(const std::string& kind, const std::filesystem::path& config_path,
                 const BaselineOptions& options);

struct EvalOptionsCli {
    CommonOverrides common;
    std::filesystem::path out_dir = ".";
    bool strict = false;
};

int cmd_eval(const std::filesystem::path& tasks_dir,
             const std::filesystem::path& config_path, const EvalOptionsCli& options);

int cmd_inspect(const std::filesystem::path& run_dir, int question_index);

int cmd_export(const std::filesystem::path& run_dir, const std::string& format,
               const std::filesystem::path& out_path);

struct SweepOptions {
    CommonOverrides common;
};

int cmd_sweep(const std::filesystem::path& config_path, std::vector<int> t_values,
              const SweepOptions& options);

int run_cli(int argc, const char* const* argv);

}  // namespace advqa
