#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "advqa/core.hpp"
#include "advqa/mock_backend.hpp"

namespace advqa::test {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(ADVQA_TEST_DATA_DIR); }

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("advqa-test-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline BackendBinding mock_binding(const std::string& model) {
    BackendBinding binding;
    binding.backend_id = "mock";
    binding.endpoint_url = "";
    binding.model_name = model;
    binding.temperature = 0.0;
    binding.max_tokens = 512;
    return binding;
}

inline RunConfig mock_run_config(int n_questions, int n_iterations,
                                 std::int64_t seed = 42) {
    RunConfig config;
    config.n_questions = n_questions;
    config.n_iterations = n_iterations;
    config.seed = seed;
    config.concurrency_limit = 1;
    config.dedup_threshold = 0.9;
    config.role_settings.strong = mock_binding("mock-strong");
    config.role_settings.weak = mock_binding("mock-weak");
    config.role_settings.feedback = mock_binding("mock-feedback");
    config.role_settings.guide = mock_binding("mock-guide");
    config.role_settings.guide.temperature = 0.7;
    config.role_settings.revise = mock_binding("mock-revise");
    config.role_settings.revise.temperature = 0.7;
    return config;
}

inline DocumentContext fixture_contract() {
    DocumentContext context;
    context.text = read_file(data_dir() / "contract.txt");
    context.id = "contract";
    context.source_path = (data_dir() / "contract.txt").string();
    context.token_estimate = estimate_tokens(context.text);
    return context;
}

// Decodes the (question_index, iteration) a mock call belongs to from its
// derived request seed.
struct CallSite {
    int question_index = -1;
    int iteration = -1;
};

inline CallSite decode_call_site(const MockCall& call, std::int64_t base_seed) {
    CallSite site;
    if (!call.request_seed.has_value()) return site;
    const std::int64_t delta = *call.request_seed - base_seed;
    if (delta < 0) return site;
    site.question_index = static_cast<int>(delta / 10007);
    site.iteration = static_cast<int>(delta % 10007);
    return site;
}

}  // namespace advqa::test
