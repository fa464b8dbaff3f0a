#include "advqa/cache.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace advqa {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
}

std::optional<CompletionResult> ResponseCache::lookup(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    const fs::path path = dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("text") ||
        !doc.contains("usage")) {
        return std::nullopt;  // torn or foreign file; treat as miss
    }
    CompletionResult result;
    result.text = doc["text"].get<std::string>();
    result.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
    result.usage.completion_tokens =
        doc["usage"].value("completion_tokens", std::int64_t{0});
    result.usage.estimated = doc["usage"].value("estimated", false);
    result.cached = true;
    return result;
}

void ResponseCache::store(const std::string& key, const CompletionResult& result) const {
    if (dir_.empty()) return;
    ordered_json doc;
    doc["text"] = result.text;
    doc["usage"] = {{"prompt_tokens", result.usage.prompt_tokens},
                    {"completion_tokens", result.usage.completion_tokens},
                    {"estimated", result.usage.estimated}};

    // Write to a per-writer temp file, then rename into place.
    static std::atomic<std::uint64_t> counter{0};
    const fs::path final_path = dir_ / (key + ".json");
    const fs::path tmp_path =
        dir_ / (key + ".tmp." + std::to_string(counter.fetch_add(1)) + "." +
                std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        out << doc.dump();
    }
    std::error_code ec;
    fs::rename(tmp_path, final_path, ec);
    if (ec) fs::remove(tmp_path, ec);
}

CompletionResult CachedBackend::complete(const BackendBinding& binding,
                                         const std::vector<ChatMessage>& messages) {
    const std::string key = cache_key(binding, messages);
    if (auto hit = cache_.lookup(key)) return *hit;
    CompletionResult fresh = inner_.complete(binding, messages);
    cache_.store(key, fresh);
    fresh.cached = false;
    return fresh;
}

}  // namespace advqa
