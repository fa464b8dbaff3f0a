#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "advqa/backend.hpp"

namespace advqa {

// Content-addressed on-disk store: one JSON file per cache key. Concurrent
// writers may race but write identical bytes for identical keys, so
// last-writer-wins is safe. Unreadable entries are treated as misses.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<CompletionResult> lookup(const std::string& key) const;
    void store(const std::string& key, const CompletionResult& result) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

// Wraps any backend with the response cache. Hits return the originally
// stored text byte for byte with cached=true and no inner invocation.
class CachedBackend : public Backend {
public:
    CachedBackend(Backend& inner, std::filesystem::path cache_dir)
        : inner_(inner), cache_(std::move(cache_dir)) {}

    CompletionResult complete(const BackendBinding& binding,
                              const std::vector<ChatMessage>& messages) override;

    const ResponseCache& cache() const { return cache_; }

private:
    Backend& inner_;
    ResponseCache cache_;
};

}  // namespace advqa
