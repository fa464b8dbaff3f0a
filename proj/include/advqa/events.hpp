#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>

namespace advqa {

// Structured JSONL event log (one object per line) with human-readable
// mirroring of warnings and errors to stderr. Wall-clock timestamps live
// here, never in the persisted run state.
class EventLog {
public:
    EventLog() = default;
    explicit EventLog(const std::filesystem::path& path);

    void info(const std::string& event, const std::string& detail);
    void warn(const std::string& event, const std::string& detail);
    void error(const std::string& event, const std::string& detail);

private:
    void write(const char* level, const std::string& event, const std::string& detail,
               bool mirror);

    std::mutex mutex_;
    std::ofstream out_;
};

}  // namespace advqa
