#include "advqa/events.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>

namespace advqa {

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        now.time_since_epoch())
                        .count() %
                    1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03lldZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec, static_cast<long long>(ms));
    return buf;
}

}  // namespace

EventLog::EventLog(const std::filesystem::path& path) {
    if (!path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::app);
}

void EventLog::info(const std::string& event, const std::string& detail) {
    write("info", event, detail, false);
}

void EventLog::warn(const std::string& event, const std::string& detail) {
    write("warn", event, detail, true);
}

void EventLog::error(const std::string& event, const std::string& detail) {
    write("error", event, detail, true);
}

void EventLog::write(const char* level, const std::string& event,
                     const std::string& detail, bool mirror) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (out_.is_open()) {
        nlohmann::ordered_json line;
        line["ts"] = iso_timestamp();
        line["level"] = level;
        line["event"] = event;
        line["detail"] = detail;
        out_ << line.dump() << '\n';
        out_.flush();
    }
    if (mirror) {
        std::cerr << "[" << level << "] " << event << ": " << detail << std::endl;
    }
}

}  // namespace advqa
