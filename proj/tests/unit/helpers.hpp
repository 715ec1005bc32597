#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include "rca/corpus.hpp"
#include "rca/util.hpp"

namespace testing {

inline rca::Incident incident(std::string id, std::string title, std::string summary,
                              std::string root_cause, int day = 0) {
    rca::Incident inc;
    inc.id = std::move(id);
    inc.title = std::move(title);
    inc.summary_raw = std::move(summary);
    inc.root_cause_raw = std::move(root_cause);
    inc.status = rca::IncidentStatus::Resolved;
    inc.severity = 2;
    inc.created_at = rca::parse_rfc3339("2023-03-01T00:00:00Z") + std::chrono::days(day);
    return inc;
}

// Fully prepared incident: clean and short fields equal to the raw text.
inline rca::Incident summarized(std::string id, std::string title, std::string summary,
                                std::string root_cause, int day = 0) {
    auto inc = incident(std::move(id), std::move(title), summary, root_cause, day);
    inc.summary_clean = summary;
    inc.root_cause_clean = root_cause;
    inc.summary_short = summary;
    inc.root_cause_short = root_cause;
    return inc;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("rca_unit_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

template <class F>
rca::ErrorKind error_kind(F&& f) {
    try {
        f();
    } catch (const rca::Error& e) {
        return e.kind();
    }
    throw std::runtime_error("expected rca::Error");
}

}  // namespace testing
