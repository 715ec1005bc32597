#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace rca {

enum class IncidentStatus { Resolved, Mitigated, Other };

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]"; 't' and a space
// are accepted as the date/time separator.
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp ts);

IncidentStatus parse_status(std::string_view text);
std::string_view status_name(IncidentStatus status);

struct Incident {
    std::string id;
    std::string title;
    std::string summary_raw;
    std::string root_cause_raw;
    std::optional<std::string> summary_clean;
    std::optional<std::string> root_cause_clean;
    std::optional<std::string> summary_short;
    std::optional<std::string> root_cause_short;
    int severity = 0;
    IncidentStatus status = IncidentStatus::Other;
    Timestamp created_at{};
    std::optional<std::string> owning_service;

    friend bool operator==(const Incident&, const Incident&) = default;
};

nlohmann::json to_json(const Incident& incident);
// Throws Error(Format) on missing or mistyped keys.
Incident incident_from_json(const nlohmann::json& j);

struct LoadResult {
    std::vector<Incident> incidents;
    std::size_t rejected = 0;
};

/// Reads newline-delimited JSON incident records. Malformed lines and
/// duplicate ids are counted in `rejected`; blank lines are ignored.
LoadResult load_incidents(const std::string& path);
LoadResult parse_incidents(std::string_view ndjson);

void save_incidents(const std::string& path, const std::vector<Incident>& incidents);
std::string dump_incidents(const std::vector<Incident>& incidents);

enum class IncidentField { Title, Summary, RootCause, OwningService };

struct FilterSpec {
    std::vector<IncidentStatus> allowed_statuses{IncidentStatus::Resolved,
                                                 IncidentStatus::Mitigated};
    int max_severity = 4;
    std::vector<std::string> excluded_title_keywords{"ignore", "test", "dummy"};
    std::vector<IncidentField> require_fields{IncidentField::Title, IncidentField::Summary,
                                              IncidentField::RootCause};

    // Throws Error(InvalidArgument) when a keyword is empty or max_severity < 0.
    void validate() const;
};

std::vector<Incident> filter_incidents(const std::vector<Incident>& incidents,
                                       const FilterSpec& spec);

struct SplitSizes {
    std::size_t retrieval = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

struct CorpusSplits {
    std::vector<Incident> retrieval;
    std::vector<Incident> validation;
    std::vector<Incident> test;
};

/// Sorts by (created_at, id) and cuts contiguous blocks in the order
/// retrieval, validation, test. Incidents beyond the requested total are
/// left out.
CorpusSplits split_corpus(std::vector<Incident> incidents, SplitSizes sizes);

using IncidentLookup = std::unordered_map<std::string, const Incident*>;
IncidentLookup make_lookup(const std::vector<Incident>& incidents);

}  // namespace rca
