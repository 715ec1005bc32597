#include "rca/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "rca/util.hpp"

namespace rca {

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) fail(ErrorKind::Format, "truncated timestamp");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            fail(ErrorKind::Format, "bad timestamp digit in '" + std::string(s) + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

void expect_char(std::string_view s, std::size_t pos, std::string_view allowed) {
    if (pos >= s.size() || allowed.find(s[pos]) == std::string_view::npos)
        fail(ErrorKind::Format, "malformed timestamp '" + std::string(s) + "'");
}

const std::string& require_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        fail(ErrorKind::Format, std::string("missing or non-string field '") + key + "'");
    return it->get_ref<const std::string&>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(ErrorKind::Format, std::string("non-string field '") + key + "'");
    return it->get<std::string>();
}

bool field_present(const Incident& inc, IncidentField f) {
    switch (f) {
        case IncidentField::Title: return !trim(inc.title).empty();
        case IncidentField::Summary: return !trim(inc.summary_raw).empty();
        case IncidentField::RootCause: return !trim(inc.root_cause_raw).empty();
        case IncidentField::OwningService:
            return inc.owning_service && !trim(*inc.owning_service).empty();
    }
    return false;
}

}  // namespace

Timestamp parse_rfc3339(std::string_view s) {
    using namespace std::chrono;
    const int y = parse_digits(s, 0, 4);
    expect_char(s, 4, "-");
    const int mo = parse_digits(s, 5, 2);
    expect_char(s, 7, "-");
    const int d = parse_digits(s, 8, 2);
    expect_char(s, 10, "Tt ");
    const int hh = parse_digits(s, 11, 2);
    expect_char(s, 13, ":");
    const int mm = parse_digits(s, 14, 2);
    expect_char(s, 16, ":");
    const int ss = parse_digits(s, 17, 2);
    std::size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int scale = 100;
        std::size_t ndigits = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            millis += (s[pos] - '0') * scale;
            scale /= 10;
            ++pos;
            ++ndigits;
        }
        if (ndigits == 0) fail(ErrorKind::Format, "empty fraction in timestamp");
    }
    int offset_minutes = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '-' ? -1 : 1;
        const int oh = parse_digits(s, pos + 1, 2);
        expect_char(s, pos + 3, ":");
        const int om = parse_digits(s, pos + 4, 2);
        offset_minutes = sign * (oh * 60 + om);
        pos += 6;
    } else {
        fail(ErrorKind::Format, "timestamp lacks a UTC offset: '" + std::string(s) + "'");
    }
    if (pos != s.size()) fail(ErrorKind::Format, "trailing characters in timestamp");

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60)
        fail(ErrorKind::Format, "timestamp out of range: '" + std::string(s) + "'");
    auto t = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{millis} -
             minutes{offset_minutes};
    return time_point_cast<milliseconds>(t);
}

std::string format_rfc3339(Timestamp ts) {
    using namespace std::chrono;
    const auto day_point = floor<days>(ts);
    const year_month_day ymd{day_point};
    auto rem = ts - day_point;
    const auto h = duration_cast<hours>(rem);
    rem -= h;
    const auto m = duration_cast<minutes>(rem);
    rem -= m;
    const auto sec = duration_cast<seconds>(rem);
    rem -= sec;
    char buf[40];
    if (rem.count() == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()), int(h.count()),
                      int(m.count()), int(sec.count()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()), int(h.count()),
                      int(m.count()), int(sec.count()), int(rem.count()));
    }
    return buf;
}

IncidentStatus parse_status(std::string_view text) {
    const auto lower = to_lower_ascii(trim(text));
    if (lower == "resolved") return IncidentStatus::Resolved;
    if (lower == "mitigated") return IncidentStatus::Mitigated;
    return IncidentStatus::Other;
}

std::string_view status_name(IncidentStatus status) {
    switch (status) {
        case IncidentStatus::Resolved: return "Resolved";
        case IncidentStatus::Mitigated: return "Mitigated";
        case IncidentStatus::Other: return "Other";
    }
    return "Other";
}

nlohmann::json to_json(const Incident& inc) {
    nlohmann::json j{
        {"id", inc.id},
        {"title", inc.title},
        {"summary", inc.summary_raw},
        {"root_cause", inc.root_cause_raw},
        {"severity", inc.severity},
        {"status", status_name(inc.status)},
        {"created_at", format_rfc3339(inc.created_at)},
    };
    if (inc.owning_service) j["owning_service"] = *inc.owning_service;
    if (inc.summary_clean) j["summary_clean"] = *inc.summary_clean;
    if (inc.root_cause_clean) j["root_cause_clean"] = *inc.root_cause_clean;
    if (inc.summary_short) j["summary_short"] = *inc.summary_short;
    if (inc.root_cause_short) j["root_cause_short"] = *inc.root_cause_short;
    return j;
}

Incident incident_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::Format, "incident record is not an object");
    Incident inc;
    inc.id = require_string(j, "id");
    if (inc.id.empty()) fail(ErrorKind::Format, "empty incident id");
    inc.title = require_string(j, "title");
    inc.summary_raw = require_string(j, "summary");
    inc.root_cause_raw = require_string(j, "root_cause");
    auto sev = j.find("severity");
    if (sev == j.end() || !sev->is_number_integer())
        fail(ErrorKind::Format, "missing or non-integer field 'severity'");
    inc.severity = sev->get<int>();
    inc.status = parse_status(require_string(j, "status"));
    inc.created_at = parse_rfc3339(require_string(j, "created_at"));
    inc.owning_service = optional_string(j, "owning_service");
    inc.summary_clean = optional_string(j, "summary_clean");
    inc.root_cause_clean = optional_string(j, "root_cause_clean");
    inc.summary_short = optional_string(j, "summary_short");
    inc.root_cause_short = optional_string(j, "root_cause_short");
    return inc;
}

LoadResult parse_incidents(std::string_view ndjson) {
    LoadResult result;
    std::unordered_set<std::string> seen;
    std::size_t non_blank = 0;
    for (auto& line : split_lines(ndjson)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++non_blank;
        try {
            auto inc = incident_from_json(nlohmann::json::parse(line));
            if (!seen.insert(inc.id).second) {
                ++result.rejected;
                continue;
            }
            result.incidents.push_back(std::move(inc));
        } catch (const nlohmann::json::exception&) {
            ++result.rejected;
        } catch (const Error&) {
            ++result.rejected;
        }
    }
    if (non_blank > 0 && result.incidents.empty())
        fail(ErrorKind::Format, "no parsable incident records (" +
                                    std::to_string(result.rejected) + " rejected)");
    return result;
}

LoadResult load_incidents(const std::string& path) { return parse_incidents(read_file(path)); }

std::string dump_incidents(const std::vector<Incident>& incidents) {
    std::string out;
    for (const auto& inc : incidents) {
        out += to_json(inc).dump();
        out += '\n';
    }
    return out;
}

void save_incidents(const std::string& path, const std::vector<Incident>& incidents) {
    write_file(path, dump_incidents(incidents));
}

void FilterSpec::validate() const {
    if (max_severity < 0) fail(ErrorKind::InvalidArgument, "max_severity must be >= 0");
    for (const auto& kw : excluded_title_keywords)
        if (kw.empty()) fail(ErrorKind::InvalidArgument, "empty title keyword in filter");
}

std::vector<Incident> filter_incidents(const std::vector<Incident>& incidents,
                                       const FilterSpec& spec) {
    spec.validate();
    std::vector<std::string> keywords;
    for (const auto& kw : spec.excluded_title_keywords) keywords.push_back(to_lower_ascii(kw));

    std::vector<Incident> out;
    for (const auto& inc : incidents) {
        if (std::ranges::find(spec.allowed_statuses, inc.status) == spec.allowed_statuses.end())
            continue;
        if (inc.severity < 0 || inc.severity > spec.max_severity) continue;
        if (!std::ranges::all_of(spec.require_fields,
                                 [&](IncidentField f) { return field_present(inc, f); }))
            continue;
        const auto title = to_lower_ascii(inc.title);
        if (std::ranges::any_of(keywords, [&](const std::string& kw) {
                return title.find(kw) != std::string::npos;
            }))
            continue;
        out.push_back(inc);
    }
    return out;
}

CorpusSplits split_corpus(std::vector<Incident> incidents, SplitSizes sizes) {
    const std::size_t total = sizes.retrieval + sizes.validation + sizes.test;
    if (total > incidents.size())
        fail(ErrorKind::InvalidArgument, "split sizes (" + std::to_string(total) +
                                             ") exceed corpus size (" +
                                             std::to_string(incidents.size()) + ")");
    std::ranges::stable_sort(incidents, [](const Incident& a, const Incident& b) {
        if (a.created_at != b.created_at) return a.created_at < b.created_at;
        return a.id < b.id;
    });
    CorpusSplits splits;
    auto first = incidents.begin();
    auto take = [&](std::size_t n, std::vector<Incident>& dst) {
        dst.assign(std::make_move_iterator(first), std::make_move_iterator(first + n));
        first += static_cast<std::ptrdiff_t>(n);
    };
    take(sizes.retrieval, splits.retrieval);
    take(sizes.validation, splits.validation);
    take(sizes.test, splits.test);
    return splits;
}

IncidentLookup make_lookup(const std::vector<Incident>& incidents) {
    IncidentLookup lookup;
    lookup.reserve(incidents.size());
    for (const auto& inc : incidents) lookup.emplace(inc.id, &inc);
    return lookup;
}

}  // namespace rca
