#include "rca/summarize.hpp"

#include <cctype>
#include <exception>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rca/util.hpp"

namespace rca {

namespace {

constexpr std::string_view kIncidentSummaryTemplate =
    "I want you to act as an expert software engineer. Consider the following incident report "
    "was submitted on the IcM portal.\n"
    "\n"
    "Incident Description: {description}\n"
    "\n"
    "Your task is to summarize this incident report. Focus on the following aspects of the "
    "incident:\n"
    "\n"
    "- The symptoms of the incident that lead to this incident report\n"
    "\n"
    "- References to external services or tools that contain relevant information.\n"
    "\n"
    "- Distinguishing features of the incident such as precise error codes, specifics from logs "
    "etc.\n"
    "\n"
    "- Context of the incident such as the name of the service, region, etc.\n"
    "\n"
    "Your summary should be at most 5-6 sentences and should be in third person. You must end "
    "your summary with <|endoftext|>.\n"
    "\n"
    "Concise Summary:";

constexpr std::string_view kRootCauseTemplate =
    "I want you to act as an expert software engineer.\n"
    "Your task is to summarize the following root cause of an incident report. Your summary "
    "must clearly state what the root cause of the incident was.\n"
    "\n"
    "Incident Root Cause:\n"
    "{description}\n"
    "\n"
    "Concise Summary:";

constexpr std::string_view kPlaceholder = "{description}";

std::string_view between(std::string_view s, std::string_view open, std::string_view close) {
    const auto a = s.find(open);
    if (a == std::string_view::npos) return {};
    const auto from = a + open.size();
    const auto b = s.rfind(close);
    if (b == std::string_view::npos || b < from) return s.substr(from);
    return s.substr(from, b - from);
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = true;
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

}  // namespace

std::string_view summary_kind_name(SummaryKind kind) {
    return kind == SummaryKind::IncidentSummary ? "incident_summary" : "root_cause";
}

std::string build_summarization_prompt(SummaryKind kind, std::string_view description) {
    if (trim(description).empty())
        fail(ErrorKind::InvalidArgument, "cannot summarize an empty description");
    std::string prompt(kind == SummaryKind::IncidentSummary ? kIncidentSummaryTemplate
                                                            : kRootCauseTemplate);
    prompt.replace(prompt.find(kPlaceholder), kPlaceholder.size(), description);
    return prompt;
}

SummaryCache::SummaryCache(std::string path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    for (const auto& line : split_lines(read_file(path_))) {
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            entries_.try_emplace(j.at("key").get<std::string>(), j.at("value").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Format, "corrupt summary cache " + path_ + ": " + e.what());
        }
    }
}

std::string SummaryCache::make_key(SummaryKind kind, std::string_view provider_id,
                                   std::string_view text) {
    std::string material;
    material += summary_kind_name(kind);
    material += '\x1f';
    material += provider_id;
    material += '\x1f';
    material += kSummaryTemplateVersion;
    material += '\x1f';
    material += text;
    return hex64(fnv1a64(material)) + hex64(splitmix64(fnv1a64(material, 0x84222325cbf29ce4ULL)));
}

std::optional<std::string> SummaryCache::find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

std::string SummaryCache::insert(const std::string& key, SummaryKind kind, std::string value) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, std::move(value));
    if (inserted && !path_.empty()) {
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) fail(ErrorKind::Io, "cannot append to summary cache " + path_);
        out << nlohmann::json{{"key", key}, {"kind", summary_kind_name(kind)}, {"value", it->second}}
                   .dump()
            << '\n';
    }
    return it->second;
}

std::size_t SummaryCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        const bool boundary =
            i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
        if (!boundary) continue;
        auto sentence = collapse_whitespace(text.substr(start, i + 1 - start));
        if (!sentence.empty()) out.push_back(std::move(sentence));
        start = i + 1;
    }
    if (auto rest = collapse_whitespace(text.substr(std::min(start, text.size())));
        !rest.empty())
        out.push_back(std::move(rest));
    return out;
}

std::string ExtractiveSummaryProvider::id() const {
    return "extractive:" + std::to_string(sentences_);
}

std::string ExtractiveSummaryProvider::complete(const CompletionRequest& request) {
    std::string_view description;
    if (request.prompt.find("Incident Description: ") != std::string::npos) {
        description = between(request.prompt, "Incident Description: ",
                              "\n\nYour task is to summarize this incident report.");
    } else {
        description = between(request.prompt, "Incident Root Cause:\n", "\n\nConcise Summary:");
    }
    auto sentences = split_sentences(description);
    if (sentences.size() > sentences_) sentences.resize(sentences_);
    if (sentences.empty()) return {};
    return join(sentences, " ") + " " + std::string(kEndOfText);
}

std::string summarize_field(TextProvider& provider, SummaryKind kind, std::string_view text,
                            SummaryCache& cache) {
    const auto key = SummaryCache::make_key(kind, provider.id(), text);
    if (auto hit = cache.find(key)) return *hit;

    CompletionRequest request;
    request.prompt = build_summarization_prompt(kind, text);
    request.temperature = 0.0;
    request.max_tokens = 200;
    std::string completion = provider.complete(request);

    std::string_view body = trim(completion);
    if (auto pos = body.rfind(kEndOfText); pos != std::string_view::npos &&
                                           pos + kEndOfText.size() == body.size())
        body = trim(body.substr(0, pos));
    if (body.empty()) fail(ErrorKind::Provider, "provider returned an empty summary");
    return cache.insert(key, kind, std::string(body));
}

Incident summarize_incident(TextProvider& provider, const Incident& incident,
                            SummaryCache& cache) {
    if (!incident.summary_clean || !incident.root_cause_clean)
        fail(ErrorKind::InvalidArgument,
             "incident " + incident.id + " must be cleaned before summarization");
    Incident out = incident;
    out.summary_short =
        summarize_field(provider, SummaryKind::IncidentSummary, *incident.summary_clean, cache);
    out.root_cause_short =
        summarize_field(provider, SummaryKind::RootCause, *incident.root_cause_clean, cache);
    return out;
}

std::vector<Incident> summarize_incidents(TextProvider& provider,
                                          const std::vector<Incident>& incidents,
                                          SummaryCache& cache, int concurrency) {
    std::vector<Incident> out(incidents.size());
    std::vector<std::exception_ptr> errors(incidents.size());
    const auto n = static_cast<std::ptrdiff_t>(incidents.size());
#pragma omp parallel for schedule(dynamic) num_threads(concurrency > 0 ? concurrency : 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            out[idx] = summarize_incident(provider, incidents[idx], cache);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace rca
