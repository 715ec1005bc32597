#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rca/corpus.hpp"
#include "rca/embed.hpp"
#include "rca/index.hpp"
#include "rca/metrics.hpp"
#include "rca/prompt.hpp"
#include "rca/provider.hpp"
#include "rca/summarize.hpp"
#include "rca/util.hpp"

namespace httplib {
class Server;
}

namespace rca {

// "mock" | "extractive" | "remote"
struct ProviderSpec {
    std::string kind;
    std::size_t sentences = 2;   // extractive
    RemoteProviderConfig remote;
};

struct ScorerSpec {
    std::string name;
    std::string endpoint;
};

struct AppConfig {
    std::string corpus_path;         // summarized retrieval corpus, NDJSON
    std::string index_path;
    std::string summary_cache_path;  // empty: in-memory only
    EmbedderConfig embedder;
    ProviderSpec summarizer{"extractive", 2, {}};
    ProviderSpec generator{"mock", 2, {}};
    TokenBudget budget;
    std::size_t k = 20;
    OrderingMode ordering = OrderingMode::descending();
    std::uint64_t seed = 42;
    std::vector<ScorerSpec> external_scorers;
    std::string host = "127.0.0.1";
    int port = 8080;
    int concurrency = 4;

    // Relative paths resolve against `base_dir`.
    static AppConfig from_json(const nlohmann::json& j, const std::string& base_dir = {});
    static AppConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

std::unique_ptr<TextProvider> make_provider(const ProviderSpec& spec,
                                            const std::vector<Incident>& corpus);

/// Incident payload as accepted by the API: title and summary are required,
/// id, root_cause, severity, status, created_at and owning_service optional.
Incident incident_from_payload(const nlohmann::json& payload);

struct ServiceState {
    std::vector<Incident> corpus;
    IncidentLookup lookup;
    std::optional<AnyIndex> index;
    std::shared_ptr<TextProvider> generator;
};

/// Request handlers shared by the CLI and the HTTP server. Handlers work on
/// an immutable snapshot of the loaded state; reload swaps it atomically.
class RcaService {
public:
    explicit RcaService(AppConfig config);

    const AppConfig& config() const { return config_; }
    std::shared_ptr<const ServiceState> snapshot() const;

    // Loads corpus and, if present, the index file. Missing corpus file -> empty corpus.
    void load();
    // Re-embeds the corpus (optionally from another file) and swaps the index in.
    std::size_t rebuild_index(const std::optional<std::string>& corpus_path, bool save);

    // POST /v1/rca. Throws Error(Conflict) without an index.
    nlohmann::json rca(const nlohmann::json& payload);
    // GET /v1/incidents/{id}/similar
    nlohmann::json similar_by_id(const std::string& id, std::size_t k);
    nlohmann::json similar_to_payload(const nlohmann::json& payload, std::size_t k);
    // POST /v1/evaluate; one {"candidate","reference"} object per line.
    nlohmann::json evaluate_ndjson(const std::string& body);

private:
    EmbeddingVector embed_incident(const Incident& incident) const;
    Incident prepare_query(const nlohmann::json& payload);
    static nlohmann::json hits_json(const std::vector<SearchHit>& hits);
    std::shared_ptr<const ServiceState> make_state(std::vector<Incident> corpus,
                                                   std::optional<AnyIndex> index) const;

    AppConfig config_;
    Embedder embedder_;
    std::unique_ptr<TextProvider> summarizer_;
    std::unique_ptr<SummaryCache> cache_;
    std::vector<std::unique_ptr<ExternalScorer>> scorers_;

    mutable std::mutex state_mutex_;
    std::shared_ptr<const ServiceState> state_;
    std::mutex rebuild_mutex_;
};

// HTTP status for a library error kind.
int http_status(ErrorKind kind);

void install_routes(httplib::Server& server, RcaService& service);

/// Blocks serving the four endpoints until the process is stopped.
void serve(RcaService& service, const std::string& host, int port);

/// Entry point of the `rca` tool. Exit codes: 0 ok, 1 runtime error, 2 usage.
int cli_dispatch(int argc, char** argv);

}  // namespace rca
