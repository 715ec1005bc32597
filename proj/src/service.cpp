#include "rca/service.hpp"

#include <filesystem>
#include <sstream>

#include <httplib.h>

#include "rca/cleanse.hpp"
#include "rca/generate.hpp"
#include "rca/pipeline.hpp"
#include "rca/retrieve.hpp"
#include "rca/util.hpp"

namespace rca {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).string();
}

ProviderSpec provider_from_json(const json& j, ProviderSpec spec) {
    if (j.contains("kind")) spec.kind = j.at("kind").get<std::string>();
    if (j.contains("sentences")) spec.sentences = j.at("sentences").get<std::size_t>();
    if (j.contains("endpoint")) spec.remote.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model")) spec.remote.model_id = j.at("model").get<std::string>();
    if (j.contains("shape")) {
        const auto shape = j.at("shape").get<std::string>();
        if (shape == "chat") spec.remote.shape = RequestShape::Chat;
        else if (shape == "completion") spec.remote.shape = RequestShape::Completion;
        else fail(ErrorKind::InvalidArgument, "unknown request shape '" + shape + "'");
    }
    if (j.contains("system_message")) spec.remote.system_message = j.at("system_message").get<std::string>();
    if (j.contains("max_retries")) spec.remote.retry.max_retries = j.at("max_retries").get<int>();
    if (j.contains("timeout_seconds"))
        spec.remote.retry.timeout = std::chrono::seconds(j.at("timeout_seconds").get<int>());
    if (j.contains("api_key")) spec.remote.api_key = j.at("api_key").get<std::string>();
    if (spec.kind != "mock" && spec.kind != "extractive" && spec.kind != "remote")
        fail(ErrorKind::InvalidArgument, "unknown provider kind '" + spec.kind + "'");
    if (spec.kind == "remote" && spec.remote.endpoint.empty())
        fail(ErrorKind::InvalidArgument, "remote provider needs an endpoint");
    return spec;
}

json provider_to_json(const ProviderSpec& spec) {
    json j{{"kind", spec.kind}};
    if (spec.kind == "extractive") j["sentences"] = spec.sentences;
    if (spec.kind == "remote") {
        j["endpoint"] = spec.remote.endpoint;
        j["model"] = spec.remote.model_id;
        j["shape"] = spec.remote.shape == RequestShape::Chat ? "chat" : "completion";
    }
    return j;
}

std::size_t read_k(const json& payload, std::size_t fallback) {
    if (!payload.contains("k")) return fallback;
    const auto& k = payload.at("k");
    if (!k.is_number_integer() || k.get<long long>() < 0)
        fail(ErrorKind::InvalidArgument, "k must be a non-negative integer");
    return k.get<std::size_t>();
}

}  // namespace

AppConfig AppConfig::from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object()) fail(ErrorKind::Format, "config must be a JSON object");
    AppConfig c;
    try {
        if (j.contains("corpus")) c.corpus_path = resolve_path(j.at("corpus").get<std::string>(), base_dir);
        if (j.contains("index")) c.index_path = resolve_path(j.at("index").get<std::string>(), base_dir);
        if (j.contains("summary_cache"))
            c.summary_cache_path = resolve_path(j.at("summary_cache").get<std::string>(), base_dir);
        if (j.contains("embedder")) {
            const auto& e = j.at("embedder");
            if (e.contains("mode")) {
                const auto mode = e.at("mode").get<std::string>();
                if (mode == "local-hash") c.embedder.mode = EmbedderMode::LocalHash;
                else if (mode == "remote") c.embedder.mode = EmbedderMode::Remote;
                else fail(ErrorKind::InvalidArgument, "unknown embedder mode '" + mode + "'");
            }
            if (e.contains("dimension")) c.embedder.dimension = e.at("dimension").get<std::size_t>();
            if (e.contains("seed")) c.embedder.seed = e.at("seed").get<std::uint64_t>();
            if (e.contains("endpoint")) c.embedder.endpoint = e.at("endpoint").get<std::string>();
            if (e.contains("api_key")) c.embedder.api_key = e.at("api_key").get<std::string>();
        }
        if (j.contains("summarizer")) c.summarizer = provider_from_json(j.at("summarizer"), c.summarizer);
        if (j.contains("generator")) c.generator = provider_from_json(j.at("generator"), c.generator);
        if (j.contains("budget")) {
            const auto& b = j.at("budget");
            if (b.contains("prompt_limit")) c.budget.prompt_limit = b.at("prompt_limit").get<std::size_t>();
            if (b.contains("completion_reserve"))
                c.budget.completion_reserve = b.at("completion_reserve").get<std::size_t>();
            if (b.contains("counter")) {
                auto id = b.at("counter").get<std::string>();
                if (id.rfind("table:", 0) == 0) id = "table:" + resolve_path(id.substr(6), base_dir);
                c.budget.counter = TokenCounter::from_id(id);
            }
        }
        if (j.contains("retrieval")) {
            const auto& r = j.at("retrieval");
            if (r.contains("k")) c.k = r.at("k").get<std::size_t>();
            if (r.contains("ordering")) c.ordering = OrderingMode::parse(r.at("ordering").get<std::string>());
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("external_scorers"))
            for (const auto& s : j.at("external_scorers"))
                c.external_scorers.push_back({s.at("name").get<std::string>(), s.at("endpoint").get<std::string>()});
        if (j.contains("server")) {
            const auto& s = j.at("server");
            if (s.contains("host")) c.host = s.at("host").get<std::string>();
            if (s.contains("port")) c.port = s.at("port").get<int>();
        }
        if (j.contains("concurrency")) c.concurrency = j.at("concurrency").get<int>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("bad config: ") + e.what());
    }
    if (c.ordering.kind == OrderingMode::Kind::Shuffled && c.ordering.seed == 0) c.ordering.seed = c.seed;
    c.embedder.api_key = resolve_api_key(c.embedder.api_key);
    c.summarizer.remote.api_key = resolve_api_key(c.summarizer.remote.api_key);
    c.generator.remote.api_key = resolve_api_key(c.generator.remote.api_key);
    c.embedder.validate();
    c.budget.validate();
    if (c.concurrency < 1) fail(ErrorKind::InvalidArgument, "concurrency must be >= 1");
    return c;
}

AppConfig AppConfig::load(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, "config " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j, fs::path(path).parent_path().string());
}

json AppConfig::to_json() const {
    json scorers = json::array();
    for (const auto& s : external_scorers) scorers.push_back({{"name", s.name}, {"endpoint", s.endpoint}});
    json emb{{"mode", embedder.mode == EmbedderMode::Remote ? "remote" : "local-hash"},
             {"dimension", embedder.dimension},
             {"seed", embedder.seed}};
    if (embedder.endpoint) emb["endpoint"] = *embedder.endpoint;
    return json{{"corpus", corpus_path},
                {"index", index_path},
                {"summary_cache", summary_cache_path},
                {"embedder", emb},
                {"summarizer", provider_to_json(summarizer)},
                {"generator", provider_to_json(generator)},
                {"budget",
                 {{"prompt_limit", budget.prompt_limit},
                  {"completion_reserve", budget.completion_reserve},
                  {"counter", budget.counter.id()}}},
                {"retrieval", {{"k", k}, {"ordering", ordering.label()}}},
                {"seed", seed},
                {"external_scorers", scorers},
                {"server", {{"host", host}, {"port", port}}},
                {"concurrency", concurrency}};
}

std::unique_ptr<TextProvider> make_provider(const ProviderSpec& spec, const std::vector<Incident>& corpus) {
    if (spec.kind == "mock") return std::make_unique<MockGenerator>(corpus);
    if (spec.kind == "extractive") return std::make_unique<ExtractiveSummaryProvider>(spec.sentences);
    if (spec.kind == "remote") return std::make_unique<RemoteProvider>(spec.remote);
    fail(ErrorKind::InvalidArgument, "unknown provider kind '" + spec.kind + "'");
}

Incident incident_from_payload(const json& payload) {
    if (!payload.is_object()) fail(ErrorKind::InvalidArgument, "incident payload must be a JSON object");
    auto text_field = [&](const char* key, bool required) -> std::string {
        if (!payload.contains(key)) {
            if (required) fail(ErrorKind::InvalidArgument, std::string("missing field '") + key + "'");
            return {};
        }
        const auto& v = payload.at(key);
        if (!v.is_string()) fail(ErrorKind::InvalidArgument, std::string("field '") + key + "' must be a string");
        auto s = v.get<std::string>();
        if (required && trim(s).empty())
            fail(ErrorKind::InvalidArgument, std::string("field '") + key + "' is empty");
        return s;
    };
    Incident inc;
    inc.id = text_field("id", false);
    if (inc.id.empty()) inc.id = "query";
    inc.title = text_field("title", true);
    inc.summary_raw = text_field("summary", true);
    inc.root_cause_raw = text_field("root_cause", false);
    if (payload.contains("severity")) {
        if (!payload.at("severity").is_number_integer())
            fail(ErrorKind::InvalidArgument, "severity must be an integer");
        inc.severity = payload.at("severity").get<int>();
    }
    if (payload.contains("status")) inc.status = parse_status(text_field("status", false));
    if (payload.contains("created_at")) {
        try {
            inc.created_at = parse_rfc3339(text_field("created_at", false));
        } catch (const Error& e) {
            fail(ErrorKind::InvalidArgument, e.what());
        }
    }
    if (payload.contains("owning_service")) inc.owning_service = text_field("owning_service", false);
    return inc;
}

// ---- service -------------------------------------------------------------

RcaService::RcaService(AppConfig config) : config_(std::move(config)), embedder_(config_.embedder) {
    summarizer_ = make_provider(config_.summarizer, {});
    cache_ = config_.summary_cache_path.empty() ? std::make_unique<SummaryCache>()
                                                : std::make_unique<SummaryCache>(config_.summary_cache_path);
    for (const auto& s : config_.external_scorers)
        scorers_.push_back(std::make_unique<HttpExternalScorer>(s.name, s.endpoint));
    state_ = make_state({}, std::nullopt);
}

std::shared_ptr<const ServiceState> RcaService::make_state(std::vector<Incident> corpus,
                                                           std::optional<AnyIndex> index) const {
    auto state = std::make_shared<ServiceState>();
    state->corpus = std::move(corpus);
    state->lookup = make_lookup(state->corpus);
    if (index) {
        if (index_dimension(*index) != embedder_.dimension())
            fail(ErrorKind::Conflict, "index dimension does not match the embedder");
        const auto& ids = std::visit([](const auto& ix) -> const std::vector<std::string>& { return ix.ids(); }, *index);
        for (const auto& id : ids)
            if (!state->lookup.count(id)) fail(ErrorKind::Conflict, "index entry " + id + " is not in the corpus");
    }
    state->index = std::move(index);
    state->generator = make_provider(config_.generator, state->corpus);
    return state;
}

std::shared_ptr<const ServiceState> RcaService::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return state_;
}

void RcaService::load() {
    std::vector<Incident> corpus;
    if (!config_.corpus_path.empty() && fs::exists(config_.corpus_path))
        corpus = load_incidents(config_.corpus_path).incidents;
    std::optional<AnyIndex> index;
    if (!config_.index_path.empty() && fs::exists(config_.index_path)) index = load_index(config_.index_path);
    auto next = make_state(std::move(corpus), std::move(index));
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
}

std::size_t RcaService::rebuild_index(const std::optional<std::string>& corpus_path, bool save) {
    std::lock_guard rebuild(rebuild_mutex_);
    std::vector<Incident> corpus;
    if (corpus_path) {
        corpus = load_incidents(*corpus_path).incidents;
    } else {
        corpus = snapshot()->corpus;
    }
    if (corpus.empty()) fail(ErrorKind::InvalidArgument, "cannot build an index from an empty corpus");
    AnyIndex index = build_incident_index(corpus, embedder_, config_.concurrency);
    if (save) {
        if (config_.index_path.empty()) fail(ErrorKind::InvalidArgument, "no index path configured");
        save_index(index, config_.index_path);
    }
    const auto n = index_size(index);
    auto next = make_state(std::move(corpus), std::move(index));
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
    return n;
}

EmbeddingVector RcaService::embed_incident(const Incident& incident) const {
    return embedder_.embed(build_query_text(incident));
}

Incident RcaService::prepare_query(const json& payload) {
    Incident inc = clean_incident(incident_from_payload(payload));
    inc.summary_short = summarize_field(*summarizer_, SummaryKind::IncidentSummary, *inc.summary_clean, *cache_);
    return inc;
}

json RcaService::hits_json(const std::vector<SearchHit>& hits) {
    json out = json::array();
    for (const auto& h : hits) out.push_back({{"id", h.id}, {"distance", h.distance}, {"relevance", h.relevance}});
    return out;
}

json RcaService::rca(const json& payload) {
    const auto k = read_k(payload, config_.k);
    auto ordering = config_.ordering;
    if (payload.contains("ordering")) {
        if (!payload.at("ordering").is_string()) fail(ErrorKind::InvalidArgument, "ordering must be a string");
        ordering = OrderingMode::parse(payload.at("ordering").get<std::string>(), config_.seed);
    }
    const auto state = snapshot();
    if (!state->index) fail(ErrorKind::Conflict, "no index loaded");
    const Incident inc = prepare_query(payload);

    std::vector<InContextExample> examples;
    if (k > 0) {
        const auto query = embed_incident(inc);
        examples = retrieve_examples(*state->index, state->lookup, inc.id, query.values,
                                     std::min(k, index_size(*state->index)), SelectionMode::Relevant, config_.seed);
        examples = order_examples(std::move(examples), ordering);
    }
    const auto prompt = assemble_rca_prompt(examples, inc, config_.budget);
    GenerationConfig gen;
    const auto suggestion = generate_root_cause(*state->generator, prompt, gen);

    json used = json::array();
    for (const auto& id : prompt.examples_used) {
        double relevance = 0.0;
        for (const auto& e : examples)
            if (e.incident_id == id) relevance = e.relevance;
        used.push_back({{"id", id}, {"relevance", relevance}});
    }
    return json{{"incident_id", inc.id},
                {"suggestion", suggestion.text},
                {"examples_used", used},
                {"prompt_tokens", prompt.token_count},
                {"prompt_limit", config_.budget.prompt_limit},
                {"completion_reserve", config_.budget.completion_reserve},
                {"truncated", prompt.truncated},
                {"ordering", ordering.label()},
                {"provider_id", suggestion.provider_id}};
}

json RcaService::similar_by_id(const std::string& id, std::size_t k) {
    const auto state = snapshot();
    if (!state->index) fail(ErrorKind::Conflict, "no index loaded");
    const auto it = state->lookup.find(id);
    if (it == state->lookup.end()) fail(ErrorKind::NotFound, "unknown incident " + id);
    if (k == 0) return json::array();
    const auto query = embed_incident(*it->second);
    auto hits = search(*state->index, query.values, k + 1);
    std::erase_if(hits, [&](const SearchHit& h) { return h.id == id; });
    if (hits.size() > k) hits.resize(k);
    return hits_json(hits);
}

json RcaService::similar_to_payload(const json& payload, std::size_t k) {
    const auto state = snapshot();
    if (!state->index) fail(ErrorKind::Conflict, "no index loaded");
    if (k == 0) return json::array();
    const Incident inc = prepare_query(payload);
    const auto query = embed_incident(inc);
    auto hits = search(*state->index, query.values, k + 1);
    std::erase_if(hits, [&](const SearchHit& h) { return h.id == inc.id; });
    if (hits.size() > k) hits.resize(k);
    return hits_json(hits);
}

json RcaService::evaluate_ndjson(const std::string& body) {
    std::vector<TextPair> pairs;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(body)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            fail(ErrorKind::InvalidArgument, "line " + std::to_string(line_no) + " is not JSON");
        }
        if (!j.is_object() || !j.contains("candidate") || !j.contains("reference") ||
            !j.at("candidate").is_string() || !j.at("reference").is_string())
            fail(ErrorKind::InvalidArgument, "line " + std::to_string(line_no) + " needs candidate and reference strings");
        pairs.push_back({j.at("candidate").get<std::string>(), j.at("reference").get<std::string>()});
    }
    MetricReport report = evaluate_corpus(pairs, kernels::Exec::Parallel, nullptr);
    for (const auto& scorer : scorers_) {
        const auto scores = scorer->score(pairs);
        if (scores.size() != pairs.size()) fail(ErrorKind::Provider, scorer->name() + " returned the wrong count");
        double sum = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            report.per_pair[i].push_back(scores[i]);
            sum += scores[i];
        }
        report.names.push_back(scorer->name());
        report.means.push_back(sum / static_cast<double>(pairs.size()));
    }
    json means = json::object();
    for (std::size_t m = 0; m < report.names.size(); ++m) means[report.names[m]] = report.means[m];
    return json{{"n", report.n}, {"metrics", report.names}, {"means", means}, {"per_pair", report.per_pair}};
}

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::Format:
        case ErrorKind::Budget: return 422;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict: return 409;
        case ErrorKind::Provider: return 503;
        case ErrorKind::Io: return 500;
    }
    return 500;
}

namespace {

template <class F>
void respond(httplib::Response& res, F&& handler) {
    try {
        const json body = handler();
        res.status = 200;
        res.set_content(body.dump(), "application/json");
    } catch (const Error& e) {
        res.status = http_status(e.kind());
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const json::exception& e) {
        res.status = 422;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::exception&) {
        fail(ErrorKind::InvalidArgument, "request body is not JSON");
    }
}

std::size_t query_k(const httplib::Request& req, std::size_t fallback) {
    if (!req.has_param("k")) return fallback;
    const auto text = req.get_param_value("k");
    std::size_t k = 0;
    if (text.empty() || text.size() > 9 || text.find_first_not_of("0123456789") != std::string::npos)
        fail(ErrorKind::InvalidArgument, "k must be a non-negative integer");
    k = std::stoul(text);
    return k;
}

}  // namespace

void install_routes(httplib::Server& server, RcaService& service) {
    server.Post("/v1/rca", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] { return service.rca(parse_body(req)); });
    });
    server.Get(R"(/v1/incidents/([^/]+)/similar)", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] {
            const auto k = query_k(req, service.config().k);
            return json{{"hits", service.similar_by_id(req.matches[1].str(), k)}};
        });
    });
    server.Post("/v1/evaluate", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] { return service.evaluate_ndjson(req.body); });
    });
    server.Post("/v1/index/build", [&](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] {
            std::optional<std::string> corpus;
            bool save = false;
            if (!trim(req.body).empty()) {
                const auto body = parse_body(req);
                if (body.contains("corpus")) corpus = body.at("corpus").get<std::string>();
                if (body.contains("save")) save = body.at("save").get<bool>();
            }
            return json{{"size", service.rebuild_index(corpus, save)}};
        });
    });
}

void serve(RcaService& service, const std::string& host, int port) {
    httplib::Server server;
    install_routes(server, service);
    if (!server.listen(host, port)) fail(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace rca
