#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "http_helpers.hpp"
#include "rca/generate.hpp"
#include "rca/pipeline.hpp"
#include "rca/service.hpp"
#include "rca/synth.hpp"

using namespace rca;
using nlohmann::json;
using testing::error_kind;

namespace {

// Summarized synthetic corpus written to disk once per process.
struct ServiceFiles {
    testing::TempDir dir{"service"};
    std::string corpus = dir.file("corpus.jsonl");
    std::string config = dir.file("config.json");

    ServiceFiles() {
        synth::SynthConfig sc;
        sc.incidents = 40;
        sc.families = 10;
        ExtractiveSummaryProvider summarizer;
        SummaryCache cache;
        PrepareOptions opts;
        opts.sizes = {40, 0, 0};
        save_incidents(corpus, prepare_corpus(synth::generate_incidents(sc), opts, summarizer, cache).splits.retrieval);
        write_file(config, json{{"corpus", "corpus.jsonl"}, {"index", "corpus.idx"}, {"retrieval", {{"k", 20}}}}.dump());
    }
};

ServiceFiles& files() {
    static ServiceFiles f;
    return f;
}

json payload(std::string title = "Checkout API returns 500") {
    return json{{"title", std::move(title)},
                {"summary", "Payment requests fail with timeouts against the database connection pool."}};
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rca");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config loading resolves relative paths and validates") {
    const auto cfg = AppConfig::load(files().config);
    CHECK(cfg.corpus_path == files().corpus);
    CHECK(cfg.k == 20);
    CHECK(cfg.generator.kind == "mock");
    CHECK(AppConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
    CHECK(error_kind([] { AppConfig::from_json(json{{"concurrency", 0}}); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([] { AppConfig::from_json(json{{"seed", "x"}}); }) == ErrorKind::Format);
    CHECK(error_kind([] { AppConfig::from_json(json::array()); }) == ErrorKind::Format);
}

TEST_CASE("incident payload validation") {
    CHECK(incident_from_payload(payload()).id == "query");
    CHECK(error_kind([] { incident_from_payload(json{{"summary", "s"}}); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([] { incident_from_payload(json{{"title", ""}, {"summary", "s"}}); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([] { incident_from_payload(json{{"title", 3}, {"summary", "s"}}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("http status mapping") {
    CHECK(http_status(ErrorKind::InvalidArgument) == 422);
    CHECK(http_status(ErrorKind::Format) == 422);
    CHECK(http_status(ErrorKind::Budget) == 422);
    CHECK(http_status(ErrorKind::NotFound) == 404);
    CHECK(http_status(ErrorKind::Conflict) == 409);
    CHECK(http_status(ErrorKind::Provider) == 503);
    CHECK(http_status(ErrorKind::Io) == 500);
}

TEST_CASE("service handlers") {
    RcaService service(AppConfig::load(files().config));
    service.load();
    CHECK(error_kind([&] { service.rca(payload()); }) == ErrorKind::Conflict);
    CHECK(service.rebuild_index(std::nullopt, false) == 40);

    const auto full = service.rca(payload());
    CHECK(full.at("examples_used").size() == 20);
    CHECK(full.at("suggestion").get<std::string>() != std::string(kUnknownRootCause));
    CHECK(full.at("prompt_tokens").get<std::size_t>() <= 8192 - 200);
    CHECK(full.at("ordering") == "descending");
    const auto& used = full.at("examples_used");
    for (std::size_t i = 1; i < used.size(); ++i)
        CHECK(used[i - 1].at("relevance").get<double>() >= used[i].at("relevance").get<double>());

    auto zero = payload();
    zero["k"] = 0;
    const auto z = service.rca(zero);
    CHECK(z.at("examples_used").empty());
    CHECK(z.at("suggestion") == std::string(kUnknownRootCause));

    auto asc = payload();
    asc["k"] = 3;
    asc["ordering"] = "ascending";
    const auto a = service.rca(asc);
    CHECK(a.at("examples_used").size() == 3);
    CHECK(a.at("examples_used")[0].at("relevance").get<double>() <= a.at("examples_used")[2].at("relevance").get<double>());

    auto neg = payload();
    neg["k"] = -1;
    CHECK(error_kind([&] { service.rca(neg); }) == ErrorKind::InvalidArgument);

    const auto id = service.snapshot()->corpus.at(0).id;
    const auto hits = service.similar_by_id(id, 5);
    REQUIRE(hits.size() == 5);
    for (const auto& h : hits) CHECK(h.at("id") != id);
    for (std::size_t i = 1; i < hits.size(); ++i)
        CHECK(hits[i - 1].at("relevance").get<double>() >= hits[i].at("relevance").get<double>());
    CHECK(service.similar_by_id(id, 0).empty());
    CHECK(error_kind([&] { service.similar_by_id("INC-NOPE", 5); }) == ErrorKind::NotFound);
    CHECK(service.similar_to_payload(payload(), 4).size() == 4);

    const auto eval = service.evaluate_ndjson("{\"candidate\":\"a b\",\"reference\":\"a b\"}\n\n"
                                              "{\"candidate\":\"c\",\"reference\":\"d\"}\n");
    CHECK(eval.dump().find("ROUGE-L") != std::string::npos);
    CHECK(error_kind([&] { service.evaluate_ndjson("{\"candidate\":1}"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("http endpoints") {
    RcaService service(AppConfig::load(files().config));
    service.load();
    testing::LocalServer server([&](httplib::Server& s) { install_routes(s, service); });
    httplib::Client client("127.0.0.1", server.port());

    auto res = client.Post("/v1/rca", payload().dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);

    res = client.Post("/v1/index/build", "", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("size") == 40);

    res = client.Post("/v1/index/build", R"({"save": "yes"})", "application/json");
    CHECK(res->status == 422);

    res = client.Post("/v1/rca", payload().dump(), "application/json");
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("examples_used").size() == 20);

    res = client.Post("/v1/rca", json{{"summary", "no title"}}.dump(), "application/json");
    CHECK(res->status == 422);
    res = client.Post("/v1/rca", "{broken", "application/json");
    CHECK(res->status == 422);

    const auto id = service.snapshot()->corpus.at(0).id;
    res = client.Get("/v1/incidents/" + id + "/similar?k=5");
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("hits").size() == 5);
    res = client.Get("/v1/incidents/" + id + "/similar?k=0");
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("hits").empty());
    res = client.Get("/v1/incidents/INC-NOPE/similar?k=5");
    CHECK(res->status == 404);
    res = client.Get("/v1/incidents/" + id + "/similar?k=abc");
    CHECK(res->status == 422);

    res = client.Post("/v1/evaluate", "{\"candidate\":\"a\",\"reference\":\"a\"}\n", "application/x-ndjson");
    CHECK(res->status == 200);
    res = client.Post("/v1/evaluate", "", "application/x-ndjson");
    CHECK(res->status == 422);
}

TEST_CASE("cli exit codes") {
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"query"}) == 2);                             // missing required option
    CHECK(run_cli({"ingest", "-i", "/nonexistent.jsonl", "-o", "/tmp/x.jsonl"}) == 1);
    CHECK(run_cli({"report", "--run", "/nonexistent.json"}) == 1);
}

TEST_CASE("cli pipeline end to end") {
    testing::TempDir dir("cli");
    const auto f = [&](const char* name) { return dir.file(name); };
    REQUIRE(run_cli({"synth", "-o", f("raw.jsonl"), "--count", "60", "--families", "10"}) == 0);
    REQUIRE(run_cli({"ingest", "-i", f("raw.jsonl"), "-o", f("kept.jsonl")}) == 0);
    REQUIRE(run_cli({"clean", "-i", f("kept.jsonl"), "-o", f("clean.jsonl")}) == 0);
    REQUIRE(run_cli({"summarize", "-i", f("clean.jsonl"), "-o", f("short.jsonl"), "--cache", f("cache.jsonl")}) == 0);
    CHECK(load_incidents(f("short.jsonl")).incidents.size() == 60);
    REQUIRE(run_cli({"index-build", "-i", f("short.jsonl"), "-o", f("idx.bin")}) == 0);
    REQUIRE(run_cli({"index-build", "-i", f("short.jsonl"), "-o", f("qidx.bin"), "--quantized"}) == 0);
    CHECK(std::holds_alternative<QuantizedIndex>(load_index(f("qidx.bin"))));
    write_file(f("incident.json"), payload().dump());
    CHECK(run_cli({"query", "--incident", f("incident.json"), "-k", "5", "--corpus", f("short.jsonl"), "--index",
                   f("idx.bin")}) == 0);
    CHECK(run_cli({"generate", "--incident", f("incident.json"), "-k", "3", "--corpus", f("short.jsonl"), "--index",
                   f("idx.bin")}) == 0);
    write_file(f("pairs.jsonl"), "{\"candidate\":\"a b\",\"reference\":\"a b c\"}\n");
    CHECK(run_cli({"evaluate", "--pairs", f("pairs.jsonl"), "-o", f("eval.json")}) == 0);
    REQUIRE(run_cli({"experiment-run", "--design", "kshot", "--k", "0,5,10", "-i", f("short.jsonl"), "--split",
                     "40,5,15", "--out-dir", f("run")}) == 0);
    CHECK(std::filesystem::exists(f("run/manifest.json")));
    CHECK(run_cli({"report", "--run", f("run/run.json"), "--format", "csv", "-o", f("report.csv")}) == 0);
    CHECK(read_file(f("report.csv")) == read_file(f("run/report.csv")));
    CHECK(run_cli({"report", "--run", f("run/run.json"), "--format", "xml"}) == 1);
    CHECK(run_cli({"experiment-run", "--design", "nope", "-i", f("short.jsonl"), "--split", "40,5,15", "--out-dir",
                   f("run2")}) == 1);
}
