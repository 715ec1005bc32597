#include <doctest.h>

#include <atomic>

#include "helpers.hpp"
#include "rca/experiment.hpp"
#include "rca/generate.hpp"
#include "rca/pipeline.hpp"
#include "rca/synth.hpp"

using namespace rca;
using nlohmann::json;
using testing::error_kind;

namespace {

struct Fixture {
    PreparedCorpus prepared;
    Embedder embedder{EmbedderConfig{}};
    AnyIndex index;
    MockGenerator generator;

    Fixture() : prepared(prepare()), index(build_incident_index(prepared.splits.retrieval, embedder)),
                generator(prepared.splits.retrieval) {}

    static PreparedCorpus prepare() {
        synth::SynthConfig sc;
        sc.incidents = 60;
        sc.families = 10;
        ExtractiveSummaryProvider summarizer;
        SummaryCache cache;
        PrepareOptions opts;
        opts.sizes = {40, 5, 15};
        return prepare_corpus(synth::generate_incidents(sc), opts, summarizer, cache);
    }

    ExperimentContext context(TextProvider* gen = nullptr) {
        ExperimentContext ctx;
        ctx.splits = &prepared.splits;
        ctx.index = &index;
        ctx.embedder = &embedder;
        ctx.generator = gen ? gen : &generator;
        ctx.corpus_hash = corpus_fingerprint(prepared.splits);
        return ctx;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

// Succeeds `ok` times, then reports the provider as unavailable.
class FailingAfter final : public TextProvider {
public:
    FailingAfter(TextProvider& inner, int ok) : inner_(inner), ok_(ok) {}
    std::string id() const override { return "failing"; }
    std::string complete(const CompletionRequest& r) override {
        if (calls_++ >= ok_) fail(ErrorKind::Provider, "provider down");
        return inner_.complete(r);
    }

private:
    TextProvider& inner_;
    int ok_;
    std::atomic<int> calls_{0};
};

class ConstantScorer final : public ExternalScorer {
public:
    std::string name() const override { return "BERTScore"; }
    std::vector<double> score(const std::vector<TextPair>& pairs) override {
        return std::vector<double>(pairs.size(), 85.0);
    }
};

}  // namespace

TEST_CASE("prepare_corpus produces summarized splits") {
    const auto& p = fixture().prepared;
    CHECK(p.splits.retrieval.size() == 40);
    CHECK(p.splits.test.size() == 15);
    CHECK(p.clean.chars_after <= p.clean.chars_before);
    for (const auto& inc : p.splits.retrieval) {
        CHECK(inc.summary_short);
        CHECK(inc.root_cause_short);
        CHECK(inc.summary_clean->find("base64") == std::string::npos);
    }
    CHECK(corpus_fingerprint(p.splits).size() == 16);
}

TEST_CASE("design names") {
    for (auto d : {Design::KShotSweep, Design::FullPrompt, Design::SelectionStudy, Design::OrderingStudy,
                   Design::ChunkedBaseline})
        CHECK(parse_design(design_name(d)) == d);
    CHECK(error_kind([] { parse_design("bogus"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("experiment config validation and JSON round trip") {
    ExperimentConfig c;
    c.design = Design::OrderingStudy;
    c.k = 7;
    c.seed = 99;
    c.significance = SignificanceMethod::PairedBootstrap;
    const auto back = experiment_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    ExperimentConfig bad;
    bad.k_values.clear();
    CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::InvalidArgument);
    ExperimentConfig bad_budget;
    bad_budget.budget.completion_reserve = bad_budget.budget.prompt_limit;
    CHECK(error_kind([&] { bad_budget.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("k-shot sweep: six rows, comparisons against k=0, deterministic") {
    auto& f = fixture();
    ExperimentConfig c;
    const auto a = run_experiment(c, f.context());
    REQUIRE(a.rows.size() == 6);
    CHECK(a.rows[0].label == "k=0");
    CHECK(a.rows[5].label == "k=40");
    CHECK(a.comparisons.size() == 5);
    CHECK(a.comparisons[0].baseline == "k=0");
    CHECK(a.row("k=0").means[0].value() == 0.0);  // mock says "Root cause unknown."
    CHECK(a.row("k=20").means[0].value() > 50.0);
    for (const auto& row : a.rows) CHECK(row.pairs.size() == 15);
    CHECK(a.row("k=5").pairs[0].examples_used == 5);
    CHECK(a.provenance.eval_size == 15);
    CHECK(a.provenance.index_size == 40);
    c.concurrency = 4;
    const auto b = run_experiment(c, f.context());
    CHECK(a.rows == b.rows);
    CHECK(a.comparisons == b.comparisons);
}

TEST_CASE("selection and ordering designs") {
    auto& f = fixture();
    ExperimentConfig c;
    c.design = Design::SelectionStudy;
    c.k = 5;
    const auto sel = run_experiment(c, f.context());
    REQUIRE(sel.rows.size() == 3);
    CHECK(sel.rows[1].label == "relevant");
    CHECK(sel.rows[2].label == "random");
    CHECK(sel.comparisons.size() == 3);
    CHECK(*sel.row("relevant").means[0] > *sel.row("random").means[0]);

    c.design = Design::OrderingStudy;
    const auto ord = run_experiment(c, f.context());
    REQUIRE(ord.rows.size() == 3);
    CHECK(ord.rows[0].label == "descending");
    CHECK(ord.rows[1].label == "ascending");
    CHECK(ord.rows[2].label == "shuffled");
    REQUIRE(ord.ordering);
    CHECK(ord.ordering->spread >= 0.0);
    CHECK_FALSE(sel.ordering);
}

TEST_CASE("full-prompt and chunked designs") {
    auto& f = fixture();
    ExperimentConfig c;
    c.design = Design::FullPrompt;
    c.prompt_limits = {512, 2048};
    c.full_prompt_pool = 30;
    const auto full = run_experiment(c, f.context());
    REQUIRE(full.rows.size() == 3);
    CHECK(full.rows[1].label == "full-512");
    for (std::size_t i = 0; i < 15; ++i) {
        CHECK(full.rows[2].pairs[i].examples_used >= full.rows[1].pairs[i].examples_used);
        CHECK(full.rows[1].pairs[i].prompt_tokens <= 512 - 200);
    }

    c.design = Design::ChunkedBaseline;
    c.chunk_counts = {2, 4};
    c.k = 3;
    const auto chunked = run_experiment(c, f.context());
    REQUIRE(chunked.rows.size() == 3);
    CHECK(chunked.rows[0].label == "chunked m=2");
    CHECK(chunked.rows[2].label == "icl k=3");
    CHECK(chunked.comparisons.size() == 2);
}

TEST_CASE("provider failure aborts only its condition") {
    auto& f = fixture();
    FailingAfter gen(f.generator, 15 + 4);  // k=0 fully, k=5 fails on its fifth incident
    ExperimentConfig c;
    c.k_values = {0, 5};
    const auto r = run_experiment(c, f.context(&gen));
    CHECK_FALSE(r.rows[0].aborted);
    CHECK(r.rows[0].pairs.size() == 15);
    CHECK(r.rows[1].aborted);
    CHECK(r.rows[1].pairs.size() == 4);
    CHECK(r.rows[1].failed == 11);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].condition == "k=5");
    CHECK(r.comparisons[0].n == 4);
    CHECK_FALSE(r.comparisons[0].p_value);  // fewer than 5 shared pairs
}

TEST_CASE("external scorers add columns") {
    auto& f = fixture();
    ConstantScorer scorer;
    auto ctx = f.context();
    ctx.external.push_back(&scorer);
    ExperimentConfig c;
    c.k_values = {0, 5};
    const auto r = run_experiment(c, ctx);
    REQUIRE(r.metric_names.size() == 5);
    CHECK(r.metric_names[4] == "BERTScore");
    CHECK(*r.rows[1].means[4] == 85.0);
    const auto csv = format_report(r, "csv");
    CHECK(csv.find("85.0000") != std::string::npos);
}

TEST_CASE("reports: csv shape, json round trip, unknown format") {
    auto& f = fixture();
    const auto r = run_experiment(ExperimentConfig{}, f.context());
    const auto csv = format_report(r, "csv");
    const auto lines = split_lines(csv);
    std::size_t non_empty = 0;
    for (const auto& l : lines) non_empty += !trim(l).empty();
    CHECK(non_empty == 7);
    CHECK(lines[0] == "condition,ROUGE-L,ROUGE-1,METEOR,GLEU,BERTScore,Nubia");
    CHECK(lines[1].rfind("k=0,0.0000,", 0) == 0);

    const auto back = run_result_from_json(json::parse(format_report(r, "json")));
    CHECK(back == r);
    CHECK(error_kind([&] { format_report(r, "xml"); }) == ErrorKind::InvalidArgument);

    testing::TempDir dir("report");
    emit_report(r, "csv", dir.file("r.csv"));
    CHECK(read_file(dir.file("r.csv")) == csv);
    const auto manifest = run_manifest(r);
    CHECK(manifest.at("corpus_hash") == r.provenance.corpus_hash);
}

TEST_CASE("missing context pieces are rejected") {
    ExperimentContext empty;
    CHECK(error_kind([&] { run_experiment(ExperimentConfig{}, empty); }) == ErrorKind::InvalidArgument);
}
