// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "../oracles/oracles.hpp"
#include "rca/cleanse.hpp"
#include "rca/experiment.hpp"
#include "rca/generate.hpp"
#include "rca/index.hpp"
#include "rca/metrics.hpp"
#include "rca/pipeline.hpp"
#include "rca/prompt.hpp"
#include "rca/stats.hpp"
#include "rca/summarize.hpp"
#include "rca/synth.hpp"
#include "rca/util.hpp"

#ifndef RCA_FIXTURE_DIR
#define RCA_FIXTURE_DIR "tests/fixtures"
#endif
#ifndef RCA_DATA_DIR
#define RCA_DATA_DIR "data"
#endif

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int number, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (limit_seconds > 0 && secs > limit_seconds) {
        o.pass = false;
        o.detail += " (over the " + std::to_string(static_cast<int>(limit_seconds)) + " s limit)";
    }
    if (!o.pass) ++failures;
    std::printf("%s  %d  %-34s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", number, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<float> random_unit(rca::Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        // Sum of uniforms: close enough to isotropic for this purpose.
        double s = 0.0;
        for (int i = 0; i < 4; ++i) s += rng.uniform() - 0.5;
        x = static_cast<float>(s);
        norm += s * s;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
    return v;
}

// ---- 1 -------------------------------------------------------------------

Outcome metric_oracles() {
    std::vector<rca::TextPair> pairs;
    for (const auto& line : rca::split_lines(rca::read_file(RCA_FIXTURE_DIR "/metric_pairs.jsonl"))) {
        if (rca::trim(line).empty()) continue;
        const auto j = json::parse(line);
        pairs.push_back({j.at("candidate").get<std::string>(), j.at("reference").get<std::string>()});
    }
    double worst = 0.0;
    for (const auto& p : pairs) {
        const auto c = rca::normalize_tokens(p.candidate);
        const auto r = rca::normalize_tokens(p.reference);
        worst = std::max(worst, std::fabs(rca::rouge_n(c, r, 1) - oracle::rouge_n(c, r, 1)));
        worst = std::max(worst, std::fabs(rca::rouge_l(c, r) - oracle::rouge_l(c, r)));
        worst = std::max(worst, std::fabs(rca::meteor(c, r) - oracle::meteor(c, r)));
        worst = std::max(worst, std::fabs(rca::gleu(c, r) - oracle::gleu(c, r)));
    }
    const bool anchors =
        rca::round2(rca::rouge_n("service timeout caused outage", "network timeout caused the outage", 1)) == 66.67 &&
        rca::round2(rca::rouge_l("service timeout caused outage", "network timeout caused the outage")) == 66.67 &&
        rca::round2(rca::gleu("the cat sat", "the cat sat down")) == 60.0 &&
        rca::round2(rca::meteor("the cat sat", "the cat sat")) == 98.15 &&
        rca::round2(rca::meteor("cat the", "the cat")) == 50.0;
    const auto serial = rca::evaluate_corpus(pairs, rca::kernels::Exec::Serial);
    const auto parallel = rca::evaluate_corpus(pairs, rca::kernels::Exec::Parallel);
    const bool same = serial.per_pair == parallel.per_pair && serial.means == parallel.means;
    return {pairs.size() >= 50 && worst <= 1e-9 && anchors && same,
            std::to_string(pairs.size()) + " pairs x 4 metrics, max |diff| " + fmt("%.1e", worst) +
                ", anchors " + (anchors ? "ok" : "WRONG") + ", serial==parallel " + (same ? "yes" : "NO")};
}

// ---- 2 -------------------------------------------------------------------

Outcome gain_table() {
    struct Row {
        double zero[6], icl[6], gain[6];
    };
    const Row rows[] = {
        {{8.25, 13.64, 14.03, 3.21, 80.60, 33.78},
         {12.33, 17.47, 17.38, 4.49, 81.84, 37.28},
         {49.45, 28.08, 23.88, 39.88, 1.54, 10.36}},
        {{11.08, 16.77, 14.39, 3.62, 82.63, 37.81},
         {18.01, 23.72, 19.51, 5.70, 84.50, 43.13},
         {62.55, 41.44, 35.58, 57.46, 2.26, 14.07}},
        {{10.27, 16.40, 16.21, 3.71, 81.95, 33.33},
         {19.89, 26.08, 22.40, 6.37, 84.91, 43.98},
         {93.67, 59.02, 38.19, 71.70, 3.61, 31.95}},
        {{10.13, 16.15, 16.10, 3.68, 81.93, 32.99},
         {19.86, 26.05, 22.41, 6.39, 84.96, 44.19},
         {96.05, 61.30, 39.19, 73.64, 3.70, 33.95}},
    };
    int ok = 0, total = 0;
    double worst = 0.0;
    for (const auto& row : rows)
        for (int m = 0; m < 6; ++m) {
            const double d = std::fabs(rca::round2(rca::percent_gain(row.zero[m], row.icl[m])) - row.gain[m]);
            worst = std::max(worst, d);
            ++total;
            if (d <= 0.02 + 1e-12) ++ok;
        }
    const bool text_anchor = rca::format_gain(rca::percent_gain(14.39, 19.89)) == "+38.22";
    return {ok == total && text_anchor, std::to_string(ok) + "/" + std::to_string(total) +
                                            " cells within 0.02 (max " + fmt("%.3f", worst) +
                                            "), 14.39->19.89 gives " +
                                            rca::format_gain(rca::percent_gain(14.39, 19.89))};
}

// ---- 3 & 4 ---------------------------------------------------------------

struct VectorSet {
    std::size_t dim = 768;
    std::vector<std::string> ids;
    std::vector<float> data;
    std::vector<std::vector<float>> queries;
};

const VectorSet& vectors() {
    static const VectorSet set = [] {
        VectorSet s;
        rca::Rng rng(314159);
        char id[16];
        for (int i = 0; i < 1000; ++i) {
            std::snprintf(id, sizeof id, "v%04d", i);
            s.ids.emplace_back(id);
            const auto v = random_unit(rng, s.dim);
            s.data.insert(s.data.end(), v.begin(), v.end());
        }
        for (int q = 0; q < 100; ++q) s.queries.push_back(random_unit(rng, s.dim));
        return s;
    }();
    return set;
}

Outcome retrieval_exactness() {
    const auto& s = vectors();
    const auto flat = rca::make_flat_index(s.dim, s.ids, s.data);
    const auto quant = rca::quantize(flat);
    int exact = 0;
    std::size_t recalled = 0;
    for (const auto& q : s.queries) {
        const auto hits = flat.search(q, 10);
        const auto want = oracle::top_k(s.data, s.dim, s.ids, q, 10);
        bool same = hits.size() == want.size();
        for (std::size_t i = 0; same && i < hits.size(); ++i) same = hits[i].id == s.ids[want[i]];
        if (same) ++exact;
        std::set<std::string> truth;
        for (const auto& h : hits) truth.insert(h.id);
        for (const auto& h : quant.search(q, 10)) recalled += truth.count(h.id);
    }
    const double recall = static_cast<double>(recalled) / 1000.0;
    return {exact == 100 && recall >= 0.95,
            "flat exact " + std::to_string(exact) + "/100, quantized recall@10 " + fmt("%.3f", recall)};
}

Outcome persistence() {
    const auto& s = vectors();
    const auto dir = std::filesystem::temp_directory_path() / "rca_acceptance";
    std::filesystem::create_directories(dir);
    const rca::AnyIndex flat = rca::make_flat_index(s.dim, s.ids, s.data);
    const rca::AnyIndex quant = rca::quantize(std::get<rca::FlatIndex>(flat));
    double worst = 0.0;
    bool rankings = true;
    for (const auto& [name, index] : {std::pair{"flat.idx", &flat}, std::pair{"quant.idx", &quant}}) {
        const auto path = (dir / name).string();
        rca::save_index(*index, path);
        const auto loaded = rca::load_index(path);
        for (const auto& q : s.queries) {
            const auto a = rca::search(*index, q, 10);
            const auto b = rca::search(loaded, q, 10);
            rankings = rankings && a.size() == b.size();
            for (std::size_t i = 0; rankings && i < a.size(); ++i) {
                rankings = a[i].id == b[i].id;
                worst = std::max(worst, std::fabs(a[i].distance - b[i].distance));
            }
        }
    }
    auto rejected = [&](std::size_t offset, char value) {
        auto bytes = rca::serialize_index(flat);
        bytes[offset] = value;
        const auto path = (dir / "corrupt.idx").string();
        rca::write_file(path, bytes);
        try {
            rca::load_index(path);
        } catch (const rca::Error& e) {
            return e.kind() == rca::ErrorKind::Format;
        }
        return false;
    };
    const bool bad_magic = rejected(0, 'X');
    const bool bad_version = rejected(7, 9);
    std::filesystem::remove_all(dir);
    return {rankings && worst <= 1e-6 && bad_magic && bad_version,
            std::string("rankings ") + (rankings ? "identical" : "DIFFER") + ", max |d diff| " +
                fmt("%.1e", worst) + ", bad magic " + (bad_magic ? "rejected" : "ACCEPTED") + ", bad version " +
                (bad_version ? "rejected" : "ACCEPTED")};
}

// ---- 5 -------------------------------------------------------------------

std::string random_words(rca::Rng& rng, std::size_t n) {
    static const char* words[] = {"disk", "latency", "pool", "timeout", "rollback", "certificate", "node",
                                  "cluster", "deploy", "quota", "error", "the", "a", "failed", "region"};
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += (rng.below(12) == 0 ? "\n" : " ");
        out += words[rng.below(std::size(words))];
    }
    return out;
}

Outcome budget_invariant() {
    rca::Rng rng(8675309);
    std::size_t assemblies = 0, violations = 0, overflow_skips = 0, monotone_failures = 0, comparisons = 0;
    for (int trial = 0; trial < 600; ++trial) {
        rca::Incident inc;
        inc.id = "new";
        inc.title = random_words(rng, 1 + rng.below(12));
        inc.summary_raw = random_words(rng, 1 + rng.below(trial % 50 == 0 ? 9000 : 1500));
        std::vector<rca::InContextExample> examples;
        const auto k = rng.below(61);
        for (std::size_t i = 0; i < k; ++i)
            examples.push_back({"ex" + std::to_string(i), random_words(rng, 1 + rng.below(15)),
                                random_words(rng, 1 + rng.below(400)), random_words(rng, 1 + rng.below(120)),
                                rng.uniform()});
        std::size_t used[2] = {0, 0};
        bool both = true;
        const std::size_t limits[2] = {rca::kLimit8K, rca::kLimit32K};
        for (int li = 0; li < 2; ++li) {
            rca::TokenBudget budget;
            budget.prompt_limit = limits[li];
            budget.completion_reserve = 200;
            for (auto fill : {rca::FillMode::FixedK, rca::FillMode::FullPrompt}) {
                try {
                    const auto p = rca::assemble_rca_prompt(examples, inc, budget, fill);
                    ++assemblies;
                    if (p.token_count > budget.prompt_limit - 200 || p.token_count != budget.counter.count(p.text))
                        ++violations;
                    if (fill == rca::FillMode::FullPrompt) used[li] = p.examples_used.size();
                } catch (const rca::Error& e) {
                    if (e.kind() != rca::ErrorKind::Budget) throw;
                    ++overflow_skips;
                    both = false;
                }
            }
        }
        if (both) {
            ++comparisons;
            if (used[1] < used[0]) ++monotone_failures;
        }
    }
    return {assemblies >= 1000 && violations == 0 && monotone_failures == 0,
            std::to_string(assemblies) + " assemblies, " + std::to_string(violations) + " over budget, " +
                std::to_string(overflow_skips) + " rejected as oversized, 32K>=8K in " +
                std::to_string(comparisons - monotone_failures) + "/" + std::to_string(comparisons)};
}

// ---- 6 -------------------------------------------------------------------

struct E2E {
    rca::RunResult selection, ordering;
};

E2E run_end_to_end(const std::vector<rca::Incident>& incidents) {
    rca::ExtractiveSummaryProvider summarizer(2);
    rca::SummaryCache cache;
    rca::PrepareOptions opts;
    opts.sizes = {140, 20, 40};
    const auto prepared = rca::prepare_corpus(incidents, opts, summarizer, cache);
    rca::EmbedderConfig ec;
    const rca::Embedder embedder(ec);
    const rca::AnyIndex index = rca::build_incident_index(prepared.splits.retrieval, embedder);
    rca::MockGenerator generator(prepared.splits.retrieval);
    rca::ExperimentContext ctx;
    ctx.splits = &prepared.splits;
    ctx.index = &index;
    ctx.embedder = &embedder;
    ctx.generator = &generator;
    ctx.corpus_hash = rca::corpus_fingerprint(prepared.splits);

    E2E out;
    rca::ExperimentConfig sel;
    sel.design = rca::Design::SelectionStudy;
    sel.k = 20;
    sel.concurrency = 2;
    out.selection = rca::run_experiment(sel, ctx);
    rca::ExperimentConfig ord;
    ord.design = rca::Design::OrderingStudy;
    ord.k = 5;
    out.ordering = rca::run_experiment(ord, ctx);
    return out;
}

Outcome end_to_end() {
    const auto shipped = rca::load_incidents(RCA_DATA_DIR "/synthetic_incidents.jsonl");
    const auto regenerated = rca::synth::generate_incidents({});
    const bool shipped_matches = shipped.rejected == 0 && shipped.incidents == regenerated;
    std::set<std::size_t> families;
    for (const auto& s : rca::synth::generate({})) families.insert(s.family);

    const auto a = run_end_to_end(shipped.incidents);
    const auto b = run_end_to_end(shipped.incidents);
    const auto rl = static_cast<std::size_t>(rca::Metric::RougeL);
    const double relevant = *a.selection.row("relevant").means[rl];
    const double random = *a.selection.row("random").means[rl];
    const double zero = *a.selection.row("zero-shot").means[rl];
    const double spread = a.ordering.ordering->spread;
    const bool deterministic = a.selection == b.selection && a.ordering == b.ordering &&
                               rca::to_json(a.selection).dump() == rca::to_json(b.selection).dump() &&
                               rca::to_json(a.ordering).dump() == rca::to_json(b.ordering).dump();
    const bool ok = shipped_matches && shipped.incidents.size() == 200 && families.size() == 20 &&
                    relevant - random >= 20.0 && relevant - zero > relevant - random && spread < 2.0 &&
                    deterministic && a.selection.failures.empty() && a.ordering.failures.empty();
    return {ok, "ROUGE-L relevant " + fmt("%.2f", relevant) + " / random " + fmt("%.2f", random) + " / zero-shot " +
                    fmt("%.2f", zero) + ", ordering spread " + fmt("%.2f", spread) + ", deterministic " +
                    (deterministic ? "yes" : "NO") + ", shipped corpus " +
                    (shipped_matches ? "matches generator" : "DIFFERS")};
}

// ---- 7 -------------------------------------------------------------------

Outcome cleaning_suite() {
    static const char* prose[] = {
        "Customers cannot sign in to the portal.",
        "Export job failed due to error(s) in ABCStagingWriter.execute(): see the attached run log for details.",
        "Latency rose to 3.5 seconds (p99) in eastus.",
        "See https://status.example.com/incidents/42 for the timeline.",
        "Version 2.14.1 was rolled back at 10:42 UTC.",
        "The retry policy (exponential) kept hammering the endpoint.",
        "Error rate: 12% of requests returned HTTP 503.",
        "We called foo() and bar() manually to verify.",
        "Owner: storage-frontend team; severity 2.",
        "Mitigation: failover to the secondary region.",
        "Note that config.yaml (production) had a typo.",
        "Short base64 token dGVzdA== appears in logs.",
    };
    static const char* frames[] = {
        "at com.contoso.storage.BlobClient.upload(BlobClient.java:118)",
        "   at System.Net.Http.HttpClient.SendAsync(HttpRequestMessage request, CancellationToken token)",
        "at Microsoft.Azure.Cosmos.Handlers.RetryHandler.SendAsync(RequestMessage request) in /src/RetryHandler.cs:line 88",
        "ABCStagingWriter.execute() failed",
        "\tat org.apache.kafka.clients.consumer.KafkaConsumer.poll(KafkaConsumer.java:1236)",
        "com.example.Service$Inner.lambda$run$0(Service.java:77) ~[app.jar:?]",
    };
    rca::Rng rng(2718);
    auto blob = [&](std::size_t n) {
        static const char* a = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += a[rng.below(64)];
        return s;
    };
    std::size_t injected_frames = 0, injected_images = 0, missed = 0, false_positives = 0, prose_lines = 0;
    for (int doc = 0; doc < 50; ++doc) {
        std::vector<std::string> expected;   // lines that must survive, in order
        std::vector<std::string> forbidden;  // injected content that must vanish
        std::string text;
        const auto lines = 4 + rng.below(8);
        for (std::size_t l = 0; l < lines; ++l) {
            const auto roll = rng.below(10);
            std::string line;
            if (roll < 3) {
                line = frames[rng.below(std::size(frames))];
                forbidden.push_back(rca::trim(line).data());
                ++injected_frames;
            } else if (roll == 3) {
                const std::string p = prose[rng.below(std::size(prose))];
                const auto b = blob(520 + rng.below(600));
                const bool tag = rng.below(2) == 0;
                const std::string img = tag ? "<img src=\"data:image/png;base64," + b + "\" width=\"400\">" : b;
                line = p + " " + img;
                expected.push_back(p + " ");
                forbidden.push_back(b);
                ++injected_images;
            } else {
                line = prose[rng.below(std::size(prose))];
                expected.push_back(line);
            }
            text += line;
            text += (doc % 5 == 0) ? "\r\n" : "\n";
        }
        rca::CleanReport report;
        const auto cleaned = rca::clean_text(text, report);
        for (const auto& f : forbidden)
            if (cleaned.find(f) != std::string::npos) ++missed;
        // Every expected line must appear verbatim, in order, as a whole line.
        const auto out_lines = rca::split_lines(cleaned);
        std::size_t pos = 0;
        for (const auto& e : expected) {
            ++prose_lines;
            while (pos < out_lines.size() && out_lines[pos] != e) ++pos;
            if (pos == out_lines.size()) {
                ++false_positives;
                pos = 0;
            } else {
                ++pos;
            }
        }
        if (report.stack_lines_removed + report.images_removed !=
            forbidden.size())
            ++missed;
    }
    return {missed == 0 && false_positives == 0,
            std::to_string(injected_frames) + " frames + " + std::to_string(injected_images) +
                " images injected, " + std::to_string(missed) + " missed, " + std::to_string(false_positives) + "/" +
                std::to_string(prose_lines) + " prose lines damaged"};
}

// ---- 8 -------------------------------------------------------------------

Outcome significance() {
    const std::vector<double> xs{3.1, 4.5, 2.2, 8.0, 5.5, 6.1, 7.7};
    const double identical = rca::wilcoxon_signed_rank(xs, xs).p_value;
    const std::vector<double> a{5, 6, 7, 8, 9}, b{4, 4, 4, 4, 4};
    const double exact = rca::wilcoxon_signed_rank(a, b).p_value;
    const auto ref = json::parse(rca::read_file(RCA_FIXTURE_DIR "/wilcoxon_reference.json"));
    double worst = 0.0;
    int within = 0, total = 0;
    for (const auto& c : ref.at("cases")) {
        const auto x = c.at("x").get<std::vector<double>>();
        const auto y = c.at("y").get<std::vector<double>>();
        const double want = c.at("p").get<double>();
        const double got = rca::wilcoxon_signed_rank(x, y).p_value;
        const double rel = std::fabs(got - want) / want;
        worst = std::max(worst, rel);
        ++total;
        if (rel <= 0.10) ++within;
    }
    return {identical == 1.0 && std::fabs(exact - 0.0625) < 1e-15 && within == total && total == 20,
            "identical p=" + fmt("%.3g", identical) + ", n=5 all-positive p=" + fmt("%.6g", exact) + ", " +
                std::to_string(within) + "/" + std::to_string(total) + " reference p within 10% (max rel " +
                fmt("%.2e", worst) + ")"};
}

}  // namespace

int main() {
    criterion(1, "metric oracle suite", 5, metric_oracles);
    criterion(2, "zero-shot vs ICL gain table", 1, gain_table);
    criterion(3, "retrieval exactness", 30, retrieval_exactness);
    criterion(4, "index persistence", 5, persistence);
    criterion(5, "prompt budget invariant", 0, budget_invariant);
    criterion(6, "end-to-end offline experiment", 120, end_to_end);
    criterion(7, "cleaning precision/recall", 2, cleaning_suite);
    criterion(8, "significance machinery", 0, significance);
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
