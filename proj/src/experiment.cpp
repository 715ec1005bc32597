#include "rca/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <unordered_map>

#include "rca/generate.hpp"
#include "rca/retrieve.hpp"
#include "rca/util.hpp"

namespace rca {

using nlohmann::json;

std::string_view design_name(Design design) {
    switch (design) {
        case Design::KShotSweep: return "kshot";
        case Design::FullPrompt: return "full-prompt";
        case Design::SelectionStudy: return "selection";
        case Design::OrderingStudy: return "ordering";
        case Design::ChunkedBaseline: return "chunked";
    }
    return "";
}

Design parse_design(std::string_view name) {
    for (auto d : {Design::KShotSweep, Design::FullPrompt, Design::SelectionStudy,
                   Design::OrderingStudy, Design::ChunkedBaseline})
        if (design_name(d) == name) return d;
    fail(ErrorKind::InvalidArgument, "unknown experiment design '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    budget.validate();
    if (design == Design::KShotSweep && k_values.empty())
        fail(ErrorKind::InvalidArgument, "k sweep needs at least one k");
    if (design == Design::FullPrompt) {
        if (prompt_limits.empty()) fail(ErrorKind::InvalidArgument, "full prompt needs a limit");
        for (auto limit : prompt_limits)
            if (limit <= budget.completion_reserve)
                fail(ErrorKind::InvalidArgument, "prompt limit must exceed the completion reserve");
    }
    if (design == Design::ChunkedBaseline) {
        if (chunk_counts.empty()) fail(ErrorKind::InvalidArgument, "chunked baseline needs chunk counts");
        if (chunk_tokens == 0) fail(ErrorKind::InvalidArgument, "chunk size must be positive");
    }
    if (significance == SignificanceMethod::PairedBootstrap && bootstrap_resamples == 0)
        fail(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
    if (concurrency < 1) fail(ErrorKind::InvalidArgument, "concurrency must be >= 1");
}

json to_json(const ExperimentConfig& c) {
    return json{
        {"design", design_name(c.design)},
        {"k_values", c.k_values},
        {"prompt_limits", c.prompt_limits},
        {"full_prompt_pool", c.full_prompt_pool},
        {"k", c.k},
        {"chunk_counts", c.chunk_counts},
        {"chunk_tokens", c.chunk_tokens},
        {"random_in_draw_order", c.random_in_draw_order},
        {"budget",
         {{"prompt_limit", c.budget.prompt_limit},
          {"completion_reserve", c.budget.completion_reserve},
          {"counter", c.budget.counter.id()}}},
        {"seed", c.seed},
        {"significance", c.significance == SignificanceMethod::Wilcoxon ? "wilcoxon" : "bootstrap"},
        {"bootstrap_resamples", c.bootstrap_resamples},
        {"split", c.split == EvalSplit::Test ? "test" : "validation"},
        {"concurrency", c.concurrency},
    };
}

ExperimentConfig experiment_config_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::Format, "experiment config must be an object");
    ExperimentConfig c;
    try {
        if (j.contains("design")) c.design = parse_design(j.at("design").get<std::string>());
        if (j.contains("k_values")) c.k_values = j.at("k_values").get<std::vector<std::size_t>>();
        if (j.contains("prompt_limits"))
            c.prompt_limits = j.at("prompt_limits").get<std::vector<std::size_t>>();
        if (j.contains("full_prompt_pool")) c.full_prompt_pool = j.at("full_prompt_pool").get<std::size_t>();
        if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
        if (j.contains("chunk_counts"))
            c.chunk_counts = j.at("chunk_counts").get<std::vector<std::size_t>>();
        if (j.contains("chunk_tokens")) c.chunk_tokens = j.at("chunk_tokens").get<std::size_t>();
        if (j.contains("random_in_draw_order"))
            c.random_in_draw_order = j.at("random_in_draw_order").get<bool>();
        if (j.contains("budget")) {
            const auto& b = j.at("budget");
            if (b.contains("prompt_limit")) c.budget.prompt_limit = b.at("prompt_limit").get<std::size_t>();
            if (b.contains("completion_reserve"))
                c.budget.completion_reserve = b.at("completion_reserve").get<std::size_t>();
            if (b.contains("counter"))
                c.budget.counter = TokenCounter::from_id(b.at("counter").get<std::string>());
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("significance")) {
            const auto s = j.at("significance").get<std::string>();
            if (s == "wilcoxon") c.significance = SignificanceMethod::Wilcoxon;
            else if (s == "bootstrap") c.significance = SignificanceMethod::PairedBootstrap;
            else fail(ErrorKind::InvalidArgument, "unknown significance method '" + s + "'");
        }
        if (j.contains("bootstrap_resamples"))
            c.bootstrap_resamples = j.at("bootstrap_resamples").get<std::size_t>();
        if (j.contains("split")) {
            const auto s = j.at("split").get<std::string>();
            if (s == "test") c.split = EvalSplit::Test;
            else if (s == "validation") c.split = EvalSplit::Validation;
            else fail(ErrorKind::InvalidArgument, "unknown split '" + s + "'");
        }
        if (j.contains("concurrency")) c.concurrency = j.at("concurrency").get<int>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("bad experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---- JSON for results ------------------------------------------------------

namespace {

json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

json to_json(const RunResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json means = json::array();
        for (const auto& m : row.means) means.push_back(opt_to_json(m));
        json pairs = json::array();
        for (const auto& p : row.pairs)
            pairs.push_back({{"incident_id", p.incident_id},
                             {"scores", p.scores},
                             {"examples_used", p.examples_used},
                             {"prompt_tokens", p.prompt_tokens}});
        rows.push_back({{"condition", row.label},
                        {"means", means},
                        {"failed", row.failed},
                        {"aborted", row.aborted},
                        {"pairs", pairs}});
    }
    json comparisons = json::array();
    for (const auto& c : r.comparisons)
        comparisons.push_back({{"treatment", c.treatment},
                               {"baseline", c.baseline},
                               {"n", c.n},
                               {"p_value", opt_to_json(c.p_value)},
                               {"rouge_l_gain", opt_to_json(c.rouge_l_gain)}});
    json failures = json::array();
    for (const auto& f : r.failures)
        failures.push_back(
            {{"condition", f.condition}, {"incident_id", f.incident_id}, {"message", f.message}});
    json out{
        {"config", r.config},
        {"provenance",
         {{"corpus_hash", r.provenance.corpus_hash},
          {"seed", r.provenance.seed},
          {"generator_id", r.provenance.generator_id},
          {"embedder_id", r.provenance.embedder_id},
          {"index_kind", r.provenance.index_kind},
          {"index_size", r.provenance.index_size},
          {"eval_size", r.provenance.eval_size}}},
        {"metrics", r.metric_names},
        {"rows", rows},
        {"comparisons", comparisons},
        {"failures", failures},
        {"ordering", nullptr},
    };
    if (r.ordering)
        out["ordering"] = {{"rouge_l_spread", r.ordering->spread},
                           {"rouge_l_stddev_of_condition_means", r.ordering->stddev_of_means}};
    return out;
}

RunResult run_result_from_json(const json& j) {
    RunResult r;
    try {
        r.config = j.at("config");
        const auto& p = j.at("provenance");
        r.provenance.corpus_hash = p.at("corpus_hash").get<std::string>();
        r.provenance.seed = p.at("seed").get<std::uint64_t>();
        r.provenance.generator_id = p.at("generator_id").get<std::string>();
        r.provenance.embedder_id = p.at("embedder_id").get<std::string>();
        r.provenance.index_kind = p.at("index_kind").get<std::string>();
        r.provenance.index_size = p.at("index_size").get<std::size_t>();
        r.provenance.eval_size = p.at("eval_size").get<std::size_t>();
        r.metric_names = j.at("metrics").get<std::vector<std::string>>();
        for (const auto& jr : j.at("rows")) {
            ConditionRow row;
            row.label = jr.at("condition").get<std::string>();
            for (const auto& m : jr.at("means")) row.means.push_back(opt_from_json(m));
            row.failed = jr.at("failed").get<std::size_t>();
            row.aborted = jr.at("aborted").get<bool>();
            for (const auto& jp : jr.at("pairs")) {
                PairScore ps;
                ps.incident_id = jp.at("incident_id").get<std::string>();
                ps.scores = jp.at("scores").get<std::vector<double>>();
                ps.examples_used = jp.at("examples_used").get<std::size_t>();
                ps.prompt_tokens = jp.at("prompt_tokens").get<std::size_t>();
                row.pairs.push_back(std::move(ps));
            }
            r.rows.push_back(std::move(row));
        }
        for (const auto& jc : j.at("comparisons")) {
            Comparison c;
            c.treatment = jc.at("treatment").get<std::string>();
            c.baseline = jc.at("baseline").get<std::string>();
            c.n = jc.at("n").get<std::size_t>();
            c.p_value = opt_from_json(jc.at("p_value"));
            c.rouge_l_gain = opt_from_json(jc.at("rouge_l_gain"));
            r.comparisons.push_back(std::move(c));
        }
        for (const auto& jf : j.at("failures"))
            r.failures.push_back({jf.at("condition").get<std::string>(),
                                  jf.at("incident_id").get<std::string>(),
                                  jf.at("message").get<std::string>()});
        if (const auto& o = j.at("ordering"); !o.is_null())
            r.ordering = Dispersion{o.at("rouge_l_spread").get<double>(),
                                    o.at("rouge_l_stddev_of_condition_means").get<double>()};
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("bad run result: ") + e.what());
    }
    return r;
}

const ConditionRow& RunResult::row(std::string_view label) const {
    for (const auto& r : rows)
        if (r.label == label) return r;
    fail(ErrorKind::NotFound, "no condition '" + std::string(label) + "'");
}

// ---- running -----------------------------------------------------------------

namespace {

enum class Source { Examples, Chunks };

struct Condition {
    std::string label;
    Source source = Source::Examples;
    std::size_t count = 0;  // k or m
    SelectionMode selection = SelectionMode::Relevant;
    OrderingMode ordering = OrderingMode::descending();
    FillMode fill = FillMode::FixedK;
    TokenBudget budget;
};

struct Plan {
    std::vector<Condition> conditions;
    std::vector<std::pair<std::string, std::string>> comparisons;  // (treatment, baseline)
};

std::string k_label(std::size_t k) { return "k=" + std::to_string(k); }

Plan make_plan(const ExperimentConfig& c) {
    Plan plan;
    auto examples = [&](std::string label, std::size_t k) {
        Condition cond;
        cond.label = std::move(label);
        cond.count = k;
        cond.budget = c.budget;
        return cond;
    };
    switch (c.design) {
        case Design::KShotSweep: {
            for (auto k : c.k_values) plan.conditions.push_back(examples(k_label(k), k));
            const auto zero = std::find(c.k_values.begin(), c.k_values.end(), 0);
            const std::string base = k_label(zero != c.k_values.end() ? 0 : c.k_values.front());
            for (const auto& cond : plan.conditions)
                if (cond.label != base) plan.comparisons.emplace_back(cond.label, base);
            break;
        }
        case Design::FullPrompt: {
            plan.conditions.push_back(examples("zero-shot", 0));
            for (auto limit : c.prompt_limits) {
                auto cond = examples("full-" + std::to_string(limit), c.full_prompt_pool);
                cond.fill = FillMode::FullPrompt;
                cond.budget.prompt_limit = limit;
                plan.conditions.push_back(cond);
                plan.comparisons.emplace_back(cond.label, "zero-shot");
            }
            break;
        }
        case Design::SelectionStudy: {
            plan.conditions.push_back(examples("zero-shot", 0));
            plan.conditions.push_back(examples("relevant", c.k));
            auto random = examples("random", c.k);
            random.selection = SelectionMode::Random;
            plan.conditions.push_back(random);
            plan.comparisons = {{"relevant", "zero-shot"}, {"random", "zero-shot"}, {"relevant", "random"}};
            break;
        }
        case Design::OrderingStudy: {
            for (auto mode : {OrderingMode::descending(), OrderingMode::ascending(),
                              OrderingMode::shuffled(c.seed)}) {
                auto cond = examples(std::string(mode.kind == OrderingMode::Kind::Shuffled
                                                     ? "shuffled"
                                                     : mode.label()),
                                     c.k);
                cond.ordering = mode;
                plan.conditions.push_back(cond);
            }
            plan.comparisons = {{"ascending", "descending"}, {"shuffled", "descending"}};
            break;
        }
        case Design::ChunkedBaseline: {
            for (auto m : c.chunk_counts) {
                Condition cond = examples("chunked m=" + std::to_string(m), m);
                cond.source = Source::Chunks;
                plan.conditions.push_back(cond);
            }
            const std::string icl = "icl " + k_label(c.k);
            plan.conditions.push_back(examples(icl, c.k));
            for (auto m : c.chunk_counts) plan.comparisons.emplace_back(icl, "chunked m=" + std::to_string(m));
            break;
        }
    }
    return plan;
}

std::uint64_t incident_seed(std::uint64_t seed, const std::string& id) {
    return splitmix64(seed ^ fnv1a64(id));
}

const std::string& reference_of(const Incident& inc) {
    return inc.root_cause_clean ? *inc.root_cause_clean : inc.root_cause_raw;
}

struct Outcome {
    std::optional<PairScore> pair;
    TextPair texts;
    std::optional<Error> error;
};

struct ChunkStore {
    std::vector<Chunk> chunks;
    ChunkLookup lookup;
    AnyIndex index;
};

Outcome run_one(const Condition& cond, const ExperimentConfig& config, const ExperimentContext& ctx,
                const IncidentLookup& lookup, const ChunkStore* chunks, const Incident& inc,
                const EmbeddingVector& query) {
    Outcome out;
    try {
        const auto seed = incident_seed(config.seed, inc.id);
        AssembledPrompt prompt;
        if (cond.source == Source::Chunks) {
            const auto picked = retrieve_chunks(chunks->index, chunks->lookup, query.values, cond.count);
            prompt = assemble_chunked_prompt(picked, inc, cond.budget);
        } else {
            std::vector<InContextExample> examples;
            if (cond.count > 0) {
                const auto available = index_size(*ctx.index) - (lookup.count(inc.id) ? 1 : 0);
                const auto k = std::min(cond.count, available);
                examples = retrieve_examples(*ctx.index, lookup, inc.id, query.values, k,
                                             cond.selection, seed);
                if (!(cond.selection == SelectionMode::Random && config.random_in_draw_order)) {
                    auto mode = cond.ordering;
                    if (mode.kind == OrderingMode::Kind::Shuffled)
                        mode.seed = splitmix64(mode.seed ^ fnv1a64(inc.id));
                    examples = order_examples(std::move(examples), mode);
                }
            }
            prompt = assemble_rca_prompt(examples, inc, cond.budget, cond.fill);
        }
        GenerationConfig gen;
        const auto suggestion = generate_root_cause(*ctx.generator, prompt, gen);
        PairScore ps;
        ps.incident_id = inc.id;
        out.texts = {suggestion.text, reference_of(inc)};
        ps.scores = score_pair(out.texts);
        ps.examples_used = prompt.examples_used.size();
        ps.prompt_tokens = prompt.token_count;
        out.pair = std::move(ps);
    } catch (const Error& e) {
        out.error = e;
    }
    return out;
}

std::optional<double> compare_p(const ExperimentConfig& config, const std::vector<double>& xs,
                                const std::vector<double>& ys) {
    if (xs.size() < 5) return std::nullopt;
    if (config.significance == SignificanceMethod::PairedBootstrap)
        return paired_bootstrap_p(xs, ys, config.bootstrap_resamples, config.seed);
    try {
        return wilcoxon_signed_rank(xs, ys).p_value;
    } catch (const Error&) {
        return std::nullopt;  // too few non-zero differences
    }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const ExperimentContext& ctx) {
    config.validate();
    if (!ctx.splits || !ctx.index || !ctx.embedder || !ctx.generator)
        fail(ErrorKind::InvalidArgument, "experiment context is incomplete");
    const auto& eval = config.split == EvalSplit::Test ? ctx.splits->test : ctx.splits->validation;
    if (eval.empty()) fail(ErrorKind::InvalidArgument, "evaluation split is empty");
    if (index_size(*ctx.index) != ctx.splits->retrieval.size())
        fail(ErrorKind::Conflict, "index and retrieval split differ in size");

    RunResult result;
    result.config = to_json(config);
    result.provenance.corpus_hash = ctx.corpus_hash;
    result.provenance.seed = config.seed;
    result.provenance.generator_id = ctx.generator->id();
    result.provenance.embedder_id = ctx.embedder->id();
    result.provenance.index_kind = std::holds_alternative<FlatIndex>(*ctx.index) ? "flat" : "quantized";
    result.provenance.index_size = index_size(*ctx.index);
    result.provenance.eval_size = eval.size();
    for (std::size_t m = 0; m < kNativeMetricCount; ++m)
        result.metric_names.emplace_back(metric_name(static_cast<Metric>(m)));
    for (auto* ext : ctx.external) result.metric_names.push_back(ext->name());

    const auto lookup = make_lookup(ctx.splits->retrieval);
    std::vector<std::string> texts;
    for (const auto& inc : eval) texts.push_back(build_query_text(inc));
    const auto queries = ctx.embedder->embed_all(texts, config.concurrency);

    const auto plan = make_plan(config);
    std::optional<ChunkStore> chunks;
    if (config.design == Design::ChunkedBaseline) {
        chunks.emplace();
        chunks->chunks = chunk_corpus(ctx.splits->retrieval, config.budget.counter, config.chunk_tokens);
        chunks->lookup = make_chunk_lookup(chunks->chunks);
        chunks->index = build_chunk_index(chunks->chunks, *ctx.embedder);
    }

    for (const auto& cond : plan.conditions) {
        std::vector<Outcome> outcomes(eval.size());
        const auto n = static_cast<std::ptrdiff_t>(eval.size());
#pragma omp parallel for schedule(dynamic) num_threads(config.concurrency) if (config.concurrency > 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            outcomes[u] = run_one(cond, config, ctx, lookup, chunks ? &*chunks : nullptr, eval[u], queries[u]);
        }

        ConditionRow row;
        row.label = cond.label;
        std::vector<TextPair> scored_texts;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            auto& o = outcomes[i];
            if (o.pair) {
                row.pairs.push_back(std::move(*o.pair));
                scored_texts.push_back(std::move(o.texts));
                continue;
            }
            ++row.failed;
            result.failures.push_back({cond.label, eval[i].id, o.error->what()});
            if (o.error->kind() == ErrorKind::Provider) {
                // Later incidents are discarded so the cut does not depend on scheduling.
                row.aborted = true;
                row.failed += outcomes.size() - i - 1;
                break;
            }
        }

        if (!row.pairs.empty()) {
            for (auto* ext : ctx.external) {
                const auto scores = ext->score(scored_texts);
                if (scores.size() != row.pairs.size())
                    fail(ErrorKind::Provider, ext->name() + " returned the wrong number of scores");
                for (std::size_t i = 0; i < scores.size(); ++i) {
                    if (!(scores[i] >= 0.0 && scores[i] <= 100.0))
                        fail(ErrorKind::Provider, ext->name() + " score outside [0, 100]");
                    row.pairs[i].scores.push_back(scores[i]);
                }
            }
        }
        row.means.assign(result.metric_names.size(), std::nullopt);
        if (!row.pairs.empty()) {
            for (std::size_t m = 0; m < result.metric_names.size(); ++m) {
                double sum = 0.0;
                for (const auto& p : row.pairs) sum += p.scores[m];
                row.means[m] = sum / static_cast<double>(row.pairs.size());
            }
        }
        result.rows.push_back(std::move(row));
    }

    const auto rouge_l = static_cast<std::size_t>(Metric::RougeL);
    for (const auto& [treat, base] : plan.comparisons) {
        const auto& t = result.row(treat);
        const auto& b = result.row(base);
        std::unordered_map<std::string, double> base_scores;
        for (const auto& p : b.pairs) base_scores.emplace(p.incident_id, p.scores[rouge_l]);
        std::vector<double> xs, ys;
        for (const auto& p : t.pairs)
            if (auto it = base_scores.find(p.incident_id); it != base_scores.end()) {
                xs.push_back(p.scores[rouge_l]);
                ys.push_back(it->second);
            }
        Comparison cmp;
        cmp.treatment = treat;
        cmp.baseline = base;
        cmp.n = xs.size();
        cmp.p_value = compare_p(config, xs, ys);
        const auto& tb = t.means[rouge_l];
        const auto& bb = b.means[rouge_l];
        if (tb && bb && *bb > 0.0) cmp.rouge_l_gain = percent_gain(*bb, *tb);
        result.comparisons.push_back(std::move(cmp));
    }

    if (config.design == Design::OrderingStudy) {
        std::vector<double> means;
        for (const auto& row : result.rows)
            if (row.means[rouge_l]) means.push_back(*row.means[rouge_l]);
        if (means.size() == result.rows.size()) {
            const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
            result.ordering = Dispersion{*hi - *lo, population_stddev(means)};
        }
    }
    return result;
}

// ---- reports -----------------------------------------------------------------

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::optional<std::size_t> find_metric(const RunResult& r, std::string_view name) {
    for (std::size_t i = 0; i < r.metric_names.size(); ++i)
        if (to_lower_ascii(r.metric_names[i]) == to_lower_ascii(name)) return i;
    return std::nullopt;
}

}  // namespace

std::string format_report(const RunResult& result, std::string_view format) {
    if (format == "json") return to_json(result).dump(2) + "\n";
    if (format != "csv") fail(ErrorKind::InvalidArgument, "unknown report format '" + std::string(format) + "'");
    if (result.rows.empty()) fail(ErrorKind::InvalidArgument, "nothing to report");
    static constexpr std::string_view kColumns[] = {"ROUGE-L", "ROUGE-1", "METEOR", "GLEU",
                                                    "BERTScore", "Nubia"};
    std::string out = "condition";
    for (auto c : kColumns) out += "," + std::string(c);
    out += "\n";
    for (const auto& row : result.rows) {
        out += csv_field(row.label);
        for (auto c : kColumns) {
            out += ",";
            const auto idx = find_metric(result, c);
            if (idx && *idx < row.means.size() && row.means[*idx]) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.4f", *row.means[*idx]);
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

void emit_report(const RunResult& result, std::string_view format, const std::string& path) {
    write_file(path, format_report(result, format));
}

json run_manifest(const RunResult& result) {
    json rows = json::array();
    for (const auto& row : result.rows)
        rows.push_back({{"condition", row.label},
                        {"scored", row.pairs.size()},
                        {"failed", row.failed},
                        {"aborted", row.aborted}});
    return json{{"config", result.config},
                {"seed", result.provenance.seed},
                {"corpus_hash", result.provenance.corpus_hash},
                {"generator_id", result.provenance.generator_id},
                {"embedder_id", result.provenance.embedder_id},
                {"index_kind", result.provenance.index_kind},
                {"index_size", result.provenance.index_size},
                {"eval_size", result.provenance.eval_size},
                {"metrics", result.metric_names},
                {"conditions", rows},
                {"failures", result.failures.size()}};
}

}  // namespace rca
