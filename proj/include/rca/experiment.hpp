#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rca/corpus.hpp"
#include "rca/embed.hpp"
#include "rca/index.hpp"
#include "rca/metrics.hpp"
#include "rca/prompt.hpp"
#include "rca/provider.hpp"
#include "rca/stats.hpp"

namespace rca {

enum class Design { KShotSweep, FullPrompt, SelectionStudy, OrderingStudy, ChunkedBaseline };

// "kshot", "full-prompt", "selection", "ordering", "chunked"
std::string_view design_name(Design design);
Design parse_design(std::string_view name);

enum class SignificanceMethod { Wilcoxon, PairedBootstrap };

enum class EvalSplit { Test, Validation };

struct ExperimentConfig {
    Design design = Design::KShotSweep;
    std::vector<std::size_t> k_values{0, 5, 10, 20, 30, 40};      // kshot
    std::vector<std::size_t> prompt_limits{kLimit8K, kLimit32K};  // full-prompt
    std::size_t full_prompt_pool = 100;                           // candidates before filling
    std::size_t k = 20;                                           // selection, ordering, chunked
    std::vector<std::size_t> chunk_counts{5, 10, 20};             // chunked
    std::size_t chunk_tokens = 128;
    // Random picks stay in draw order; ordering them by relevance would leak
    // retrieval signal into the control arm.
    bool random_in_draw_order = true;
    TokenBudget budget;
    std::uint64_t seed = 42;
    SignificanceMethod significance = SignificanceMethod::Wilcoxon;
    std::size_t bootstrap_resamples = 10000;
    EvalSplit split = EvalSplit::Test;
    int concurrency = 1;

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct PairScore {
    std::string incident_id;
    std::vector<double> scores;  // aligned with RunResult::metric_names
    std::size_t examples_used = 0;
    std::size_t prompt_tokens = 0;

    friend bool operator==(const PairScore&, const PairScore&) = default;
};

struct ConditionRow {
    std::string label;
    std::vector<std::optional<double>> means;  // empty condition -> nullopt
    std::size_t failed = 0;
    bool aborted = false;
    std::vector<PairScore> pairs;

    friend bool operator==(const ConditionRow&, const ConditionRow&) = default;
};

struct Comparison {
    std::string treatment;
    std::string baseline;
    std::size_t n = 0;                     // pairs scored in both conditions
    std::optional<double> p_value;         // ROUGE-L, two-sided
    std::optional<double> rouge_l_gain;    // percent, unrounded

    friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct FailureMarker {
    std::string condition;
    std::string incident_id;
    std::string message;

    friend bool operator==(const FailureMarker&, const FailureMarker&) = default;
};

struct Dispersion {
    double spread = 0.0;             // max - min of ROUGE-L condition means
    double stddev_of_means = 0.0;    // population standard deviation

    friend bool operator==(const Dispersion&, const Dispersion&) = default;
};

struct Provenance {
    std::string corpus_hash;
    std::uint64_t seed = 0;
    std::string generator_id;
    std::string embedder_id;
    std::string index_kind;
    std::size_t index_size = 0;
    std::size_t eval_size = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct RunResult {
    nlohmann::json config;
    Provenance provenance;
    std::vector<std::string> metric_names;
    std::vector<ConditionRow> rows;
    std::vector<Comparison> comparisons;
    std::vector<FailureMarker> failures;
    std::optional<Dispersion> ordering;

    const ConditionRow& row(std::string_view label) const;
    friend bool operator==(const RunResult&, const RunResult&) = default;
};

nlohmann::json to_json(const RunResult& result);
RunResult run_result_from_json(const nlohmann::json& j);

struct ExperimentContext {
    const CorpusSplits* splits = nullptr;
    const AnyIndex* index = nullptr;           // built from splits->retrieval
    const Embedder* embedder = nullptr;
    TextProvider* generator = nullptr;
    std::vector<ExternalScorer*> external;     // failures here propagate
    std::string corpus_hash;
};

/// Runs every condition of the design over the evaluation split, one
/// condition after another. A provider failure ends its condition: pairs
/// scored before it are kept and a FailureMarker is recorded. Budget
/// overflows only skip the incident.
RunResult run_experiment(const ExperimentConfig& config, const ExperimentContext& context);

// csv: condition + ROUGE-L, ROUGE-1, METEOR, GLEU, BERTScore, Nubia. json: to_json().
std::string format_report(const RunResult& result, std::string_view format);
void emit_report(const RunResult& result, std::string_view format, const std::string& path);

nlohmann::json run_manifest(const RunResult& result);

}  // namespace rca
