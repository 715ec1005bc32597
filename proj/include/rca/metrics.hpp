#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rca/kernels.hpp"
#include "rca/provider.hpp"

namespace rca {

// All scores are on a 0-100 scale.

using Tokens = std::vector<std::string>;

/// Lowercase, split on Unicode whitespace, strip leading and trailing ASCII
/// punctuation from each token, drop empty tokens.
Tokens normalize_tokens(std::string_view text);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

// Clipped n-gram overlap: sum over distinct n-grams of min(count_a, count_b).
std::size_t ngram_overlap(const Tokens& a, const Tokens& b, std::size_t n);

double f1_score(double precision, double recall);

// Throw Error(InvalidArgument) when the reference has no n-grams/tokens.
double rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n);
double rouge_l(const Tokens& candidate, const Tokens& reference);
double gleu(const Tokens& candidate, const Tokens& reference, std::size_t max_n = 4);

struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    bool exhaustive = true;  // false if the search hit its node budget
};

/// Exact matches first, then Porter-stem matches among the leftovers, each
/// stage at maximum cardinality; among those alignments the one with the
/// fewest chunks is chosen (branch and bound, greedy contiguity first).
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference,
                             std::size_t node_budget = 200'000);

/// F = 10PR/(R+9P), penalty = 0.5 (chunks/matches)^3, score = 100 F (1 - penalty).
double meteor(const Tokens& candidate, const Tokens& reference);

double rouge_n(std::string_view candidate, std::string_view reference, std::size_t n);
double rouge_l(std::string_view candidate, std::string_view reference);
double meteor(std::string_view candidate, std::string_view reference);
double gleu(std::string_view candidate, std::string_view reference, std::size_t max_n = 4);

enum class Metric { RougeL = 0, Rouge1 = 1, Meteor = 2, Gleu = 3 };
inline constexpr std::size_t kNativeMetricCount = 4;
std::string_view metric_name(Metric metric);

struct TextPair {
    std::string candidate;
    std::string reference;
};

/// Semantic scorers (BERTScore-like) living outside this process. Scores
/// must already be on the 0-100 scale.
class ExternalScorer {
public:
    virtual ~ExternalScorer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<double> score(const std::vector<TextPair>& pairs) = 0;
};

/// POST {"pairs":[{"candidate","reference"}]} -> {"scores":[...]}.
class HttpExternalScorer final : public ExternalScorer {
public:
    HttpExternalScorer(std::string name, std::string endpoint, RetryPolicy retry = {});

    std::string name() const override { return name_; }
    std::vector<double> score(const std::vector<TextPair>& pairs) override;

private:
    std::string name_;
    std::string endpoint_;
    RetryPolicy retry_;
};

struct MetricReport {
    std::vector<std::string> names;               // native metrics first: ROUGE-L, ROUGE-1, METEOR, GLEU
    std::vector<std::vector<double>> per_pair;    // per_pair[i][metric]
    std::vector<double> means;
    std::size_t n = 0;

    std::vector<double> column(std::size_t metric) const;
    double mean(Metric metric) const { return means[static_cast<std::size_t>(metric)]; }
};

std::vector<double> score_pair(const TextPair& pair);

/// Per-pair scoring runs on the chosen executor; means are reduced in pair
/// order so both executors agree bit for bit.
MetricReport evaluate_corpus(const std::vector<TextPair>& pairs,
                             kernels::Exec exec = kernels::Exec::Parallel,
                             ExternalScorer* external = nullptr);

}  // namespace rca
