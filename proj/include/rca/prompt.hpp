#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rca/corpus.hpp"
#include "rca/retrieve.hpp"
#include "rca/tokens.hpp"

namespace rca {

inline constexpr std::string_view kRcaTaskSentence =
    "I want you to act as a software engineer to figure out the root cause of incidents. "
    "I will provide some examples to start with.";

inline constexpr std::size_t kLimit8K = 8192;
inline constexpr std::size_t kLimit32K = 32768;
inline constexpr std::size_t kDefaultCompletionReserve = 200;

struct TokenBudget {
    std::size_t prompt_limit = kLimit8K;
    std::size_t completion_reserve = kDefaultCompletionReserve;
    TokenCounter counter = TokenCounter::whitespace();

    // Throws Error(InvalidArgument) unless completion_reserve < prompt_limit.
    void validate() const;
    std::size_t available() const { return prompt_limit - completion_reserve; }
};

struct OrderingMode {
    enum class Kind { DescendingRelevance, AscendingRelevance, Shuffled };
    Kind kind = Kind::DescendingRelevance;
    std::uint64_t seed = 0;

    static OrderingMode descending() { return {Kind::DescendingRelevance, 0}; }
    static OrderingMode ascending() { return {Kind::AscendingRelevance, 0}; }
    static OrderingMode shuffled(std::uint64_t seed) { return {Kind::Shuffled, seed}; }

    std::string label() const;
    // "descending", "ascending", "shuffled" or "shuffled:<seed>".
    static OrderingMode parse(std::string_view text, std::uint64_t default_seed = 0);
};

/// Descending: relevance high to low, ties by id. Ascending: the exact
/// reverse. Shuffled: seeded Fisher-Yates over the descending list.
std::vector<InContextExample> order_examples(std::vector<InContextExample> examples,
                                             const OrderingMode& mode);

enum class FillMode { FixedK, FullPrompt };

struct AssembledPrompt {
    std::string text;
    std::vector<std::string> examples_used;
    std::size_t token_count = 0;
    bool truncated = false;
};

struct FitResult {
    std::vector<InContextExample> examples;
    bool truncated = false;
};

// The new incident is shown with its cleaned summary when available,
// otherwise the raw one; never the short summary.
std::string new_incident_block(const Incident& incident);
std::string example_block(const InContextExample& example);

std::string render_rca_prompt(const std::vector<InContextExample>& examples,
                              const Incident& incident);
std::string render_chunked_prompt(const std::vector<Chunk>& chunks, const Incident& incident);

/// FixedK keeps the list and drops the lowest-relevance example (the later
/// one on ties) until the prompt fits; display order of the rest is kept.
/// FullPrompt admits candidates in relevance order until the next one would
/// overflow, then restores display order. Zero examples plus truncated=true
/// signals that nothing fits.
FitResult fit_to_budget(const std::vector<InContextExample>& examples, const Incident& incident,
                        const TokenBudget& budget, FillMode fill = FillMode::FixedK);

// Throws Error(Budget) when the new-incident prompt alone does not fit.
AssembledPrompt assemble_rca_prompt(const std::vector<InContextExample>& examples,
                                    const Incident& incident, const TokenBudget& budget,
                                    FillMode fill = FillMode::FixedK);

/// Chunks are shown as plain passages; overflow drops trailing chunks.
/// examples_used lists the source incidents of the kept chunks in order,
/// without repeats.
AssembledPrompt assemble_chunked_prompt(const std::vector<Chunk>& chunks,
                                        const Incident& incident, const TokenBudget& budget);

}  // namespace rca
