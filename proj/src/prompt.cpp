#include "rca/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "rca/util.hpp"

namespace rca {

namespace {

bool by_relevance_desc(const InContextExample& a, const InContextExample& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.incident_id < b.incident_id;
}

bool fits(const std::string& text, const TokenBudget& budget) {
    return budget.counter.count(text) <= budget.available();
}

void require_new_incident_fits(const Incident& incident, const TokenBudget& budget,
                               const std::string& zero_shot) {
    if (!fits(zero_shot, budget))
        fail(ErrorKind::Budget, "incident " + incident.id + " alone needs " +
                                    std::to_string(budget.counter.count(zero_shot)) +
                                    " tokens; budget is " + std::to_string(budget.available()));
}

}  // namespace

void TokenBudget::validate() const {
    if (completion_reserve >= prompt_limit)
        fail(ErrorKind::InvalidArgument, "completion reserve must be below the prompt limit");
}

std::string OrderingMode::label() const {
    switch (kind) {
        case Kind::DescendingRelevance: return "descending";
        case Kind::AscendingRelevance: return "ascending";
        case Kind::Shuffled: return "shuffled";
    }
    return "descending";
}

OrderingMode OrderingMode::parse(std::string_view text, std::uint64_t default_seed) {
    if (text == "descending") return descending();
    if (text == "ascending") return ascending();
    if (text == "shuffled") return shuffled(default_seed);
    if (text.starts_with("shuffled:")) {
        std::uint64_t seed = 0;
        const auto digits = text.substr(9);
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
        if (ec == std::errc{} && p == digits.data() + digits.size()) return shuffled(seed);
    }
    fail(ErrorKind::InvalidArgument, "unknown ordering: " + std::string(text));
}

std::vector<InContextExample> order_examples(std::vector<InContextExample> examples,
                                             const OrderingMode& mode) {
    std::ranges::stable_sort(examples, by_relevance_desc);
    switch (mode.kind) {
        case OrderingMode::Kind::DescendingRelevance:
            break;
        case OrderingMode::Kind::AscendingRelevance:
            std::ranges::reverse(examples);
            break;
        case OrderingMode::Kind::Shuffled: {
            Rng rng(mode.seed);
            rng.shuffle(examples);
            break;
        }
    }
    return examples;
}

std::string example_block(const InContextExample& e) {
    return "Title: " + e.title + "\nSummary: " + e.summary_short + "\nRoot Cause: " +
           e.root_cause_short;
}

std::string new_incident_block(const Incident& incident) {
    const auto& summary = incident.summary_clean ? *incident.summary_clean : incident.summary_raw;
    return "Title: " + incident.title + "\nSummary: " + summary + "\nRoot Cause:";
}

std::string render_rca_prompt(const std::vector<InContextExample>& examples,
                              const Incident& incident) {
    std::string text(kRcaTaskSentence);
    text += "\n\n";
    for (const auto& e : examples) {
        text += example_block(e);
        text += "\n\n";
    }
    text += new_incident_block(incident);
    return text;
}

std::string render_chunked_prompt(const std::vector<Chunk>& chunks, const Incident& incident) {
    std::string text(kRcaTaskSentence);
    text += "\n\n";
    for (const auto& c : chunks) {
        text += c.text;
        text += "\n\n";
    }
    text += new_incident_block(incident);
    return text;
}

FitResult fit_to_budget(const std::vector<InContextExample>& examples, const Incident& incident,
                        const TokenBudget& budget, FillMode fill) {
    budget.validate();
    FitResult result;
    std::vector<bool> keep(examples.size(), fill == FillMode::FixedK);

    // Most relevant first; among equal relevance the earlier position ranks higher.
    std::vector<std::size_t> priority(examples.size());
    std::iota(priority.begin(), priority.end(), std::size_t{0});
    std::ranges::stable_sort(priority, [&](std::size_t a, std::size_t b) {
        if (examples[a].relevance != examples[b].relevance)
            return examples[a].relevance > examples[b].relevance;
        return a < b;
    });

    auto kept = [&] {
        std::vector<InContextExample> out;
        for (std::size_t i = 0; i < examples.size(); ++i)
            if (keep[i]) out.push_back(examples[i]);
        return out;
    };

    if (fill == FillMode::FullPrompt) {
        for (std::size_t p : priority) {
            keep[p] = true;
            if (!fits(render_rca_prompt(kept(), incident), budget)) {
                keep[p] = false;
                result.truncated = true;
                break;
            }
        }
    }

    // Under FullPrompt this only triggers if display order changed the count.
    for (auto it = priority.rbegin(); it != priority.rend(); ++it) {
        if (fits(render_rca_prompt(kept(), incident), budget)) break;
        if (keep[*it]) {
            keep[*it] = false;
            result.truncated = true;
        }
    }
    result.examples = kept();
    if (!fits(render_rca_prompt(result.examples, incident), budget)) result.truncated = true;
    return result;
}

AssembledPrompt assemble_rca_prompt(const std::vector<InContextExample>& examples,
                                    const Incident& incident, const TokenBudget& budget,
                                    FillMode fill) {
    budget.validate();
    require_new_incident_fits(incident, budget, render_rca_prompt({}, incident));
    auto fit = fit_to_budget(examples, incident, budget, fill);
    AssembledPrompt prompt;
    prompt.text = render_rca_prompt(fit.examples, incident);
    prompt.token_count = budget.counter.count(prompt.text);
    prompt.truncated = fit.truncated;
    for (const auto& e : fit.examples) prompt.examples_used.push_back(e.incident_id);
    return prompt;
}

AssembledPrompt assemble_chunked_prompt(const std::vector<Chunk>& chunks,
                                        const Incident& incident, const TokenBudget& budget) {
    budget.validate();
    require_new_incident_fits(incident, budget, render_chunked_prompt({}, incident));
    std::vector<Chunk> kept = chunks;
    AssembledPrompt prompt;
    while (!fits(render_chunked_prompt(kept, incident), budget)) {
        kept.pop_back();
        prompt.truncated = true;
    }
    prompt.text = render_chunked_prompt(kept, incident);
    prompt.token_count = budget.counter.count(prompt.text);
    for (const auto& c : kept)
        if (std::ranges::find(prompt.examples_used, c.source_incident_id) ==
            prompt.examples_used.end())
            prompt.examples_used.push_back(c.source_incident_id);
    return prompt;
}

}  // namespace rca
