#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rca/corpus.hpp"
#include "rca/prompt.hpp"
#include "rca/provider.hpp"

namespace rca {

struct GenerationConfig {
    double temperature = 0.0;
    int max_completion_tokens = 200;
    std::string model_id = "gpt-4";
    std::string endpoint;

    void validate() const;
};

struct RootCauseSuggestion {
    std::string text;
    std::size_t prompt_token_count = 0;
    std::vector<std::string> examples_used;
    std::string provider_id;
};

inline constexpr std::string_view kUnknownRootCause = "Root cause unknown.";

RootCauseSuggestion generate_root_cause(TextProvider& provider, const AssembledPrompt& prompt,
                                        const GenerationConfig& config);

/// Offline stand-in for the completion model: answers with the short root
/// cause of the first in-context example, or kUnknownRootCause when the
/// prompt has none.
class MockGenerator final : public TextProvider {
public:
    explicit MockGenerator(const std::vector<Incident>& corpus);

    std::string id() const override { return "mock:first-example"; }
    std::string complete(const CompletionRequest& request) override;

private:
    std::unordered_map<std::string, std::string> root_causes_;
};

std::string mock_generate(const std::vector<std::string>& examples_used,
                          const std::unordered_map<std::string, std::string>& root_causes);

}  // namespace rca
