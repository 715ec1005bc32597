#include "rca/generate.hpp"

#include "rca/util.hpp"

namespace rca {

void GenerationConfig::validate() const {
    if (temperature < 0.0) fail(ErrorKind::InvalidArgument, "temperature must be >= 0");
    if (max_completion_tokens <= 0)
        fail(ErrorKind::InvalidArgument, "max completion tokens must be positive");
}

RootCauseSuggestion generate_root_cause(TextProvider& provider, const AssembledPrompt& prompt,
                                        const GenerationConfig& config) {
    config.validate();
    if (trim(prompt.text).empty()) fail(ErrorKind::InvalidArgument, "empty prompt");
    CompletionRequest request;
    request.prompt = prompt.text;
    request.context_ids = prompt.examples_used;
    request.temperature = config.temperature;
    request.max_tokens = config.max_completion_tokens;

    RootCauseSuggestion suggestion;
    suggestion.text = std::string(trim(provider.complete(request)));
    if (suggestion.text.empty()) fail(ErrorKind::Provider, "provider returned an empty completion");
    suggestion.prompt_token_count = prompt.token_count;
    suggestion.examples_used = prompt.examples_used;
    suggestion.provider_id = provider.id();
    return suggestion;
}

std::string mock_generate(const std::vector<std::string>& examples_used,
                          const std::unordered_map<std::string, std::string>& root_causes) {
    if (examples_used.empty()) return std::string(kUnknownRootCause);
    auto it = root_causes.find(examples_used.front());
    if (it == root_causes.end())
        fail(ErrorKind::NotFound, "mock generator has no root cause for " + examples_used.front());
    return it->second;
}

MockGenerator::MockGenerator(const std::vector<Incident>& corpus) {
    for (const auto& inc : corpus)
        if (inc.root_cause_short) root_causes_.emplace(inc.id, *inc.root_cause_short);
}

std::string MockGenerator::complete(const CompletionRequest& request) {
    return mock_generate(request.context_ids, root_causes_);
}

}  // namespace rca
