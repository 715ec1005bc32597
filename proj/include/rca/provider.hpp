#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rca {

/// One text-completion call. `context_ids` names the in-context examples
/// behind the prompt so offline providers can answer without parsing text.
struct CompletionRequest {
    std::string prompt;
    std::vector<std::string> context_ids;
    double temperature = 0.0;
    int max_tokens = 200;
};

/// Implementations must be safe to call from several threads at once.
class TextProvider {
public:
    virtual ~TextProvider() = default;
    virtual std::string id() const = 0;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{60};
};

struct HttpEndpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/'
};

// Throws Error(InvalidArgument) on anything but http(s)://host[:port][/path].
HttpEndpoint parse_endpoint(const std::string& url);

// RCA_API_KEY when set, otherwise the fallback.
std::string resolve_api_key(const std::string& fallback = {});

/// POSTs a JSON body, retrying transport failures, 429 and 5xx with
/// exponential backoff. A 413 or a body mentioning a context-length
/// overflow is reported as Error(Budget); other 4xx as Error(Provider)
/// without retrying.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const RetryPolicy& policy, const std::string& api_key);

enum class RequestShape { Completion, Chat };

struct RemoteProviderConfig {
    std::string endpoint;
    std::string model_id = "gpt-4";
    RequestShape shape = RequestShape::Completion;
    std::string system_message =
        "You are an expert software engineer performing incident root cause analysis.";
    RetryPolicy retry;
    std::string api_key;
};

nlohmann::json build_completion_body(const RemoteProviderConfig& config,
                                     const CompletionRequest& request);

class RemoteProvider final : public TextProvider {
public:
    explicit RemoteProvider(RemoteProviderConfig config);

    std::string id() const override;
    std::string complete(const CompletionRequest& request) override;

private:
    RemoteProviderConfig config_;
};

/// Wraps a provider and counts calls; used to observe cache behaviour.
class CountingProvider final : public TextProvider {
public:
    explicit CountingProvider(TextProvider& inner) : inner_(inner) {}

    std::string id() const override { return inner_.id(); }
    std::string complete(const CompletionRequest& request) override {
        ++calls_;
        return inner_.complete(request);
    }
    std::size_t calls() const { return calls_.load(); }

private:
    TextProvider& inner_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace rca
