#include "rca/provider.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "rca/util.hpp"

namespace rca {

HttpEndpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        fail(ErrorKind::InvalidArgument, "endpoint lacks a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        fail(ErrorKind::InvalidArgument, "unsupported endpoint scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    ep.base = url.substr(0, path_start);
    ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (ep.base.size() <= scheme_end + 3)
        fail(ErrorKind::InvalidArgument, "endpoint lacks a host: " + url);
    return ep;
}

std::string resolve_api_key(const std::string& fallback) {
    if (const char* env = std::getenv("RCA_API_KEY"); env && *env) return env;
    return fallback;
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const RetryPolicy& policy, const std::string& api_key) {
    const auto ep = parse_endpoint(url);
    httplib::Client client(ep.base);
    const auto secs = static_cast<time_t>(policy.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    const auto payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(policy.initial_backoff * (1 << (attempt - 1)));
        auto res = client.Post(ep.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorKind::Provider, std::string("malformed provider response: ") + e.what());
            }
        }
        if (res->status == 413 || res->body.find("context_length_exceeded") != std::string::npos)
            fail(ErrorKind::Budget, "provider reported context overflow (HTTP " +
                                        std::to_string(res->status) + ")");
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        fail(ErrorKind::Provider, "provider rejected request: HTTP " +
                                      std::to_string(res->status) + " " + res->body);
    }
    fail(ErrorKind::Provider, "provider unavailable after " +
                                  std::to_string(policy.max_retries + 1) +
                                  " attempts: " + last_error);
}

nlohmann::json build_completion_body(const RemoteProviderConfig& config,
                                     const CompletionRequest& request) {
    nlohmann::json body{{"model", config.model_id},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens}};
    if (config.shape == RequestShape::Chat) {
        body["messages"] = nlohmann::json::array({
            {{"role", "system"}, {"content", config.system_message}},
            {{"role", "user"}, {"content", request.prompt}},
        });
    } else {
        body["prompt"] = request.prompt;
    }
    return body;
}

RemoteProvider::RemoteProvider(RemoteProviderConfig config) : config_(std::move(config)) {
    parse_endpoint(config_.endpoint);
    config_.api_key = resolve_api_key(config_.api_key);
}

std::string RemoteProvider::id() const { return "remote:" + config_.model_id; }

std::string RemoteProvider::complete(const CompletionRequest& request) {
    const auto reply = post_json(config_.endpoint, build_completion_body(config_, request),
                                 config_.retry, config_.api_key);
    if (auto it = reply.find("text"); it != reply.end() && it->is_string())
        return it->get<std::string>();
    // OpenAI-style chat reply.
    if (auto it = reply.find("choices"); it != reply.end() && it->is_array() && !it->empty()) {
        const auto& first = (*it)[0];
        if (first.contains("message") && first["message"].contains("content"))
            return first["message"]["content"].get<std::string>();
        if (first.contains("text")) return first["text"].get<std::string>();
    }
    fail(ErrorKind::Provider, "provider response has no completion text");
}

}  // namespace rca
