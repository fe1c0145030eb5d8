#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "dispo/errors.hpp"
#include "dispo/providers.hpp"

namespace dispo {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must start with http:// or https://: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class LiveProvider final : public Provider {
public:
    explicit LiveProvider(ProviderConfig config)
        : config_(std::move(config)), endpoint_(split_endpoint(config_.live.endpoint)),
          in_flight_(config_.live.max_in_flight) {
        config_.validate();
        const char* key = std::getenv(config_.live.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("model '" + config_.model_id + "': environment variable " + config_.live.api_key_env +
                              " is not set");
        }
        api_key_ = key;
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (endpoint_.origin.starts_with("https://")) {
            throw ConfigError("this build has no TLS support; cannot reach " + endpoint_.origin);
        }
#endif
    }

    SelectionResponse elicit(const ElicitRequest& request) override {
        const auto prompt = build_prompt(request.pool, request.permutation, request.system_prompt, request.budget);
        const auto body = request_body(prompt).dump();
        const auto content = send_with_retries(body);
        return parse_selection(content, request.pool, request.budget);
    }

    [[nodiscard]] const ProviderConfig& config() const noexcept override { return config_; }

private:
    nlohmann::json request_body(const Prompt& prompt) const {
        nlohmann::json body;
        body["model"] = config_.remote_model;
        body["temperature"] = config_.temperature;
        body["top_p"] = config_.top_p;
        if (config_.live.api_style == ApiStyle::anthropic) {
            body["system"] = prompt.system;
            body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt.user}}});
            body["max_tokens"] = config_.live.max_tokens;
        } else {
            body["messages"] = nlohmann::json::array(
                {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}});
            if (config_.reasoning_effort) body["reasoning_effort"] = *config_.reasoning_effort;
            if (config_.verbosity) body["verbosity"] = *config_.verbosity;
        }
        return body;
    }

    httplib::Headers headers() const {
        if (config_.live.api_style == ApiStyle::anthropic) {
            return {{"x-api-key", api_key_}, {"anthropic-version", "2023-06-01"}};
        }
        return {{"Authorization", "Bearer " + api_key_}};
    }

    std::string extract_content(const std::string& payload) const {
        try {
            const auto doc = nlohmann::json::parse(payload);
            if (config_.live.api_style == ApiStyle::anthropic) {
                std::string text;
                for (const auto& block : doc.at("content")) {
                    if (block.value("type", std::string{}) == "text") text += block.at("text").get<std::string>();
                }
                return text;
            }
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            SelectionError error(SelectionError::Kind::no_answer_block,
                                 std::string("malformed provider payload: ") + e.what());
            error.set_raw_payload(payload);
            throw error;
        }
    }

    std::string send_with_retries(const std::string& body) {
        std::string last_error;
        for (int attempt = 0; attempt <= config_.live.max_retries; ++attempt) {
            if (attempt > 0) {
                const auto delay = std::min<long long>(60'000, static_cast<long long>(config_.live.backoff_ms)
                                                                   << std::min(attempt - 1, 16));
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
            httplib::Result result{nullptr, httplib::Error::Unknown};
            {
                in_flight_.acquire();
                httplib::Client client(endpoint_.origin);
                client.set_connection_timeout(10);
                client.set_read_timeout(config_.live.timeout_s);
                client.set_write_timeout(60);
                result = client.Post(endpoint_.path, headers(), body, "application/json");
                in_flight_.release();
            }
            if (!result) {
                last_error = "transport error: " + httplib::to_string(result.error());
                continue;
            }
            const int status = result->status;
            if (status >= 200 && status < 300) return extract_content(result->body);
            last_error = "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200);
            if (status != 429 && status < 500) throw TransportError(last_error, false);
        }
        throw TransportError(last_error + " (after " + std::to_string(config_.live.max_retries) + " retries)", true);
    }

    ProviderConfig config_;
    Endpoint endpoint_;
    std::string api_key_;
    std::counting_semaphore<4096> in_flight_;
};

}  // namespace

std::unique_ptr<Provider> make_live_provider(ProviderConfig config) {
    if (config.kind != ProviderKind::live) throw ConfigError("make_live_provider needs a live config");
    return std::make_unique<LiveProvider>(std::move(config));
}

}  // namespace dispo
