#pragma once
// Elicitation backends.
//
// A provider turns (pool, permutation, instruction) into a validated
// SelectionResponse. Every call is an isolated session: providers keep no
// conversation state between calls, so one instance can serve many
// concurrent workers.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispo/pool.hpp"

namespace dispo {

enum class ProviderKind { live, synthetic };
enum class ApiStyle { openai, anthropic };

struct DispositionParams {
    double concentration = 1.0;
    std::uint64_t seed = 0;
    /// Fixed preference weights indexed by pool id - 1; replaces the Dirichlet draw.
    std::optional<std::vector<double>> weights;
    /// Blend factor toward a per-(model, instruction) weight vector; 0 disables it.
    double instruction_shift = 0.0;
    /// Simulated per-call latency.
    int latency_ms = 0;
};

struct LiveSettings {
    std::string endpoint;
    std::string api_key_env;
    ApiStyle api_style = ApiStyle::openai;
    int max_in_flight = 4;
    int max_retries = 5;
    int backoff_ms = 1000;
    int timeout_s = 600;
    int max_tokens = 16000;
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::synthetic;
    /// Model key used in cell identities and reports.
    std::string model_id;
    /// Identifier sent to the remote API; defaults to model_id.
    std::string remote_model;
    double temperature = 1.0;
    double top_p = 1.0;
    std::optional<std::string> reasoning_effort;
    std::optional<std::string> verbosity;
    LiveSettings live;
    DispositionParams synthetic;

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;
};

ProviderConfig provider_config_from_json(const nlohmann::json& doc);
nlohmann::json provider_config_to_json(const ProviderConfig& config);
/// Decoding parameters echoed into run records.
nlohmann::json provider_metadata(const ProviderConfig& config);

struct SelectionResponse {
    std::vector<int> selected;
    /// Aligned with `selected`; empty strings where none was given.
    std::vector<std::string> justifications;
    std::string compatibility;
    std::string raw_payload;
};

struct Prompt {
    std::string system;
    std::string user;
};

/// Constraints listed as "[id] text" in permutation order, element and
/// category labels omitted, followed by the answer-block contract.
Prompt build_prompt(const ConstraintPool& pool, const Permutation& permutation, const std::string& system_prompt,
                    int budget);

/// Parses the SELECTIONS ... END_SELECTIONS block. Lines are ids ("12",
/// "[12]", "12. ...") or exact constraint texts. Throws SelectionError.
SelectionResponse parse_selection(const std::string& raw, const ConstraintPool& pool, int budget);

/// Exactly `budget` distinct ids, all in the pool. Throws SelectionError.
void validate_selection(const std::vector<int>& ids, const ConstraintPool& pool, int budget);

struct ElicitRequest {
    const ConstraintPool& pool;
    const Permutation& permutation;
    std::string instruction;
    std::string system_prompt;
    int budget = 20;
};

class Provider {
public:
    virtual ~Provider() = default;

    /// Throws SelectionError for contract violations and TransportError for
    /// backend failures (after the provider's own retries).
    virtual SelectionResponse elicit(const ElicitRequest& request) = 0;
    [[nodiscard]] virtual const ProviderConfig& config() const noexcept = 0;
};

/// Offline disposition simulator. Each model draws one preference vector from a
/// symmetric Dirichlet(concentration) seeded by (model id, seed); each run
/// samples `budget` ids without replacement, proportional to weight, from a
/// stream seeded by (model id, seed, permutation seed).
class SyntheticProvider final : public Provider {
public:
    explicit SyntheticProvider(ProviderConfig config);

    SelectionResponse elicit(const ElicitRequest& request) override;
    [[nodiscard]] const ProviderConfig& config() const noexcept override { return config_; }

    /// Preference weights used for the given instruction (normalized).
    [[nodiscard]] std::vector<double> weights_for(const std::string& instruction, std::size_t pool_size) const;

private:
    ProviderConfig config_;
};

/// Draws `count` distinct indices without replacement, each draw proportional
/// to the remaining weights. Zero-weight entries are only drawn, uniformly,
/// once every positive-weight entry has been taken.
std::vector<std::size_t> weighted_sample_without_replacement(const std::vector<double>& weights, std::size_t count,
                                                             class Rng& rng);

/// Chat-completion client over HTTP(S).
std::unique_ptr<Provider> make_live_provider(ProviderConfig config);

std::unique_ptr<Provider> make_provider(ProviderConfig config);

}  // namespace dispo
