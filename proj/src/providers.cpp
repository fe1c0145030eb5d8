#include "dispo/providers.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "dispo/errors.hpp"
#include "dispo/rng.hpp"

namespace dispo {

namespace {

bool is_level(const std::string& s) { return s == "low" || s == "medium" || s == "high"; }

std::string_view kind_name(ProviderKind kind) { return kind == ProviderKind::live ? "live" : "synthetic"; }

std::vector<double> dirichlet(double concentration, std::size_t n, Rng& rng) {
    std::vector<double> log_g(n);
    double max_log = -INFINITY;
    for (auto& v : log_g) {
        v = rng.log_gamma(concentration);
        max_log = std::max(max_log, v);
    }
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(log_g[i] - max_log);
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

}  // namespace

void ProviderConfig::validate() const {
    if (model_id.empty()) throw ConfigError("provider config: model id is empty");
    const std::string who = "model '" + model_id + "': ";
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw ConfigError(who + "temperature must lie in [0, 2]");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError(who + "top_p must lie in (0, 1]");
    if (reasoning_effort && !is_level(*reasoning_effort)) {
        throw ConfigError(who + "reasoning_effort must be low, medium or high");
    }
    if (verbosity && !is_level(*verbosity)) throw ConfigError(who + "verbosity must be low, medium or high");

    if (kind == ProviderKind::synthetic) {
        const auto& s = synthetic;
        if (!(s.concentration > 0.0) || !std::isfinite(s.concentration)) {
            throw ConfigError(who + "concentration must be a positive finite number");
        }
        if (s.weights) {
            bool any_positive = false;
            for (double w : *s.weights) {
                if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(who + "weights must be non-negative");
                any_positive = any_positive || w > 0.0;
            }
            if (!any_positive) throw ConfigError(who + "weights must not all be zero");
        }
        if (!(s.instruction_shift >= 0.0 && s.instruction_shift <= 1.0)) {
            throw ConfigError(who + "instruction_shift must lie in [0, 1]");
        }
        if (s.latency_ms < 0) throw ConfigError(who + "latency_ms must be non-negative");
    } else {
        const auto& l = live;
        if (l.endpoint.empty()) throw ConfigError(who + "live provider needs an endpoint");
        if (l.api_key_env.empty()) throw ConfigError(who + "live provider needs api_key_env");
        if (l.max_in_flight < 1) throw ConfigError(who + "max_in_flight must be at least 1");
        if (l.max_retries < 0 || l.backoff_ms < 0 || l.timeout_s < 1 || l.max_tokens < 1) {
            throw ConfigError(who + "invalid retry/timeout settings");
        }
    }
}

ProviderConfig provider_config_from_json(const nlohmann::json& doc) {
    ProviderConfig c;
    try {
        c.model_id = doc.at("id").get<std::string>();
        const auto kind = doc.value("provider", std::string("synthetic"));
        if (kind == "synthetic") {
            c.kind = ProviderKind::synthetic;
        } else if (kind == "live") {
            c.kind = ProviderKind::live;
        } else {
            throw ConfigError("model '" + c.model_id + "': unknown provider kind '" + kind + "'");
        }
        c.remote_model = doc.value("model", c.model_id);
        c.temperature = doc.value("temperature", 1.0);
        c.top_p = doc.value("top_p", 1.0);
        if (doc.contains("reasoning_effort")) c.reasoning_effort = doc.at("reasoning_effort").get<std::string>();
        if (doc.contains("verbosity")) c.verbosity = doc.at("verbosity").get<std::string>();
        if (doc.contains("synthetic")) {
            const auto& s = doc.at("synthetic");
            c.synthetic.concentration = s.value("concentration", 1.0);
            c.synthetic.seed = s.value("seed", std::uint64_t{0});
            if (s.contains("weights")) c.synthetic.weights = s.at("weights").get<std::vector<double>>();
            c.synthetic.instruction_shift = s.value("instruction_shift", 0.0);
            c.synthetic.latency_ms = s.value("latency_ms", 0);
        }
        if (doc.contains("live")) {
            const auto& l = doc.at("live");
            c.live.endpoint = l.value("endpoint", std::string{});
            c.live.api_key_env = l.value("api_key_env", std::string{});
            const auto style = l.value("api_style", std::string("openai"));
            if (style == "openai") {
                c.live.api_style = ApiStyle::openai;
            } else if (style == "anthropic") {
                c.live.api_style = ApiStyle::anthropic;
            } else {
                throw ConfigError("model '" + c.model_id + "': unknown api_style '" + style + "'");
            }
            c.live.max_in_flight = l.value("max_in_flight", c.live.max_in_flight);
            c.live.max_retries = l.value("max_retries", c.live.max_retries);
            c.live.backoff_ms = l.value("backoff_ms", c.live.backoff_ms);
            c.live.timeout_s = l.value("timeout_s", c.live.timeout_s);
            c.live.max_tokens = l.value("max_tokens", c.live.max_tokens);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("provider config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json provider_config_to_json(const ProviderConfig& c) {
    nlohmann::json doc = {{"id", c.model_id},
                          {"provider", std::string(kind_name(c.kind))},
                          {"model", c.remote_model},
                          {"temperature", c.temperature},
                          {"top_p", c.top_p}};
    if (c.reasoning_effort) doc["reasoning_effort"] = *c.reasoning_effort;
    if (c.verbosity) doc["verbosity"] = *c.verbosity;
    if (c.kind == ProviderKind::synthetic) {
        nlohmann::json s = {{"concentration", c.synthetic.concentration},
                            {"seed", c.synthetic.seed},
                            {"instruction_shift", c.synthetic.instruction_shift},
                            {"latency_ms", c.synthetic.latency_ms}};
        if (c.synthetic.weights) s["weights"] = *c.synthetic.weights;
        doc["synthetic"] = s;
    } else {
        doc["live"] = {{"endpoint", c.live.endpoint},
                       {"api_key_env", c.live.api_key_env},
                       {"api_style", c.live.api_style == ApiStyle::openai ? "openai" : "anthropic"},
                       {"max_in_flight", c.live.max_in_flight},
                       {"max_retries", c.live.max_retries},
                       {"backoff_ms", c.live.backoff_ms},
                       {"timeout_s", c.live.timeout_s},
                       {"max_tokens", c.live.max_tokens}};
    }
    return doc;
}

nlohmann::json provider_metadata(const ProviderConfig& c) {
    nlohmann::json meta = {{"kind", std::string(kind_name(c.kind))},
                           {"model", c.remote_model},
                           {"temperature", c.temperature},
                           {"top_p", c.top_p}};
    if (c.reasoning_effort) meta["reasoning_effort"] = *c.reasoning_effort;
    if (c.verbosity) meta["verbosity"] = *c.verbosity;
    if (c.kind == ProviderKind::synthetic) {
        meta["concentration"] = c.synthetic.concentration;
        meta["disposition_seed"] = c.synthetic.seed;
    }
    return meta;
}

std::vector<std::size_t> weighted_sample_without_replacement(const std::vector<double>& weights, std::size_t count,
                                                             Rng& rng) {
    if (count > weights.size()) throw std::invalid_argument("sample larger than population");
    std::vector<double> remaining = weights;
    std::vector<bool> taken(weights.size(), false);
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
        double total = 0.0;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            if (!taken[i]) total += remaining[i];
        }
        std::size_t pick = remaining.size();
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            std::size_t last_positive = remaining.size();
            for (std::size_t i = 0; i < remaining.size(); ++i) {
                if (taken[i] || remaining[i] <= 0.0) continue;
                last_positive = i;
                acc += remaining[i];
                if (target < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick == remaining.size()) pick = last_positive;  // rounding at the top end
        } else {
            auto k = rng.uniform_below(weights.size() - out.size());
            for (std::size_t i = 0; i < taken.size(); ++i) {
                if (taken[i]) continue;
                if (k-- == 0) {
                    pick = i;
                    break;
                }
            }
        }
        taken[pick] = true;
        out.push_back(pick);
    }
    return out;
}

SyntheticProvider::SyntheticProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.kind != ProviderKind::synthetic) throw ConfigError("SyntheticProvider needs a synthetic config");
    config_.validate();
}

std::vector<double> SyntheticProvider::weights_for(const std::string& instruction, std::size_t pool_size) const {
    const auto& params = config_.synthetic;
    std::vector<double> base;
    if (params.weights) {
        if (params.weights->size() != pool_size) {
            throw ConfigError("model '" + config_.model_id + "': weight vector length " +
                              std::to_string(params.weights->size()) + " does not match pool size " +
                              std::to_string(pool_size));
        }
        base = *params.weights;
        double total = 0.0;
        for (double w : base) total += w;
        for (auto& w : base) w /= total;
    } else {
        Rng rng(SeedHasher().add("dirichlet").add(config_.model_id).add(params.seed).finish());
        base = dirichlet(params.concentration, pool_size, rng);
    }
    if (params.instruction_shift > 0.0 && !params.weights) {
        Rng rng(SeedHasher().add("dirichlet").add(config_.model_id).add(instruction).add(params.seed).finish());
        const auto shifted = dirichlet(params.concentration, pool_size, rng);
        for (std::size_t i = 0; i < pool_size; ++i) {
            base[i] = (1.0 - params.instruction_shift) * base[i] + params.instruction_shift * shifted[i];
        }
    }
    return base;
}

SelectionResponse SyntheticProvider::elicit(const ElicitRequest& request) {
    const auto& pool = request.pool;
    if (request.budget < 1 || static_cast<std::size_t>(request.budget) > pool.size()) {
        throw ConfigError("budget must lie in [1, pool size]");
    }
    if (config_.synthetic.latency_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.synthetic.latency_ms));
    }
    const auto weights = weights_for(request.instruction, pool.size());
    Rng rng(SeedHasher()
                .add("draw")
                .add(config_.model_id)
                .add(config_.synthetic.seed)
                .add(request.permutation.seed)
                .finish());
    const auto picks = weighted_sample_without_replacement(weights, static_cast<std::size_t>(request.budget), rng);

    // Render the same answer contract a live model is asked for and parse it back.
    std::ostringstream raw;
    raw << "SELECTIONS:\n";
    for (auto index : picks) raw << index + 1 << '\n';
    raw << "END_SELECTIONS\nJUSTIFICATIONS:\n";
    raw << std::setprecision(6);
    for (auto index : picks) raw << index + 1 << ": simulated preference weight " << weights[index] << '\n';
    raw << "END_JUSTIFICATIONS\nCOMPATIBILITY:\nsimulated disposition, concentration "
        << config_.synthetic.concentration << '\n';
    return parse_selection(raw.str(), pool, request.budget);
}

std::unique_ptr<Provider> make_provider(ProviderConfig config) {
    if (config.kind == ProviderKind::synthetic) return std::make_unique<SyntheticProvider>(std::move(config));
    return make_live_provider(std::move(config));
}

}  // namespace dispo
