#include <doctest.h>

#include <cstdlib>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "dispo/errors.hpp"
#include "dispo/harness.hpp"
#include "dispo/metrics.hpp"
#include "dispo/providers.hpp"
#include "../support.hpp"

using namespace dispo;
using namespace dispo::test;

namespace {

std::string answer_block(const std::vector<int>& ids) {
    std::ostringstream out;
    out << "SELECTIONS:\n";
    for (int id : ids) out << id << '\n';
    out << "END_SELECTIONS\nJUSTIFICATIONS:\n";
    for (int id : ids) out << id << ": reason " << id << '\n';
    out << "END_JUSTIFICATIONS\nCOMPATIBILITY:\nThey fit.\n";
    return out.str();
}

std::vector<int> range_ids(int from, int to) {
    std::vector<int> ids;
    for (int i = from; i <= to; ++i) ids.push_back(i);
    return ids;
}

SelectionError::Kind error_kind(const std::string& raw, const ConstraintPool& pool, int budget) {
    try {
        parse_selection(raw, pool, budget);
    } catch (const SelectionError& e) {
        CHECK(e.raw_payload() == raw);
        return e.kind();
    }
    FAIL("expected SelectionError");
    return SelectionError::Kind::no_answer_block;
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("well-formed block yields the listed ids") {
    const auto pool = placeholder_pool();
    const auto ids = range_ids(5, 24);
    const auto r = parse_selection(answer_block(ids), pool, 20);
    CHECK(r.selected == ids);
    REQUIRE(r.justifications.size() == 20);
    CHECK(r.justifications[0] == "reason 5");
    CHECK(r.compatibility == "They fit.");
}

TEST_CASE("out-of-pool, duplicate and short selections are rejected") {
    const auto pool = placeholder_pool();
    auto ids = range_ids(1, 19);
    ids.push_back(999);
    CHECK(error_kind(answer_block(ids), pool, 20) == SelectionError::Kind::out_of_pool_id);
    try {
        parse_selection(answer_block(ids), pool, 20);
    } catch (const SelectionError& e) {
        CHECK(std::string(e.what()) == "out-of-pool id 999");
    }
    ids.back() = 3;
    CHECK(error_kind(answer_block(ids), pool, 20) == SelectionError::Kind::duplicate_id);
    try {
        parse_selection(answer_block(range_ids(1, 19)), pool, 20);
        FAIL("expected count mismatch");
    } catch (const SelectionError& e) {
        CHECK(e.kind() == SelectionError::Kind::count_mismatch);
        CHECK(std::string(e.what()).find("selection count mismatch") != std::string::npos);
    }
}

TEST_CASE("missing block and unknown text references are reported") {
    const auto pool = placeholder_pool();
    CHECK(error_kind("I would pick 1, 2 and 3.", pool, 3) == SelectionError::Kind::no_answer_block);
    CHECK(error_kind("SELECTIONS:\n1\n2\n3\n", pool, 3) == SelectionError::Kind::no_answer_block);
    CHECK(error_kind("SELECTIONS:\n1\n2\nA constraint that does not exist\nEND_SELECTIONS\n", pool, 3) ==
          SelectionError::Kind::unmatched_reference);
}

TEST_CASE("quoted constraint texts are mapped back to ids") {
    const auto pool = placeholder_pool();
    Rng rng(17);
    const auto source = random_subset(rng, 200, 20);
    std::ostringstream raw;
    raw << "Here is my answer.\n**SELECTIONS:**\n";
    for (std::size_t k = 0; k < source.size(); ++k) {
        const auto& text = pool.by_id(source[k]).text;
        raw << (k % 2 == 0 ? "- \"" + text + "\"" : text) << '\n';
    }
    raw << "**END_SELECTIONS**\n";
    const auto r = parse_selection(raw.str(), pool, 20);
    CHECK(std::set<int>(r.selected.begin(), r.selected.end()) == std::set<int>(source.begin(), source.end()));
}

TEST_CASE("id line variants") {
    const auto pool = placeholder_pool();
    const std::string raw = "SELECTIONS:\n[4]\n5.\n6) text\n7: text\n- 8\n* [9] text\nEND_SELECTIONS\n";
    CHECK(parse_selection(raw, pool, 6).selected == std::vector<int>{4, 5, 6, 7, 8, 9});
}

TEST_CASE("prompt lists every constraint in permutation order without labels") {
    auto pool = flat_pool(40);
    for (auto& c : pool.constraints) c.category = "Hidden-category";
    const auto perm = permute(pool, 9);
    const auto prompt = build_prompt(pool, perm, "system text", 20);
    CHECK(prompt.system == "system text");
    std::size_t last = 0;
    for (int id : perm.order) {
        const auto pos = prompt.user.find("[" + std::to_string(id) + "] " + pool.by_id(id).text);
        REQUIRE(pos != std::string::npos);
        CHECK(pos >= last);
        last = pos;
    }
    CHECK(prompt.user.find("Hidden-category") == std::string::npos);
    CHECK(prompt.user.find("Event") == std::string::npos);
    CHECK(prompt.user.find("SELECTIONS:") != std::string::npos);
}

}

TEST_SUITE("synthetic provider") {

TEST_CASE("low concentration produces overlapping runs") {
    const auto pool = placeholder_pool();
    double total = 0.0;
    for (int k = 0; k < 100; ++k) {
        SyntheticProvider provider(synthetic_model("rigid", 0.05, static_cast<std::uint64_t>(k)));
        const auto p1 = permute(pool, 2 * k + 1);
        const auto p2 = permute(pool, 2 * k + 2);
        const auto a = provider.elicit({pool, p1, "Basic", "", 20});
        const auto b = provider.elicit({pool, p2, "Basic", "", 20});
        total += jaccard(a.selected, b.selected);
    }
    CHECK(total / 100.0 >= 0.5);
}

TEST_CASE("support equal to the budget forces the selection") {
    const auto pool = placeholder_pool();
    auto config = synthetic_model("fixed", 1.0, 0);
    std::vector<double> w(200, 0.0);
    std::set<int> support;
    for (int k = 0; k < 20; ++k) {
        w[static_cast<std::size_t>(7 * k + 3)] = 1.0 + k;
        support.insert(7 * k + 4);
    }
    config.synthetic.weights = w;
    SyntheticProvider provider(config);
    for (int s = 0; s < 20; ++s) {
        const auto r = provider.elicit({pool, permute(pool, s), "Basic", "", 20});
        CHECK(std::set<int>(r.selected.begin(), r.selected.end()) == support);
    }
}

TEST_CASE("identical inputs give identical selections") {
    const auto pool = placeholder_pool();
    SyntheticProvider provider(synthetic_model("m", 1.0, 3));
    const auto perm = permute(pool, 11);
    CHECK(provider.elicit({pool, perm, "Basic", "", 20}).selected ==
          provider.elicit({pool, perm, "Basic", "", 20}).selected);
}

TEST_CASE("instruction shift separates instruction types") {
    auto config = synthetic_model("m", 1.0, 3, 0.0);
    SyntheticProvider plain(config);
    CHECK(plain.weights_for("Basic", 200) == plain.weights_for("Creativity-focused", 200));
    config.synthetic.instruction_shift = 0.3;
    SyntheticProvider shifted(config);
    const auto a = shifted.weights_for("Basic", 200);
    CHECK(a != shifted.weights_for("Creativity-focused", 200));
    double sum = 0.0;
    for (double w : a) sum += w;
    CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("weighted sampling takes zero weights last") {
    Rng rng(4);
    const std::vector<double> w{0.0, 2.0, 0.0, 1.0, 0.0};
    for (int k = 0; k < 50; ++k) {
        const auto picks = weighted_sample_without_replacement(w, 5, rng);
        CHECK(std::set<std::size_t>(picks.begin(), picks.begin() + 2) == std::set<std::size_t>{1, 3});
        CHECK(std::set<std::size_t>(picks.begin(), picks.end()).size() == 5);
    }
    CHECK_THROWS_AS(weighted_sample_without_replacement(w, 6, rng), std::invalid_argument);
}

TEST_CASE("provider configs validate and round-trip") {
    auto c = synthetic_model("m", 0.5, 9, 0.2);
    c.reasoning_effort = "high";
    CHECK(provider_config_from_json(provider_config_to_json(c)).synthetic.concentration == 0.5);
    CHECK(provider_config_from_json(provider_config_to_json(c)).reasoning_effort == c.reasoning_effort);
    c.synthetic.concentration = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = synthetic_model("m", 1.0, 0);
    c.temperature = 3.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = synthetic_model("m", 1.0, 0);
    c.verbosity = "extreme";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(provider_config_from_json({{"id", "x"}, {"provider", "oracle"}}), ConfigError);
}

}

namespace {

class MockServer {
public:
    MockServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Server& server() { return server_; }
    [[nodiscard]] std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig live_config(const std::string& endpoint, ApiStyle style = ApiStyle::openai) {
    ProviderConfig c;
    c.kind = ProviderKind::live;
    c.model_id = "mock";
    c.remote_model = "mock-model-1";
    c.temperature = 0.7;
    c.live.endpoint = endpoint;
    c.live.api_key_env = "DISPO_TEST_KEY";
    c.live.api_style = style;
    c.live.max_retries = 3;
    c.live.backoff_ms = 1;
    c.live.timeout_s = 5;
    return c;
}

nlohmann::json openai_reply(const std::string& content) {
    return {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
}

}  // namespace

TEST_SUITE("live provider") {

TEST_CASE("missing credential is a configuration error naming the variable") {
    ::unsetenv("DISPO_TEST_MISSING_KEY");
    auto c = live_config("http://127.0.0.1:9/v1/chat/completions");
    c.live.api_key_env = "DISPO_TEST_MISSING_KEY";
    try {
        make_provider(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("DISPO_TEST_MISSING_KEY") != std::string::npos);
    }
}

TEST_CASE("openai-style request, retry on 5xx and parse") {
    ::setenv("DISPO_TEST_KEY", "secret-1", 1);
    MockServer mock;
    std::mutex m;
    int calls = 0;
    nlohmann::json last_body;
    std::string last_auth;
    mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(m);
        ++calls;
        last_body = nlohmann::json::parse(req.body);
        last_auth = req.get_header_value("Authorization");
        if (calls == 1) {
            res.status = 503;
            res.set_content("busy", "text/plain");
            return;
        }
        res.set_content(openai_reply(answer_block({3, 1, 2})).dump(), "application/json");
    });
    const auto pool = flat_pool(30);
    auto provider = make_provider(live_config(mock.url("/v1/chat/completions")));
    const auto perm = permute(pool, 1);
    const auto r = provider->elicit({pool, perm, "Basic", "be brief", 3});
    CHECK(r.selected == std::vector<int>{3, 1, 2});
    CHECK(calls == 2);
    CHECK(last_auth == "Bearer secret-1");
    CHECK(last_body["model"] == "mock-model-1");
    CHECK(last_body["temperature"] == 0.7);
    CHECK(last_body["messages"][0]["role"] == "system");
    CHECK(last_body["messages"][0]["content"] == "be brief");
    CHECK(last_body["messages"][1]["content"].get<std::string>().find("[1] Flat constraint number 1") !=
          std::string::npos);
}

TEST_CASE("anthropic-style request") {
    ::setenv("DISPO_TEST_KEY", "secret-2", 1);
    MockServer mock;
    std::string key;
    nlohmann::json body;
    mock.server().Post("/v1/messages", [&](const httplib::Request& req, httplib::Response& res) {
        key = req.get_header_value("x-api-key");
        body = nlohmann::json::parse(req.body);
        const nlohmann::json reply = {{"content", {{{"type", "text"}, {"text", answer_block({5, 6})}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const auto pool = flat_pool(30);
    auto provider = make_provider(live_config(mock.url("/v1/messages"), ApiStyle::anthropic));
    const auto r = provider->elicit({pool, permute(pool, 2), "Basic", "sys", 2});
    CHECK(r.selected == std::vector<int>{5, 6});
    CHECK(key == "secret-2");
    CHECK(body["system"] == "sys");
    CHECK(body["max_tokens"] == 16000);
}

TEST_CASE("client errors are not retried, exhausted retries are transport errors") {
    ::setenv("DISPO_TEST_KEY", "k", 1);
    MockServer mock;
    int calls = 0;
    mock.server().Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 400;
    });
    mock.server().Post("/down", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    const auto pool = flat_pool(10);
    try {
        make_provider(live_config(mock.url("/bad")))->elicit({pool, permute(pool, 1), "Basic", "", 2});
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK_FALSE(e.retryable());
    }
    CHECK(calls == 1);
    calls = 0;
    try {
        make_provider(live_config(mock.url("/down")))->elicit({pool, permute(pool, 1), "Basic", "", 2});
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.retryable());
    }
    CHECK(calls == 4);
}

TEST_CASE("contract violations in live replies surface as selection errors") {
    ::setenv("DISPO_TEST_KEY", "k", 1);
    MockServer mock;
    mock.server().Post("/short", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(openai_reply(answer_block(range_ids(1, 19))).dump(), "application/json");
    });
    mock.server().Post("/garbage", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"unexpected\": true}", "application/json");
    });
    const auto pool = placeholder_pool();
    try {
        make_provider(live_config(mock.url("/short")))->elicit({pool, permute(pool, 1), "Basic", "", 20});
        FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
        CHECK(e.kind() == SelectionError::Kind::count_mismatch);
        CHECK(std::string(e.what()).find("selection count mismatch") != std::string::npos);
    }
    try {
        make_provider(live_config(mock.url("/garbage")))->elicit({pool, permute(pool, 1), "Basic", "", 20});
        FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
        CHECK(e.raw_payload() == "{\"unexpected\": true}");
    }
}

}
