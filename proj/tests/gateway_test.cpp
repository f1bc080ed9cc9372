#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "knowrank/gateway.hpp"
#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "prompt_fixture.hpp"

using namespace knowrank;
using gateway::Backend;
using gateway::CompletionConfig;
using gateway::Gateway;
using gateway::HttpRequest;
using gateway::HttpResponse;

namespace {

std::string fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("knowrank_gw_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string chat_body(const std::string& content) {
    nlohmann::json j;
    j["choices"] = nlohmann::json::array();
    j["choices"].push_back({{"message", {{"role", "assistant"}, {"content", content}}}});
    return j.dump();
}

/// Scripted transport: returns canned responses in order and records every
/// request with a timestamp.
class FakeTransport : public gateway::Transport {
public:
    explicit FakeTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}

    HttpResponse post(const HttpRequest& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        requests.push_back(request);
        times.push_back(std::chrono::steady_clock::now());
        if (calls_ < script_.size()) return script_[calls_++];
        return script_.back();
    }

    std::vector<HttpRequest> requests;
    std::vector<std::chrono::steady_clock::time_point> times;

private:
    std::vector<HttpResponse> script_;
    size_t calls_ = 0;
    std::mutex mutex_;
};

/// Transport that tracks how many posts are in flight at once.
class ConcurrencyProbe : public gateway::Transport {
public:
    HttpResponse post(const HttpRequest&) override {
        int now = ++in_flight_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --in_flight_;
        ++total_;
        return {200, chat_body("[]"), ""};
    }

    int peak() const { return peak_.load(); }
    int total() const { return total_.load(); }

private:
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
    std::atomic<int> total_{0};
};

CompletionConfig test_config() {
    CompletionConfig config;
    config.backoff_ms = 1;  // keep retry tests fast
    config.api_key_env = "KNOWRANK_TEST_KEY";
    return config;
}

}  // namespace

TEST_CASE("backend names parse, including the short mock alias") {
    CHECK(gateway::backend_from_name("http") == Backend::http);
    CHECK(gateway::backend_from_name("replay") == Backend::replay);
    CHECK(gateway::backend_from_name("mock") == Backend::mock_oracle);
    CHECK(gateway::backend_from_name("mock_oracle") == Backend::mock_oracle);
    CHECK_THROWS_AS(gateway::backend_from_name("psychic"), Error);
}

TEST_CASE("config invariants are enforced") {
    auto dir = fresh_dir("cfg");
    auto bad_temp = test_config();
    bad_temp.temperature = -0.5;
    CHECK_THROWS_AS(Gateway(bad_temp, dir), Error);
    auto bad_attempts = test_config();
    bad_attempts.max_attempts = 0;
    CHECK_THROWS_AS(Gateway(bad_attempts, dir), Error);
}

TEST_CASE("cache key is a function of model, temperature and prompt") {
    auto base = gateway::cache_key("gpt-3.5-turbo", 0.0, "hello");
    CHECK(base == gateway::cache_key("gpt-3.5-turbo", 0.0, "hello"));
    CHECK(base != gateway::cache_key("gpt-4", 0.0, "hello"));
    CHECK(base != gateway::cache_key("gpt-3.5-turbo", 0.5, "hello"));
    CHECK(base != gateway::cache_key("gpt-3.5-turbo", 0.0, "goodbye"));
    CHECK(base.size() == 64);  // hex SHA-256
}

TEST_CASE("http completion posts the chat payload and parses the content") {
    setenv("KNOWRANK_TEST_KEY", "sk-test-123", 1);
    FakeTransport transport({{200, chat_body("ranked answer"), ""}});
    auto dir = fresh_dir("http_ok");
    Gateway gw(test_config(), dir, &transport);
    auto text = gw.complete("rank these", Backend::http);
    CHECK(text == "ranked answer");

    REQUIRE(transport.requests.size() == 1);
    const auto& req = transport.requests[0];
    CHECK(req.url == "https://api.openai.com/v1/chat/completions");
    CHECK(req.api_key == "sk-test-123");
    auto body = nlohmann::json::parse(req.body);
    CHECK(body.at("model") == "gpt-3.5-turbo");
    CHECK(body.at("temperature") == 0.0);
    REQUIRE(body.at("messages").size() == 1);
    CHECK(body["messages"][0].at("role") == "user");
    CHECK(body["messages"][0].at("content") == "rank these");
}

TEST_CASE("429 and 5xx retry with doubling backoff, then surface errors") {
    setenv("KNOWRANK_TEST_KEY", "sk-test-123", 1);

    SUBCASE("recovers when a retry succeeds") {
        FakeTransport transport({{429, "slow down", ""},
                                 {500, "boom", ""},
                                 {200, chat_body("third time lucky"), ""}});
        auto dir = fresh_dir("retry_ok");
        Gateway gw(test_config(), dir, &transport);
        CHECK(gw.complete("p", Backend::http) == "third time lucky");
        CHECK(transport.requests.size() == 3);
    }

    SUBCASE("exhausted 429 attempts raise RateLimited") {
        FakeTransport transport({{429, "slow down", ""}});
        auto dir = fresh_dir("retry_429");
        auto config = test_config();
        config.max_attempts = 3;
        Gateway gw(config, dir, &transport);
        try {
            gw.complete("p", Backend::http);
            FAIL("expected RateLimited");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::RateLimited);
        }
        CHECK(transport.requests.size() == 3);
    }

    SUBCASE("transport failures raise Timeout after retries") {
        FakeTransport transport({{0, "", "connection timed out"}});
        auto dir = fresh_dir("retry_timeout");
        auto config = test_config();
        config.max_attempts = 2;
        Gateway gw(config, dir, &transport);
        try {
            gw.complete("p", Backend::http);
            FAIL("expected Timeout");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Timeout);
        }
        CHECK(transport.requests.size() == 2);
    }

    SUBCASE("a 400 fails immediately without retry") {
        FakeTransport transport({{400, "bad request", ""}});
        auto dir = fresh_dir("retry_400");
        Gateway gw(test_config(), dir, &transport);
        CHECK_THROWS_AS(gw.complete("p", Backend::http), Error);
        CHECK(transport.requests.size() == 1);
    }

    SUBCASE("backoff doubles between attempts") {
        FakeTransport transport({{429, "", ""}, {429, "", ""}, {200, chat_body("ok"), ""}});
        auto dir = fresh_dir("retry_backoff");
        auto config = test_config();
        config.backoff_ms = 30;
        Gateway gw(config, dir, &transport);
        gw.complete("p", Backend::http);
        REQUIRE(transport.times.size() == 3);
        auto gap1 = std::chrono::duration_cast<std::chrono::milliseconds>(transport.times[1] -
                                                                          transport.times[0])
                        .count();
        auto gap2 = std::chrono::duration_cast<std::chrono::milliseconds>(transport.times[2] -
                                                                          transport.times[1])
                        .count();
        CHECK(gap1 >= 25);
        CHECK(gap2 >= 55);  // second wait is doubled
    }
}

TEST_CASE("http responses land in the replay cache and replay serves them") {
    setenv("KNOWRANK_TEST_KEY", "sk-test-123", 1);
    FakeTransport transport({{200, chat_body("cached answer"), ""}});
    auto dir = fresh_dir("replay");
    auto config = test_config();
    {
        Gateway gw(config, dir, &transport);
        CHECK(gw.complete("prompt A", Backend::http) == "cached answer");
    }
    // A fresh gateway with no transport serves the same completion offline.
    Gateway offline(config, dir);
    CHECK(offline.complete("prompt A", Backend::replay) == "cached answer");

    // The cache file carries the prompt hash and response, and no API key.
    auto key = gateway::cache_key(config.model, config.temperature, "prompt A");
    auto raw = util::read_file(dir + "/" + key + ".json");
    auto entry = nlohmann::json::parse(raw);
    CHECK(entry.at("response_text") == "cached answer");
    CHECK(entry.at("model") == "gpt-3.5-turbo");
    CHECK(raw.find("sk-test-123") == std::string::npos);

    // Unknown prompts miss.
    try {
        offline.complete("prompt B", Backend::replay);
        FAIL("expected CacheMiss");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CacheMiss);
    }
}

TEST_CASE("mock oracle follows the pack's knowledge and caches its answer") {
    auto catalog = testfix::fixture_catalog();
    auto task = testfix::fixture_task();

    SUBCASE("u2i order wins when present") {
        auto pack = testfix::fixture_pack(prompt::TemplateId::his_cand_u2i);
        auto text = gateway::mock_oracle_rank(task, pack, catalog);
        auto arr = nlohmann::json::parse(text);
        REQUIRE(arr.is_array());
        REQUIRE(arr.size() == task.candidates.size());
        CHECK(arr[0] == "Moana (2016)");  // head of the fixture u2i list
        CHECK(arr[1] == "Balto (1995)");
    }

    SUBCASE("anchor scores rank candidates when only i2i is present") {
        auto pack = testfix::fixture_pack(prompt::TemplateId::his_cand_i2i);
        auto text = gateway::mock_oracle_rank(task, pack, catalog);
        auto arr = nlohmann::json::parse(text);
        REQUIRE(arr.size() == task.candidates.size());
        // c01 holds the best anchor score (0.91) in the fixture blocks.
        CHECK(arr[0] == "Moana (2016)");
        // Unmentioned candidates keep their original relative order at the tail.
        std::vector<std::string> tail(arr.end() - 3, arr.end());
        CHECK(tail == std::vector<std::string>{"Leaving Las Vegas (1995)", "Now and Then (1995)",
                                               "Persuasion (1995)"});
    }

    SUBCASE("an empty pack echoes the candidate order") {
        auto pack = testfix::fixture_pack(prompt::TemplateId::none);
        auto text = gateway::mock_oracle_rank(task, pack, catalog);
        auto arr = nlohmann::json::parse(text);
        REQUIRE(arr.size() == task.candidates.size());
        for (size_t i = 0; i < task.candidates.size(); ++i)
            CHECK(arr[i] == catalog.title_or_id(task.candidates[i]));
    }

    SUBCASE("gateway dispatch requires task context and writes the cache") {
        auto dir = fresh_dir("mock");
        auto config = test_config();
        Gateway gw(config, dir);
        CHECK_THROWS_AS(gw.complete("p", Backend::mock_oracle), Error);
        auto pack = testfix::fixture_pack(prompt::TemplateId::his_cand_u2i);
        auto text = gw.complete("p", Backend::mock_oracle, &task, &pack, &catalog);
        CHECK(gw.complete("p", Backend::replay) == text);
    }
}

TEST_CASE("complete_many respects the concurrency limit and captures errors") {
    setenv("KNOWRANK_TEST_KEY", "sk-test-123", 1);

    SUBCASE("at most config.concurrency requests are in flight") {
        ConcurrencyProbe probe;
        auto dir = fresh_dir("many_limit");
        auto config = test_config();
        config.concurrency = 3;
        Gateway gw(config, dir, &probe);
        std::vector<std::string> prompts;
        for (int i = 0; i < 12; ++i) prompts.push_back("p" + std::to_string(i));
        auto result = gw.complete_many(prompts, Backend::http);
        CHECK(result.failures == 0);
        CHECK(probe.total() == 12);
        CHECK(probe.peak() <= 3);
        CHECK(probe.peak() >= 2);  // actually parallel
    }

    SUBCASE("per-prompt failures are captured, not thrown") {
        auto dir = fresh_dir("many_errors");
        Gateway gw(test_config(), dir);  // replay with an empty cache
        auto result = gw.complete_many({"a", "b"}, Backend::replay);
        CHECK(result.failures == 2);
        REQUIRE(result.errors.size() == 2);
        CHECK(result.errors[0].find("CacheMiss") != std::string::npos);
        CHECK(result.texts[0].empty());
    }
}

// ---------------------------------------------------------------------------
// parse_ranking

namespace {

const std::vector<std::string> kTitles = {
    "Moana (2016)",           "Sudden Death (1995)", "Sabrina (1995)",
    "Tom and Huck (1995)",    "Balto (1995)",        "Nixon (1995)",
    "Cutthroat Island (1995)"};

bool is_permutation_of_all(const std::vector<int>& order, size_t n) {
    if (order.size() != n) return false;
    std::set<int> seen(order.begin(), order.end());
    return seen.size() == n && *seen.begin() == 0 && *seen.rbegin() == static_cast<int>(n) - 1;
}

}  // namespace

TEST_CASE("a clean full ranking maps to the exact permutation") {
    std::string raw = R"rs(["Balto (1995)", "Moana (2016)", "Nixon (1995)", "Sabrina (1995)",
        "Sudden Death (1995)", "Tom and Huck (1995)", "Cutthroat Island (1995)"])rs";
    auto list = gateway::parse_ranking(raw, kTitles);
    CHECK(list.order == std::vector<int>{4, 0, 5, 2, 1, 3, 6});
    CHECK(list.parse_report.matched == 7);
    CHECK(list.parse_report.fuzzy == 0);
    CHECK(list.parse_report.missing == 0);
    CHECK(list.parse_report.hallucinated == 0);
    CHECK(list.parse_report.array_found);
}

TEST_CASE("prose and code fences around the array are tolerated") {
    std::string raw = "Sure! Here is my ranking:\n```json\n[\"Nixon (1995)\", \"Moana (2016)\"]\n"
                      "```\nHope that helps.";
    auto list = gateway::parse_ranking(raw, kTitles);
    CHECK(list.parse_report.array_found);
    CHECK(list.order[0] == 5);
    CHECK(list.order[1] == 0);
    CHECK(is_permutation_of_all(list.order, kTitles.size()));
    CHECK(list.parse_report.missing == 5);
}

TEST_CASE("thirty adversarial responses always yield a total permutation") {
    // Responses covering: clean output, fences, prose, case changes, year
    // stripping, article reordering, duplicates, hallucinations, numbering,
    // truncation, empty/garbage output, nested arrays, weird whitespace.
    const std::vector<std::string> adversarial = {
        R"rs(["Moana (2016)", "Sudden Death (1995)", "Sabrina (1995)", "Tom and Huck (1995)", "Balto (1995)", "Nixon (1995)", "Cutthroat Island (1995)"])rs",
        "```json\n[\"Balto (1995)\", \"Nixon (1995)\"]\n```",
        "I would rank them as follows: [\"Nixon (1995)\", \"Moana (2016)\"] based on history.",
        R"rs(["moana (2016)", "SUDDEN DEATH (1995)", "sabrina (1995)"])rs",
        R"rs(["Moana", "Sudden Death", "Sabrina"])rs",
        R"rs(["Moana (2016)", "Moana (2016)", "Balto (1995)"])rs",
        R"rs(["The Godfather (1972)", "Moana (2016)"])rs",
        R"rs(["1. Moana (2016)", "2. Balto (1995)"])rs",
        R"rs([])rs",
        "no array here at all",
        "",
        R"rs([1, 2, 3])rs",
        R"rs([["Moana (2016)"], ["Balto (1995)"]])rs",
        "[\n  \"Balto (1995)\",\n  \"Moana (2016)\"\n]",
        R"rs(["  Moana (2016)  ", "Balto  (1995)"])rs",
        R"rs(["Cutthroat Island", "Tom and Huck", "Balto", "Nixon", "Sabrina", "Sudden Death", "Moana"])rs",
        "Answer: [\"Sabrina (1995)\"] and also [\"Nixon (1995)\"]",
        R"rs({"ranking": ["Moana (2016)", "Balto (1995)"]})rs",
        R"rs(["Moana (2016)", "Completely Made Up Movie (2001)", "Another Fake (1999)"])rs",
        R"rs(["Nixon"])rs",
        "The best movie is \"Moana (2016)\" for sure.",
        R"rs(["Moana (2016)"])rs" "\n" R"rs(["Balto (1995)"])rs",
        R"rs(["moana 2016", "balto 1995"])rs",
        R"rs(["MOANA (2016)", "BALTO (1995)", "NIXON (1995)", "SABRINA (1995)"])rs",
        R"rs(["Island, Cutthroat (1995)"])rs",
        R"rs([ "Tom  and  Huck  (1995)" ])rs",
        "….[\"Balto (1995)\"]….",
        R"rs(["Sudden Death (1995)", 42, "Moana (2016)"])rs",
        std::string(5000, 'x'),
        R"rs(["Huck and Tom (1995)", "Death Sudden (1995)"])rs",
    };
    for (size_t i = 0; i < adversarial.size(); ++i) {
        CAPTURE(i);
        auto list = gateway::parse_ranking(adversarial[i], kTitles);
        CHECK(is_permutation_of_all(list.order, kTitles.size()));
        int accounted = list.parse_report.matched + list.parse_report.fuzzy +
                        list.parse_report.missing;
        CHECK(accounted == static_cast<int>(kTitles.size()));
        CHECK(list.parse_report.hallucinated >= 0);
    }
}

TEST_CASE("responses with no array fall back to identity order, flagged") {
    auto list = gateway::parse_ranking("I cannot rank these movies.", kTitles);
    CHECK_FALSE(list.parse_report.array_found);
    std::vector<int> identity(kTitles.size());
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(list.order == identity);
    CHECK(list.parse_report.missing == static_cast<int>(kTitles.size()));
}

TEST_CASE("fuzzy matching handles reordered articles above the 0.8 overlap bar") {
    std::vector<std::string> titles = {"Matrix, The (1999)", "Toy Story (1995)"};
    auto list = gateway::parse_ranking(R"rs(["The Matrix", "Toy Story"])rs", titles);
    CHECK(list.order == std::vector<int>{0, 1});
    CHECK(list.parse_report.matched + list.parse_report.fuzzy == 2);
    CHECK(list.parse_report.fuzzy >= 1);  // "The Matrix" is not an exact match

    // Overlap at or below 0.8 does not match: single shared token out of two.
    auto miss = gateway::parse_ranking(R"rs(["Matrix Reloaded Part Two"])rs", titles);
    CHECK(miss.parse_report.hallucinated == 1);
    CHECK(miss.parse_report.missing == 2);
}

TEST_CASE("duplicate mentions keep the first and hallucinations are dropped") {
    std::vector<std::string> titles = {"A", "B", "C"};
    auto list = gateway::parse_ranking(R"rs(["B", "B", "Zebra Movie", "A"])rs", titles);
    CHECK(list.order == std::vector<int>{1, 0, 2});
    CHECK(list.parse_report.matched == 2);
    CHECK(list.parse_report.missing == 1);
    CHECK(list.parse_report.hallucinated == 1);
}

TEST_CASE("ranked lists round-trip through JSONL") {
    auto a = gateway::parse_ranking(R"rs(["Nixon (1995)", "Moana (2016)"])rs", kTitles);
    auto b = gateway::parse_ranking("nothing to see", kTitles);
    auto text = gateway::ranked_to_jsonl({a, b});
    auto back = gateway::ranked_from_jsonl(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].order == a.order);
    CHECK(back[0].parse_report.matched == a.parse_report.matched);
    CHECK(back[1].parse_report.array_found == false);
    CHECK(back[1].order == b.order);
}
