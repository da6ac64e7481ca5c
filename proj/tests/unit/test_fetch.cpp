#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <deque>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "proxyaudit/fetch.hpp"
#include "proxyaudit/ingest.hpp"
#include "mock_adlib_server.hpp"

using namespace proxyaudit;
using namespace proxyaudit::adlib;
using namespace std::chrono_literals;

namespace {

Date D(const char* s) { return *parse_date(s); }

// Scripted responses; the advertiser list is fixed.
class ScriptedFetcher final : public Fetcher {
public:
    std::deque<FetchResponse> script;
    std::vector<std::string> list{"A", "B", "A"};
    int calls = 0;
    FetchResponse advertisers(Date) override {
        ++calls;
        if (!script.empty()) {
            auto r = script.front();
            script.pop_front();
            if (!std::holds_alternative<std::string>(r)) return r;
        }
        return nlohmann::json(list).dump();
    }
    FetchResponse report(const std::string&, Date) override {
        ++calls;
        auto r = script.front();
        script.pop_front();
        return r;
    }
};

demo::AdCorpus small_corpus() {
    demo::CorpusConfig cc;
    cc.first_monday = D("2026-01-05");
    cc.weeks = 2;
    cc.advertisers_per_side = 3;
    cc.other_advertisers = 1;
    return demo::generate_ad_corpus(demo::demo_interests(20), cc);
}

}  // namespace

TEST_CASE("backoff schedule") {
    RetryPolicy p;
    CHECK(p.backoff(1) == 200ms);
    CHECK(p.backoff(2) == 400ms);
    CHECK(p.backoff(3) == 800ms);
    CHECK(p.backoff(7) == 10000ms);
    CHECK(p.backoff(40) == 10000ms);
}

TEST_CASE("rate limiter spaces request starts") {
    RateLimiter lim(30ms);
    for (int i = 0; i < 6; ++i) auto p = lim.acquire();
    auto log = lim.start_log();
    REQUIRE(log.size() == 6);
    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i] - log[i - 1] >= 30ms);
}

TEST_CASE("rate limiter spacing holds across threads") {
    RateLimiter lim(10ms, 3);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&] {
            for (int i = 0; i < 5; ++i) {
                auto p = lim.acquire();
                std::this_thread::sleep_for(2ms);
            }
        });
    for (auto& t : pool) t.join();
    auto log = lim.start_log();
    REQUIRE(log.size() == 20);
    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i] - log[i - 1] >= 10ms);
}

TEST_CASE("transient failures are retried with backoff") {
    ScriptedFetcher f;
    f.script = {TransportFailure{429, "slow down", true}, TransportFailure{503, "busy", true}, std::string("{}")};
    RateLimiter lim(0ms);
    std::vector<std::chrono::milliseconds> slept;
    AdLibraryClient client(f, lim, RetryPolicy{}, [&](std::chrono::milliseconds d) { slept.push_back(d); });
    auto out = client.fetch_targeting_report("A", D("2026-01-14"));
    CHECK(std::holds_alternative<std::string>(out.result));
    CHECK(out.attempts == 3);
    CHECK(slept == std::vector<std::chrono::milliseconds>{200ms, 400ms});
    CHECK(client.stats().retries == 2);
    CHECK(client.stats().requests == 1);
}

TEST_CASE("exhausted retries and non-retryable failures are recorded") {
    ScriptedFetcher f;
    RetryPolicy policy;
    policy.max_retries = 2;
    RateLimiter lim(0ms);
    AdLibraryClient client(f, lim, policy, [](auto) {});
    f.script = {TransportFailure{500, "x", true}, TransportFailure{500, "x", true}, TransportFailure{500, "x", true}};
    auto out = client.fetch_targeting_report("A", D("2026-01-14"));
    REQUIRE(std::holds_alternative<FailureRecord>(out.result));
    CHECK(std::get<FailureRecord>(out.result).attempts == 3);
    CHECK(std::get<FailureRecord>(out.result).last.status == 500);

    f.script = {TransportFailure{404, "gone", false}};
    auto gone = client.fetch_targeting_report("B", D("2026-01-14"));
    REQUIRE(std::holds_alternative<FailureRecord>(gone.result));
    CHECK(gone.attempts == 1);

    f.script = {MissingData{}};
    CHECK(std::holds_alternative<MissingData>(client.fetch_targeting_report("C", D("2026-01-14")).result));
    CHECK(client.stats().missing == 1);
    CHECK(client.stats().failures == 2);
}

TEST_CASE("advertiser listing deduplicates and surfaces failures") {
    ScriptedFetcher f;
    RateLimiter lim(0ms);
    RetryPolicy policy;
    policy.max_retries = 1;
    AdLibraryClient client(f, lim, policy, [](auto) {});
    CHECK(client.fetch_advertiser_list(D("2026-01-14")) == std::vector<std::string>{"A", "B"});
    f.script = {TransportFailure{503, "down", true}, TransportFailure{503, "down", true}};
    CHECK_THROWS_AS(client.fetch_advertiser_list(D("2026-01-14")), BackendError);
}

TEST_CASE("replay fetcher reads files and missing markers") {
    testing::TempDir tmp;
    auto corpus = small_corpus();
    demo::write_replay_dir(corpus, tmp.path());
    ReplayFetcher f(tmp.path());
    auto d = corpus.dates.front();
    auto list = f.advertisers(d);
    REQUIRE(std::holds_alternative<std::string>(list));
    CHECK(nlohmann::json::parse(std::get<std::string>(list)).size() == corpus.listings.at(d).size());
    for (const auto& [key, payload] : corpus.reports) {
        auto r = f.report(key.first, key.second);
        if (payload) {
            REQUIRE(std::holds_alternative<std::string>(r));
            CHECK(nlohmann::json::parse(std::get<std::string>(r)) == nlohmann::json::parse(*payload));
        } else {
            CHECK(std::holds_alternative<MissingData>(r));
        }
    }
    auto none = f.report("NOPE", d);
    REQUIRE(std::holds_alternative<TransportFailure>(none));
    CHECK_FALSE(std::get<TransportFailure>(none).retryable);
}

TEST_CASE("http fetcher against the mock server, with throttling") {
    auto corpus = small_corpus();
    testing::MockAdLibServer server(corpus);
    server.set_throttle_every(5);
    HttpFetcher http(server.endpoint());
    RateLimiter lim(0ms);
    RetryPolicy policy;
    policy.base_backoff = 1ms;
    AdLibraryClient client(http, lim, policy);
    auto result = run_ingest(client, corpus.dates);
    CHECK(server.throttled() > 0);
    CHECK(result.failures.empty());
    CHECK(result.parse_errors.empty());
    CHECK(result.dataset.log.requests == corpus.requests);
    CHECK(result.dataset.log.missing == corpus.missing);
    CHECK(result.dataset.windows.size() == corpus.windows);
    CHECK(client.stats().retries == server.throttled());

    server.set_status_override(corpus.reports.begin()->first.first, format_date(corpus.reports.begin()->first.second),
                               400);
    auto out = client.fetch_targeting_report(corpus.reports.begin()->first.first, corpus.reports.begin()->first.second);
    REQUIRE(std::holds_alternative<FailureRecord>(out.result));
    CHECK(std::get<FailureRecord>(out.result).last.status == 400);
}

TEST_CASE("connection failures are retryable") {
    HttpFetcher http("http://127.0.0.1:1", 1s);
    auto r = http.report("A", D("2026-01-14"));
    REQUIRE(std::holds_alternative<TransportFailure>(r));
    CHECK(std::get<TransportFailure>(r).status == 0);
    CHECK(std::get<TransportFailure>(r).retryable);
}
