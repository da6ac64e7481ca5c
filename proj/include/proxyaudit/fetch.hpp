#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "proxyaudit/adlib.hpp"

namespace proxyaudit::adlib {

// Spaces request starts at least `min_delay` apart and caps the number of
// requests in flight. acquire() blocks; the returned permit releases the
// in-flight slot when destroyed.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    RateLimiter(std::chrono::milliseconds min_delay, std::size_t max_in_flight = 1);

    class Permit {
    public:
        Permit() = default;
        Permit(Permit&& o) noexcept : owner_(std::exchange(o.owner_, nullptr)) {}
        Permit& operator=(Permit&& o) noexcept;
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
        ~Permit() { release(); }
        void release();

    private:
        friend class RateLimiter;
        explicit Permit(RateLimiter* owner) : owner_(owner) {}
        RateLimiter* owner_ = nullptr;
    };

    Permit acquire();

    std::chrono::milliseconds min_delay() const noexcept { return min_delay_; }
    // Start instants of every granted permit, in grant order.
    std::vector<Clock::time_point> start_log() const;

private:
    void release_slot();

    std::chrono::milliseconds min_delay_;
    std::size_t max_in_flight_;
    mutable std::mutex mu_;
    std::mutex start_mu_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
    std::optional<Clock::time_point> last_start_;
    std::vector<Clock::time_point> starts_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_backoff{200};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{10'000};

    std::chrono::milliseconds backoff(int attempt) const;  // attempt >= 1
};

struct MissingData {};

struct TransportFailure {
    int status = 0;  // HTTP status, 0 for connection-level failures
    std::string message;
    bool retryable = true;
};

using FetchResponse = std::variant<std::string, MissingData, TransportFailure>;

// Source of raw ad-library payloads.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResponse advertisers(Date date) = 0;
    virtual FetchResponse report(const std::string& advertiser_id, Date date) = 0;
};

// Reads `advertisers_{date}.json` and `{advertiser_id}_{date}.json` files;
// a `{advertiser_id}_{date}.missing` marker means the library reported no
// targeting data for that request.
class ReplayFetcher final : public Fetcher {
public:
    explicit ReplayFetcher(std::filesystem::path dir);
    FetchResponse advertisers(Date date) override;
    FetchResponse report(const std::string& advertiser_id, Date date) override;

private:
    std::filesystem::path dir_;
};

// HTTP client for an endpoint speaking the canonical schema:
//   GET /advertisers?date=D           -> 200 JSON array of ids
//   GET /report?advertiser_id=X&date=D -> 200 payload, 204 no targeting data
// 429 and 5xx are retryable, other statuses are not.
class HttpFetcher final : public Fetcher {
public:
    explicit HttpFetcher(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(10));
    ~HttpFetcher() override;
    FetchResponse advertisers(Date date) override;
    FetchResponse report(const std::string& advertiser_id, Date date) override;

private:
    FetchResponse get(const std::string& path);
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct FetchStats {
    std::size_t requests = 0;  // logical requests (not attempts)
    std::size_t attempts = 0;
    std::size_t retries = 0;
    std::size_t missing = 0;
    std::size_t failures = 0;
};

struct FailureRecord {
    std::string what;  // "advertisers" or advertiser id
    Date date{};
    TransportFailure last;
    int attempts = 0;
};

struct ReportOutcome {
    std::variant<std::string, MissingData, FailureRecord> result;
    int attempts = 0;
    std::chrono::milliseconds latency{0};  // first attempt start to final response
};

// Combines a fetcher with a shared rate limiter and retry policy. Sleeping
// is injectable for tests.
class AdLibraryClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    AdLibraryClient(Fetcher& fetcher, RateLimiter& limiter, RetryPolicy policy,
                    Sleeper sleeper = {});

    // Deduplicated advertiser ids in first-seen order. Transport failures
    // are retried and then thrown as BackendError; malformed payloads throw
    // ParseError carrying the payload hash.
    std::vector<std::string> fetch_advertiser_list(Date date);

    // Never throws for per-request problems: failures become FailureRecord.
    ReportOutcome fetch_targeting_report(const std::string& advertiser_id, Date date);

    const FetchStats& stats() const noexcept { return stats_; }

private:
    FetchResponse with_retries(const std::function<FetchResponse()>& call, int& attempts);

    Fetcher& fetcher_;
    RateLimiter& limiter_;
    RetryPolicy policy_;
    Sleeper sleep_;
    FetchStats stats_;
};

}  // namespace proxyaudit::adlib
