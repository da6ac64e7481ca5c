#include "proxyaudit/fetch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "proxyaudit/numeric.hpp"

namespace proxyaudit::adlib {

RateLimiter::RateLimiter(std::chrono::milliseconds min_delay, std::size_t max_in_flight)
    : min_delay_(min_delay), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

RateLimiter::Permit& RateLimiter::Permit::operator=(Permit&& o) noexcept {
    if (this != &o) {
        release();
        owner_ = std::exchange(o.owner_, nullptr);
    }
    return *this;
}

void RateLimiter::Permit::release() {
    if (owner_) std::exchange(owner_, nullptr)->release_slot();
}

RateLimiter::Permit RateLimiter::acquire() {
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
        ++in_flight_;
    }
    // Starts are serialized and spaced from the previous actual start, so a
    // late wake-up can never pull the next start closer than min_delay.
    std::lock_guard start_lock(start_mu_);
    if (last_start_) std::this_thread::sleep_until(*last_start_ + min_delay_);
    auto now = Clock::now();
    last_start_ = now;
    std::lock_guard lock(mu_);
    starts_.push_back(now);
    return Permit(this);
}

void RateLimiter::release_slot() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_one();
}

std::vector<RateLimiter::Clock::time_point> RateLimiter::start_log() const {
    std::lock_guard lock(mu_);
    return starts_;
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
    double ms = static_cast<double>(base_backoff.count()) * std::pow(multiplier, std::max(0, attempt - 1));
    ms = std::min(ms, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

ReplayFetcher::ReplayFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {}

namespace {

std::optional<std::string> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

FetchResponse ReplayFetcher::advertisers(Date date) {
    auto p = dir_ / ("advertisers_" + format_date(date) + ".json");
    if (auto body = slurp(p)) return *body;
    return TransportFailure{404, "no replay file " + p.string(), false};
}

FetchResponse ReplayFetcher::report(const std::string& advertiser_id, Date date) {
    const auto stem = advertiser_id + "_" + format_date(date);
    if (std::filesystem::exists(dir_ / (stem + ".missing"))) return MissingData{};
    auto p = dir_ / (stem + ".json");
    if (auto body = slurp(p)) return *body;
    return TransportFailure{404, "no replay file " + p.string(), false};
}

struct HttpFetcher::Impl {
    explicit Impl(const std::string& endpoint) : client(endpoint) {}
    httplib::Client client;
};

HttpFetcher::HttpFetcher(std::string endpoint, std::chrono::seconds timeout)
    : impl_(std::make_unique<Impl>(endpoint)) {
    if (!impl_->client.is_valid()) throw ConfigError("invalid endpoint '" + endpoint + "'");
    impl_->client.set_connection_timeout(timeout);
    impl_->client.set_read_timeout(timeout);
}

HttpFetcher::~HttpFetcher() = default;

FetchResponse HttpFetcher::get(const std::string& path) {
    auto res = impl_->client.Get(path);
    if (!res) return TransportFailure{0, "connection error: " + httplib::to_string(res.error()), true};
    if (res->status == 200) return res->body;
    if (res->status == 204) return MissingData{};
    bool retryable = res->status == 429 || res->status >= 500;
    return TransportFailure{res->status, "HTTP " + std::to_string(res->status), retryable};
}

FetchResponse HttpFetcher::advertisers(Date date) {
    return get("/advertisers?date=" + format_date(date));
}

FetchResponse HttpFetcher::report(const std::string& advertiser_id, Date date) {
    return get("/report?advertiser_id=" + httplib::detail::encode_query_param(advertiser_id) +
               "&date=" + format_date(date));
}

AdLibraryClient::AdLibraryClient(Fetcher& fetcher, RateLimiter& limiter, RetryPolicy policy,
                                 Sleeper sleeper)
    : fetcher_(fetcher), limiter_(limiter), policy_(policy), sleep_(std::move(sleeper)) {
    if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

FetchResponse AdLibraryClient::with_retries(const std::function<FetchResponse()>& call, int& attempts) {
    ++stats_.requests;
    attempts = 0;
    while (true) {
        FetchResponse r;
        {
            auto permit = limiter_.acquire();
            r = call();
        }
        ++attempts;
        ++stats_.attempts;
        auto* fail = std::get_if<TransportFailure>(&r);
        if (!fail || !fail->retryable || attempts > policy_.max_retries) return r;
        ++stats_.retries;
        sleep_(policy_.backoff(attempts));
    }
}

std::vector<std::string> AdLibraryClient::fetch_advertiser_list(Date date) {
    int attempts = 0;
    auto r = with_retries([&] { return fetcher_.advertisers(date); }, attempts);
    if (auto* fail = std::get_if<TransportFailure>(&r)) {
        ++stats_.failures;
        throw BackendError("advertiser list for " + format_date(date) + ": " + fail->message +
                               " after " + std::to_string(attempts) + " attempt(s)",
                           fail->retryable);
    }
    if (std::holds_alternative<MissingData>(r)) return {};
    const auto& body = std::get<std::string>(r);
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_object() && j.contains("advertisers")) j = j["advertisers"];
    if (j.is_discarded() || !j.is_array())
        throw ParseError("advertisers", "malformed payload (sha256 " + sha256_hex(body).substr(0, 16) + ")");
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto& v : j) {
        if (!v.is_string() || v.get<std::string>().empty())
            throw ParseError("advertisers[]", "malformed payload (sha256 " + sha256_hex(body).substr(0, 16) + ")");
        if (seen.insert(v.get<std::string>()).second) ids.push_back(v.get<std::string>());
    }
    return ids;
}

ReportOutcome AdLibraryClient::fetch_targeting_report(const std::string& advertiser_id, Date date) {
    ReportOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    auto r = with_retries([&] { return fetcher_.report(advertiser_id, date); }, out.attempts);
    out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    if (auto* body = std::get_if<std::string>(&r)) {
        out.result = std::move(*body);
    } else if (std::holds_alternative<MissingData>(r)) {
        ++stats_.missing;
        out.result = MissingData{};
    } else {
        ++stats_.failures;
        out.result = FailureRecord{advertiser_id, date, std::get<TransportFailure>(r), out.attempts};
    }
    return out;
}

}  // namespace proxyaudit::adlib
