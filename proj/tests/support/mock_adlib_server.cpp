#include "mock_adlib_server.hpp"

#include <atomic>
#include <random>

#include <httplib.h>
#include <json.hpp>

namespace proxyaudit::testing {

struct MockAdLibServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::map<std::string, std::vector<std::string>> listings;  // date -> ids
    std::map<std::pair<std::string, std::string>, std::optional<std::string>> reports;
    std::map<std::pair<std::string, std::string>, int> overrides;
    mutable std::mutex mu;
    std::vector<Clock::time_point> arrivals;
    std::size_t throttle_every = 0;
    std::size_t report_requests = 0;
    std::size_t throttled = 0;
};

MockAdLibServer::MockAdLibServer(const demo::AdCorpus& corpus) : impl_(std::make_unique<Impl>()) {
    for (const auto& [date, ids] : corpus.listings) impl_->listings[adlib::format_date(date)] = ids;
    for (const auto& [key, payload] : corpus.reports)
        impl_->reports[{key.first, adlib::format_date(key.second)}] = payload;

    auto* im = impl_.get();
    im->server.set_logger([im](const httplib::Request&, const httplib::Response&) {});
    im->server.Get("/advertisers", [im](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(im->mu);
        im->arrivals.push_back(Clock::now());
        auto it = im->listings.find(req.get_param_value("date"));
        nlohmann::json ids = it == im->listings.end() ? nlohmann::json::array() : nlohmann::json(it->second);
        res.set_content(ids.dump(), "application/json");
    });
    im->server.Get("/report", [im](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(im->mu);
        im->arrivals.push_back(Clock::now());
        auto key = std::make_pair(req.get_param_value("advertiser_id"), req.get_param_value("date"));
        ++im->report_requests;
        if (im->throttle_every && im->report_requests % im->throttle_every == 0) {
            ++im->throttled;
            res.status = 429;
            return;
        }
        if (auto o = im->overrides.find(key); o != im->overrides.end()) {
            res.status = o->second;
            return;
        }
        auto it = im->reports.find(key);
        if (it == im->reports.end()) {
            res.status = 404;
        } else if (!it->second) {
            res.status = 204;
        } else {
            res.set_content(*it->second, "application/json");
        }
    });
    im->port = im->server.bind_to_any_port("127.0.0.1");
    if (im->port <= 0) throw std::runtime_error("mock server: cannot bind");
    im->thread = std::thread([im] { im->server.listen_after_bind(); });
    im->server.wait_until_ready();
}

MockAdLibServer::~MockAdLibServer() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void MockAdLibServer::set_throttle_every(std::size_t n) {
    std::lock_guard lock(impl_->mu);
    impl_->throttle_every = n;
}

void MockAdLibServer::set_status_override(const std::string& advertiser_id, const std::string& date, int status) {
    std::lock_guard lock(impl_->mu);
    impl_->overrides[{advertiser_id, date}] = status;
}

std::string MockAdLibServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::vector<MockAdLibServer::Clock::time_point> MockAdLibServer::arrivals() const {
    std::lock_guard lock(impl_->mu);
    return impl_->arrivals;
}

std::size_t MockAdLibServer::throttled() const {
    std::lock_guard lock(impl_->mu);
    return impl_->throttled;
}

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    auto base = std::filesystem::temp_directory_path();
    for (;;) {
        auto p = base / ("proxyaudit_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        if (std::filesystem::create_directory(p)) {
            path_ = p;
            return;
        }
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace proxyaudit::testing
