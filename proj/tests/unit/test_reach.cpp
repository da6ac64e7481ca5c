#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <fstream>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/numeric.hpp"
#include "proxyaudit/reach.hpp"
#include "mock_adlib_server.hpp"

using namespace proxyaudit;

namespace {

struct World {
    synth::Population pop;
    std::vector<AudienceSpec> audiences;
    std::vector<std::string> interests;
};

World make_world(std::size_t n_interests, std::size_t size = 3000) {
    synth::WorldConfig wc;
    wc.population_size = size;
    wc.rng_seed = 21;
    wc.activity_rate = 0.9;
    for (std::size_t i = 0; i < n_interests; ++i)
        wc.interests.push_back({"I" + std::to_string(i), "", 0.05 + 0.001 * static_cast<double>(i % 50),
                                {{AudiencePair::RD, 0.3}}});
    World w;
    w.pop = synth::generate_population(wc);
    std::vector<VoterRecord> recs;
    for (const auto& m : w.pop.members()) recs.push_back({m.voter_id, m.state, m.party, m.race});
    const char* labels[] = {"REP", "DEM", "WHITE", "BLACK", "HISPANIC"};
    for (std::size_t i = 0; i < 5; ++i)
        w.audiences.push_back(build_uniform_audience(recs, *AudienceSelector::parse(labels[i]), 400, i + 1));
    w.interests = w.pop.interest_ids();
    return w;
}

// Fails with a retryable error for the first `fail_first` calls per cell.
class FlakyBackend final : public ReachBackend {
public:
    FlakyBackend(const ReachBackend& inner, int fail_first) : inner_(inner), fail_first_(fail_first) {}
    std::string id() const override { return "flaky"; }
    ReachEstimate estimate(const AudienceSpec& a, const std::optional<std::string>& i) const override {
        ++calls;
        std::lock_guard lock(mu_);
        if (seen_[{a.label, i.value_or("")}]++ < fail_first_) throw BackendError("throttled", true);
        return inner_.estimate(a, i);
    }
    mutable std::atomic<int> calls{0};

private:
    const ReachBackend& inner_;
    int fail_first_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<std::string, std::string>, int> seen_;
};

class DeadBackend final : public ReachBackend {
public:
    std::string id() const override { return "dead"; }
    void check_ready() const override { throw BackendInitError("no credentials"); }
    ReachEstimate estimate(const AudienceSpec&, const std::optional<std::string>&) const override { return {}; }
};

}  // namespace

TEST_CASE("synthetic backend counts active members") {
    auto w = make_world(3);
    SyntheticBackend exact(w.pop, EstimateModel::exact());
    const auto& rep = w.audiences[0];
    std::int64_t total = 0, with = 0;
    auto idx = *w.pop.interest_index("I0");
    for (const auto& id : rep.member_ids) {
        const auto* m = w.pop.find(id);
        if (!m->active) continue;
        ++total;
        with += w.pop.holds(*m, idx);
    }
    CHECK(exact.estimate(rep, std::nullopt).count == total);
    CHECK(exact.estimate(rep, "I0").count == with);
    CHECK_FALSE(exact.estimate(rep, "I0").rounded);
    CHECK(exact.estimate(rep, std::string("missing")).count == 0);  // unknown interest: nobody holds it
}

TEST_CASE("rounded estimates stay within 5 percent and preserve order") {
    auto w = make_world(20);
    SyntheticBackend exact(w.pop, EstimateModel::exact());
    SyntheticBackend rounded(w.pop, EstimateModel::rounded(2));
    for (const auto& a : w.audiences) {
        for (const auto& i : w.interests) {
            auto e = exact.estimate(a, i).count;
            auto r = rounded.estimate(a, i);
            CHECK(r.rounded);
            if (e >= 10) CHECK(std::abs(static_cast<double>(r.count - e)) <= 0.05 * static_cast<double>(e));
            CHECK(r.count <= rounded.estimate(a, std::nullopt).count);
        }
    }
    for (std::int64_t a = 0; a < 5000; a += 7) CHECK(round_sig_figs(a, 2) <= round_sig_figs(a + 7, 2));
}

TEST_CASE("gaussian estimates are deterministic and capped") {
    auto w = make_world(5);
    SyntheticBackend g1(w.pop, EstimateModel::gaussian(0.3, 5));
    SyntheticBackend g2(w.pop, EstimateModel::gaussian(0.3, 5));
    for (const auto& a : w.audiences)
        for (const auto& i : w.interests) {
            CHECK(g1.estimate(a, i).count == g2.estimate(a, i).count);
            CHECK(g1.estimate(a, i).count <= g1.estimate(a, std::nullopt).count);
            CHECK(g1.estimate(a, i).count >= 0);
        }
}

TEST_CASE("batch produces totals plus one cell per audience and interest") {
    auto w = make_world(200, 2000);
    SyntheticBackend b(w.pop, EstimateModel::rounded(2));
    std::size_t last = 0;
    BatchOptions opt;
    opt.progress = [&](std::size_t done, std::size_t) { last = done; };
    auto m = batch_estimate(b, w.audiences, w.interests, opt);
    CHECK(m.size() == 1005);
    CHECK(m.error_count() == 0);
    CHECK(last == 1005);
    CHECK(m.audiences().size() == 5);
    CHECK(m.interests().size() == 200);
}

TEST_CASE("replay misses become per-cell errors") {
    auto w = make_world(4);
    SyntheticBackend exact(w.pop, EstimateModel::exact());
    std::map<std::pair<std::string, std::string>, std::int64_t> values;
    for (const auto& a : w.audiences) {
        values[{a.label, ""}] = exact.estimate(a, std::nullopt).count;
        for (const auto& i : w.interests) values[{a.label, i}] = exact.estimate(a, i).count;
    }
    values.erase({"REP", "I1"});
    values.erase({"DEM", "I2"});
    values.erase({"BLACK", "I3"});
    ReplayBackend replay(values);
    auto m = batch_estimate(replay, w.audiences, w.interests);
    CHECK(m.size() == 25);
    CHECK(m.error_count() == 3);
    CHECK(m.find("REP", "I1")->error.find("no fixture") != std::string::npos);
    CHECK(m.find("REP", "I0")->count == values.at({"REP", "I0"}));
}

TEST_CASE("retryable failures are retried per cell") {
    auto w = make_world(3);
    SyntheticBackend exact(w.pop, EstimateModel::exact());
    FlakyBackend once(exact, 1);
    BatchOptions opt;
    opt.max_retries = 2;
    auto m = batch_estimate(once, w.audiences, w.interests, opt);
    CHECK(m.error_count() == 0);
    CHECK(once.calls.load() == 40);

    FlakyBackend always(exact, 100);
    auto bad = batch_estimate(always, w.audiences, w.interests, opt);
    CHECK(bad.error_count() == 20);
    CHECK(always.calls.load() == 60);
}

TEST_CASE("backend init failure aborts the batch") {
    auto w = make_world(2);
    DeadBackend dead;
    CHECK_THROWS_AS(batch_estimate(dead, w.audiences, w.interests), BackendInitError);
}

TEST_CASE("checkpoint resume skips finished cells") {
    testing::TempDir tmp;
    auto w = make_world(6);
    SyntheticBackend exact(w.pop, EstimateModel::exact());
    BatchOptions opt;
    opt.checkpoint = tmp / "ck.csv";
    auto first = batch_estimate(exact, w.audiences, w.interests, opt);

    FlakyBackend counter(exact, 0);
    auto second = batch_estimate(counter, w.audiences, w.interests, opt);
    CHECK(counter.calls.load() == 0);
    CHECK(second.size() == first.size());
    for (const auto& [k, c] : first.cells()) CHECK(second.find(k.first, k.second)->count == c.count);

    // Drop the last five logged cells: only those are re-queried.
    auto lines = csv::read_lines(tmp / "ck.csv");
    {
        std::ofstream out(tmp / "ck.csv", std::ios::binary | std::ios::trunc);
        for (std::size_t i = 0; i + 5 < lines.size(); ++i) out << lines[i] << "\n";
    }
    FlakyBackend counter2(exact, 0);
    auto third = batch_estimate(counter2, w.audiences, w.interests, opt);
    CHECK(counter2.calls.load() == 5);
    CHECK(third.error_count() == 0);
}

TEST_CASE("threaded batch equals serial batch") {
    auto w = make_world(30);
    SyntheticBackend g(w.pop, EstimateModel::gaussian(0.1, 3));
    auto serial = batch_estimate(g, w.audiences, w.interests);
    BatchOptions opt;
    opt.threads = 4;
    auto par = batch_estimate(g, w.audiences, w.interests, opt);
    REQUIRE(par.size() == serial.size());
    for (const auto& [k, c] : serial.cells()) CHECK(par.find(k.first, k.second)->count == c.count);
}

TEST_CASE("matrix save/load and coverage fraction") {
    testing::TempDir tmp;
    auto w = make_world(4);
    SyntheticBackend exact(w.pop, EstimateModel::exact());
    auto m = batch_estimate(exact, w.audiences, w.interests);
    m.save(tmp / "m.csv");
    CHECK(csv::read_lines(tmp / "m.csv")[0] == "audience_label,interest_id,count");
    auto back = EstimateMatrix::load(tmp / "m.csv");
    CHECK(back.size() == m.size());
    for (const auto& [k, c] : m.cells()) CHECK(back.find(k.first, k.second)->count == c.count);

    auto replay = ReplayBackend::load(tmp / "m.csv");
    const auto& rep = w.audiences[0];
    double f = coverage_fraction(replay, rep, "I0");
    CHECK(f == doctest::Approx(static_cast<double>(*m.find("REP", "I0")->count) / *m.total("REP")->count));
}
