#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/skew_table.hpp"
#include "mock_adlib_server.hpp"

using namespace proxyaudit;

namespace {

// Audiences covering every active member of each group, so that a noiseless
// backend reproduces the exhaustive counts.
std::vector<AudienceSpec> full_audiences(const synth::Population& pop) {
    std::vector<VoterRecord> recs;
    for (const auto& m : pop.members()) recs.push_back({m.voter_id, m.state, m.party, m.race});
    std::vector<AudienceSpec> out;
    for (const char* label : {"REP", "DEM", "WHITE", "BLACK", "HISPANIC"})
        out.push_back(build_uniform_audience(recs, *AudienceSelector::parse(label), pop.size(), 1));
    return out;
}

}  // namespace

TEST_CASE("noiseless table equals exhaustive skew") {
    synth::WorldConfig wc;
    wc.population_size = 5000;
    wc.rng_seed = 8;
    wc.activity_rate = 0.85;
    for (int i = 0; i < 12; ++i)
        wc.interests.push_back({"I" + std::to_string(i), "Name " + std::to_string(i), 0.02 + 0.01 * i,
                                {{AudiencePair::RD, -0.5 + 0.09 * i}, {AudiencePair::WB, 0.3}}});
    auto pop = synth::generate_population(wc);
    SyntheticBackend exact(pop, EstimateModel::exact());
    auto matrix = batch_estimate(exact, full_audiences(pop), pop.interest_ids());
    std::map<std::string, std::string> names;
    for (std::size_t i = 0; i < pop.interest_ids().size(); ++i) names[pop.interest_ids()[i]] = pop.interest_names()[i];
    auto table = skew_table(matrix, {kAllPairs.begin(), kAllPairs.end()}, 50, names);
    CHECK(table.rows.size() == 48);
    for (const auto& row : table.rows) {
        auto pair = *parse_pair(row.pair_label);
        auto truth = synth::true_skew(pop, row.interest_id, pair);
        CHECK(row.score.value == truth.value);
        CHECK(row.score.n_a_i == truth.n_a_i);
        CHECK(row.score.reliable == truth.reliable);
        CHECK(row.interest_name == names[row.interest_id]);
    }
    CHECK(table.scores(AudiencePair::RD).size() == 12);
    CHECK(table.by_pair(AudiencePair::WB).size() == 12);
}

TEST_CASE("failed cells become undefined rows") {
    EstimateMatrix m;
    m.put({"REP", "", 1000, false, ""});
    m.put({"DEM", "", 1000, false, ""});
    m.put({"REP", "x", 100, false, ""});
    m.put({"DEM", "x", std::nullopt, false, "timeout"});
    m.put({"REP", "y", 300, false, ""});
    m.put({"DEM", "y", 100, false, ""});
    auto t = skew_table(m, {AudiencePair::RD});
    REQUIRE(t.rows.size() == 2);
    CHECK_FALSE(t.rows[0].score.defined());
    CHECK(t.rows[0].score.reason.find("timeout") != std::string::npos);
    CHECK(*t.rows[1].score.value == doctest::Approx(0.5));
}

TEST_CASE("missing or zero totals are configuration errors") {
    EstimateMatrix m;
    m.put({"REP", "", 1000, false, ""});
    m.put({"REP", "x", 10, false, ""});
    CHECK_THROWS_AS(skew_table(m, {AudiencePair::RD}), ConfigError);
    m.put({"DEM", "", 0, false, ""});
    CHECK_THROWS_AS(skew_table(m, {AudiencePair::RD}), ConfigError);
}

TEST_CASE("table save/load round trip") {
    testing::TempDir tmp;
    EstimateMatrix m;
    m.put({"WHITE", "", 4000, false, ""});
    m.put({"BLACK", "", 3000, false, ""});
    m.put({"WHITE", "a,b", 120, false, ""});
    m.put({"BLACK", "a,b", 90, false, ""});
    m.put({"WHITE", "z", 0, false, ""});
    m.put({"BLACK", "z", 0, false, ""});
    auto t = skew_table(m, {AudiencePair::WB}, 50, {{"a,b", "Quoted, \"name\""}});
    save_skew_table(t, tmp / "t.csv");
    auto back = load_skew_table(tmp / "t.csv");
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(back.rows[i].interest_id == t.rows[i].interest_id);
        CHECK(back.rows[i].interest_name == t.rows[i].interest_name);
        CHECK(back.rows[i].score.defined() == t.rows[i].score.defined());
        if (t.rows[i].score.defined()) CHECK(*back.rows[i].score.value == doctest::Approx(*t.rows[i].score.value).epsilon(1e-9));
        CHECK(back.rows[i].score.n_b == t.rows[i].score.n_b);
    }
}
