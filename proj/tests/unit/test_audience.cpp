#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <stdexcept>

#include "proxyaudit/audience.hpp"
#include "proxyaudit/errors.hpp"
#include "mock_adlib_server.hpp"

using namespace proxyaudit;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::vector<VoterRecord> pool(std::size_t rep, std::size_t dem) {
    std::vector<VoterRecord> out;
    for (std::size_t i = 0; i < rep; ++i) out.push_back({"R" + std::to_string(i), "NC", Party::Rep, Race::White});
    for (std::size_t i = 0; i < dem; ++i) out.push_back({"D" + std::to_string(i), "FL", Party::Dem, Race::Black});
    return out;
}

}  // namespace

TEST_CASE("voter file rejects malformed rows with line numbers") {
    testing::TempDir tmp;
    write(tmp / "v.csv",
          "voter_id,state,party,race\n"
          "1,NC,REP,WHITE\n"
          "2,NC,XYZ,WHITE\n"
          "3,nc,DEM,BLACK\n"
          "1,FL,DEM,BLACK\n"
          "4,GA,DEM\n"
          "5,GA,DEM,HISPANIC\n"
          "6,GA,OTH,OTHER\n"
          "7,FL,REP,PURPLE\n"
          "8,NC,REP,WHITE\n"
          "9,NC,DEM,WHITE\n"
          "10,GA,DEM,BLACK\n"
          "11,GA,REP,OTHER\n");
    auto r = load_voter_records(tmp / "v.csv");
    CHECK(r.records.size() == 7);
    REQUIRE(r.rejects.count() == 5);
    CHECK(r.rejects.rows[0].line == 3);
    CHECK(r.rejects.rows[1].line == 4);
    CHECK(r.rejects.rows[2].reason.find("duplicate") != std::string::npos);
    CHECK(r.rejects.rows[3].line == 6);
    CHECK(r.rejects.rows[4].line == 9);

    write(tmp / "s.csv", "voter_id,state,party,race\n1,NC,REP,WHITE\n2,GA,DEM,BLACK\n3,FL,DEM,BLACK\n");
    auto only = load_voter_records(tmp / "s.csv", {"NC", "GA"});
    CHECK(only.records.size() == 2);
    CHECK(only.rejects.rows[0].line == 4);
}

TEST_CASE("voter file format mismatch") {
    testing::TempDir tmp;
    write(tmp / "bad_header.csv", "id,state,party,race\n1,NC,REP,WHITE\n");
    CHECK_THROWS_AS(load_voter_records(tmp / "bad_header.csv"), DataError);
    write(tmp / "mostly_bad.csv", "voter_id,state,party,race\n1,NC,X,Y\n2,NC,X,Y\n3,NC,REP,WHITE\n");
    CHECK_THROWS_AS(load_voter_records(tmp / "mostly_bad.csv"), DataError);
    CHECK_THROWS_AS(load_voter_records(tmp / "absent.csv"), IoError);
}

TEST_CASE("uniform audience: size, determinism, shortfall") {
    auto recs = pool(100, 80);
    auto a = build_uniform_audience(recs, AudienceSelector(Party::Rep), 30, 9);
    auto b = build_uniform_audience(recs, AudienceSelector(Party::Rep), 30, 9);
    auto c = build_uniform_audience(recs, AudienceSelector(Party::Rep), 30, 10);
    CHECK(a.size() == 30);
    CHECK(a.member_ids == b.member_ids);
    CHECK(a.member_ids != c.member_ids);
    CHECK(std::is_sorted(a.member_ids.begin(), a.member_ids.end()));
    CHECK(a.label == "REP");
    for (const auto& id : a.member_ids) CHECK(id[0] == 'R');

    auto big = build_uniform_audience(recs, AudienceSelector(Party::Dem), 500, 1);
    CHECK(big.size() == 80);
    CHECK(big.shortfall);
    CHECK(big.requested_size == 500);

    CHECK_THROWS_AS(build_uniform_audience(recs, AudienceSelector(Race::Hispanic), 5, 1), DataError);
    CHECK_THROWS_AS(build_uniform_audience(recs, AudienceSelector(Party::Rep), 0, 1), std::invalid_argument);
}

TEST_CASE("uniform audience: every member equally likely") {
    auto recs = pool(10, 0);
    std::map<std::string, int> hits;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        ++hits[build_uniform_audience(recs, AudienceSelector(Party::Rep), 1, seed).member_ids[0]];
    REQUIRE(hits.size() == 10);
    for (const auto& [id, n] : hits) {
        INFO(id << " " << n);
        CHECK(n >= 50);
        CHECK(n <= 150);
    }
}

TEST_CASE("disjointness and size mismatch") {
    auto recs = pool(50, 50);
    auto r = build_uniform_audience(recs, AudienceSelector(Party::Rep), 40, 1);
    auto d = build_uniform_audience(recs, AudienceSelector(Party::Dem), 30, 1);
    CHECK(verify_disjoint(r, d) == 0);
    CHECK(verify_disjoint(r, r) == 40);
    auto w = size_mismatch_warning(r, d);
    REQUIRE(w.has_value());
    CHECK(w->find("REP") != std::string::npos);
    auto d2 = build_uniform_audience(recs, AudienceSelector(Party::Dem), 37, 1);
    CHECK_FALSE(size_mismatch_warning(r, d2).has_value());
}

TEST_CASE("selector parsing") {
    CHECK(AudienceSelector::parse("REP")->label() == "REP");
    CHECK(AudienceSelector::parse("HISPANIC")->label() == "HISPANIC");
    CHECK_FALSE(AudienceSelector::parse("purple").has_value());
}

TEST_CASE("audience JSON round trip") {
    testing::TempDir tmp;
    auto spec = build_uniform_audience(pool(20, 0), AudienceSelector(Party::Rep), 5, 42);
    save_audience(spec, tmp / "a" / "REP.json");
    auto back = load_audience(tmp / "a" / "REP.json");
    CHECK(back.label == spec.label);
    CHECK(back.member_ids == spec.member_ids);
    CHECK(back.sample_seed == 42);
    CHECK(back.requested_size == 5);
    CHECK_THROWS_AS(audience_from_json("{\"label\": 3}"), DataError);
    CHECK_THROWS_AS(audience_from_json("not json"), DataError);
}
