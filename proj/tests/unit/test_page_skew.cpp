#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"
#include "proxyaudit/page_skew.hpp"
#include "mock_adlib_server.hpp"

using namespace proxyaudit;
using namespace proxyaudit::page;

namespace {

const PublicSuffixList& bundled() {
    static const PublicSuffixList psl = PublicSuffixList::load(PROXYAUDIT_DATA_DIR "/public_suffix_list.dat");
    return psl;
}

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("url normalization") {
    const auto& psl = bundled();
    CHECK(normalize_domain("https://WWW.Example.com/path", psl) == "example.com");
    CHECK(normalize_domain("http://user:pw@news.bbc.co.uk:8080/a?b=c#d", psl) == "bbc.co.uk");
    CHECK(normalize_domain("example.org", psl) == "example.org");
    CHECK(normalize_domain("//cdn.shop.example.net/x", psl) == "example.net");
    CHECK(normalize_domain("https://example.com.", psl) == "example.com");
    CHECK_FALSE(normalize_domain("http://192.168.0.1/x", psl).has_value());
    CHECK_FALSE(normalize_domain("http://[::1]/", psl).has_value());
    CHECK_FALSE(normalize_domain("", psl).has_value());
    CHECK_FALSE(normalize_domain("http://co.uk/", psl).has_value());
    CHECK_FALSE(normalize_domain("not a url", psl).has_value());
    CHECK_FALSE(normalize_domain("http://localhost/", psl).has_value());
}

TEST_CASE("suffix list wildcard and exception rules") {
    auto psl = PublicSuffixList::parse("// comment\ncom\n*.ck\n!www.ck\nco.uk\nuk\n");
    CHECK(psl.registrable_domain("a.b.example.com") == "example.com");
    CHECK(psl.registrable_domain("shop.foo.ck") == "shop.foo.ck");
    CHECK_FALSE(psl.registrable_domain("foo.ck").has_value());
    CHECK(psl.registrable_domain("www.ck") == "www.ck");
    CHECK(psl.registrable_domain("a.www.ck") == "www.ck");
    CHECK(psl.registrable_domain("x.y.co.uk") == "y.co.uk");
    CHECK_FALSE(psl.registrable_domain("com").has_value());
    // Unlisted TLDs fall back to the implicit "*" rule.
    CHECK(psl.registrable_domain("a.b.example") == "b.example");
}

TEST_CASE("page skew drops the most prevalent domain") {
    DomainBiasTable table{{{"megamart.com", 0.0}, {"x.com", 0.6}, {"y.com", 0.2}}};
    std::vector<InterestPagesRecord> recs{{"i1", {"megamart.com", "x.com", "y.com"}},
                                          {"i2", {"megamart.com", "y.com"}},
                                          {"i3", {"megamart.com"}}};
    auto prev = rank_domain_prevalence(recs);
    CHECK(prev[0].domain == "megamart.com");
    CHECK(prev[0].fraction == doctest::Approx(1.0));
    CHECK(prev[1].domain == "y.com");

    auto r1 = compute_page_skew(recs[0], table, 1, prev);
    CHECK(*r1.value == doctest::Approx(0.4));
    CHECK(r1.matched == 2);
    CHECK(r1.dropped == 1);
    auto r0 = compute_page_skew(recs[0], table, 0, prev);
    CHECK(*r0.value == doctest::Approx(0.8 / 3));
    auto r3 = compute_page_skew(recs[2], table, 1, prev);
    CHECK_FALSE(r3.value.has_value());
    CHECK_THROWS_AS(rank_domain_prevalence({}), DataError);
}

TEST_CASE("unknown domains are ignored in the mean") {
    DomainBiasTable table{{{"a.com", -0.4}}};
    std::vector<InterestPagesRecord> recs{{"i", {"a.com", "unknown.com"}}};
    auto r = compute_page_skew(recs[0], table, 0, rank_domain_prevalence(recs));
    CHECK(*r.value == doctest::Approx(-0.4));
    CHECK(r.matched == 1);
    CHECK(r.total == 2);
}

TEST_CASE("pruning trades coverage for agreement") {
    // Interest i carries one informative domain d_i (bias = voter skew) and
    // a shared neutral domain on all but the last interest.
    DomainBiasTable table;
    std::vector<InterestPagesRecord> recs;
    std::map<std::string, double> voter;
    table.scores["shared.com"] = 0.0;
    for (int i = 0; i < 10; ++i) {
        std::string id = "i" + std::to_string(i), dom = "d" + std::to_string(i) + ".com";
        double s = -0.9 + 0.2 * i;
        voter[id] = s;
        recs.push_back({id, i < 9 ? std::vector<std::string>{"shared.com", dom} : std::vector<std::string>{dom}});
        if (i % 3 != 0) table.scores[dom] = s;
    }
    auto curve = pruning_tradeoff_curve(recs, table, voter, {0, 1, 2});
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].coverage >= curve[1].coverage);
    CHECK(curve[1].coverage >= curve[2].coverage);
    CHECK(curve[0].coverage == doctest::Approx(0.9));
    CHECK(curve[1].coverage == doctest::Approx(0.6));
    CHECK(*curve[1].pearson_r == doctest::Approx(1.0));
    CHECK(*curve[0].pearson_r < *curve[1].pearson_r);
}

TEST_CASE("domain bias loading") {
    testing::TempDir tmp;
    write(tmp / "b.csv",
          "domain,score\n"
          "https://www.A.com/,0.5\n"
          "b.co.uk,-0.25\n"
          "a.com,0.3\n"
          "c.com,1.7\n"
          "d.com,abc\n"
          "http://10.0.0.1,0.1\n");
    auto load = load_domain_bias(tmp / "b.csv", bundled());
    CHECK(load.table.scores.size() == 2);
    CHECK(load.table.lookup("a.com") == 0.3);
    CHECK(load.table.lookup("b.co.uk") == -0.25);
    CHECK_FALSE(load.table.lookup("c.com").has_value());
    CHECK(load.warnings.size() == 1);
    CHECK(load.rejects.count() == 3);
    CHECK_THROWS_AS(load_domain_bias(tmp / "absent.csv", bundled()), IoError);
}

TEST_CASE("interest pages loading") {
    testing::TempDir tmp;
    write(tmp / "p.jsonl",
          "{\"interest_id\": \"i1\", \"urls\": [\"https://a.com/x\", \"http://www.a.com/y\", \"https://b.org\"]}\n"
          "not json\n"
          "{\"urls\": []}\n"
          "\n"
          "{\"interest_id\": \"i2\", \"urls\": [\"http://1.2.3.4/\", \"c.net\"]}\n");
    auto load = load_interest_pages(tmp / "p.jsonl", bundled());
    REQUIRE(load.records.size() == 2);
    CHECK(load.records[0].domains == std::vector<std::string>{"a.com", "b.org"});
    CHECK(load.records[1].domains == std::vector<std::string>{"c.net"});
    CHECK(load.dropped_urls.count() == 3);

    DomainBiasTable table{{{"a.com", 0.1}}};
    auto cov = bias_coverage(load.records, table);
    CHECK(cov.mentions == 3);
    CHECK(cov.unique_domains == 3);
    CHECK(cov.mention_fraction == doctest::Approx(1.0 / 3));
}
