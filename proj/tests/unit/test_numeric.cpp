#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"
#include "mock_adlib_server.hpp"

using namespace proxyaudit;

TEST_CASE("exact_ratio reduces before dividing") {
    CHECK(exact_ratio(1, 3) == 1.0 / 3.0);
    CHECK(exact_ratio(2, 6) == 1.0 / 3.0);
    CHECK(exact_ratio(-4, -8) == 0.5);
    CHECK(exact_ratio(0, 5) == 0.0);
    CHECK_THROWS_AS(exact_ratio(1, 0), std::invalid_argument);
}

TEST_CASE("pearson") {
    std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{8, 6, 4, 2}, c{1, 1, 1, 1};
    CHECK(*pearson(x, y) == doctest::Approx(1.0));
    CHECK(*pearson(x, z) == doctest::Approx(-1.0));
    CHECK_FALSE(pearson(x, c).has_value());
    CHECK_FALSE(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}).has_value());
}

TEST_CASE("quantiles, median, mean") {
    std::vector<double> v{1, 2, 3, 4};
    CHECK(median(v) == 2.5);
    CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(quantile_linear(std::vector<double>{-1, 0, 1}, 1.0 / 3.0) == doctest::Approx(-1.0 / 3.0));
    CHECK(quantile_linear(v, 0.0) == 1.0);
    CHECK(quantile_linear(v, 1.0) == 4.0);
    CHECK(mean(v) == 2.5);
    CHECK_THROWS(median(std::vector<double>{}));
}

TEST_CASE("significant-figure rounding") {
    CHECK(round_sig_figs(111374, 2) == 110000);
    CHECK(round_sig_figs(903884, 2) == 900000);
    CHECK(round_sig_figs(43085, 2) == 43000);
    CHECK(round_sig_figs(150, 1) == 200);   // half away from zero
    CHECK(round_sig_figs(-150, 1) == -200);
    CHECK(round_sig_figs(99, 2) == 99);
    CHECK(round_sig_figs(995, 2) == 1000);
    CHECK(round_sig_figs(0, 2) == 0);
    // Relative error of two-figure rounding never exceeds 5%.
    for (std::int64_t v = 1; v < 200000; v += 7) {
        double err = std::abs(static_cast<double>(round_sig_figs(v, 2) - v)) / static_cast<double>(v);
        REQUIRE(err <= 0.05);
    }
}

TEST_CASE("fixed formatting") {
    CHECK(fixed(0.25, 1) == "0.2");  // exact binary tie: printf rounds to even
    CHECK(fixed(-0.0001, 2) == "0.00");
    CHECK(fixed(-0.0, 3) == "0.000");
    CHECK(fixed(1.5, 0) == "2");
}

TEST_CASE("hashes") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(fnv1a("") == 14695981039346656037ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("csv split and escape") {
    CHECK(csv::split_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(csv::split_line("\"x,y\",\"he said \"\"hi\"\"\",") ==
          std::vector<std::string>{"x,y", "he said \"hi\"", ""});
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::join({"a", "b,c"}) == "a,\"b,c\"");
    for (const std::string s : {"a\"b", " lead", "x,y,z", ""})
        CHECK(csv::split_line(csv::join({s, "t"})) == std::vector<std::string>{s, "t"});
}

TEST_CASE("csv read_lines strips BOM and CR") {
    testing::TempDir tmp;
    auto p = tmp / "f.csv";
    {
        std::ofstream out(p, std::ios::binary);
        out << "\xEF\xBB\xBFh1,h2\r\n1,2\r\n";
    }
    auto lines = csv::read_lines(p);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "h1,h2");
    CHECK(lines[1] == "1,2");
    CHECK_THROWS_AS(csv::read_lines(tmp / "missing.csv"), IoError);
}
