#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proxyaudit/adlib.hpp"
#include "proxyaudit/analytics.hpp"
#include "proxyaudit/synthworld.hpp"

namespace proxyaudit::demo {

// Named interests with planted RD/WB/WH skews. Every 15th interest gets a
// tiny base rate so that its counts fall under the reliability floor.
std::vector<synth::PlantedInterest> demo_interests(std::size_t count = 120, std::uint64_t seed = 7);

// `interest_id,name,base_rate,s_rd,s_wb,s_wh,s_bh` with empty cells for
// pairs that are not planted.
void save_planted_interests(const std::vector<synth::PlantedInterest>& interests,
                            const std::filesystem::path& path);
std::vector<synth::PlantedInterest> load_planted_interests(const std::filesystem::path& path);

struct CorpusConfig {
    adlib::Date first_monday{};
    int weeks = 6;
    std::size_t advertisers_per_side = 24;  // Conservatives and Progressives each
    std::size_t other_advertisers = 12;
    double activity = 0.8;                  // chance an advertiser runs ads in a week
    double missing_rate = 0.049;
    int criteria_per_window = 10;
    double congruence = 3.0;  // strength of leaning-congruent interest choice
    std::uint64_t seed = 11;
    // Delay (days after window end) -> weight.
    std::map<int, double> delay_weights{{2, 0.02}, {3, 0.48}, {4, 0.47}, {5, 0.02}, {6, 0.01}};
};

struct AdCorpus {
    std::vector<std::pair<std::string, analytics::RawLabel>> advertisers;
    std::vector<adlib::Date> dates;  // collection days, ascending
    std::map<adlib::Date, std::vector<std::string>> listings;
    // Report payload per (advertiser, date); nullopt marks "no targeting data".
    std::map<std::pair<std::string, adlib::Date>, std::optional<std::string>> reports;
    std::size_t requests = 0;
    std::size_t missing = 0;
    std::map<int, std::size_t> planted_delays;  // per window
    std::size_t windows = 0;
};

// Weekly targeting reports for labeled advertisers. Conservatives lean
// toward Republican-skewed interests when including and Democratic-skewed
// ones when excluding; Progressives mirror that. An advertiser is listed
// from the first day its first window is available and is then queried
// daily, always receiving its latest available window. First-day payloads
// carry 90% of the final total. Exactly round(missing_rate * requests)
// reports are missing, never on a window's first-availability day.
AdCorpus generate_ad_corpus(const std::vector<synth::PlantedInterest>& interests,
                            const CorpusConfig& config);

void write_replay_dir(const AdCorpus& corpus, const std::filesystem::path& dir);
void write_affiliations(const AdCorpus& corpus, const std::filesystem::path& path);

struct PagesFixture {
    std::map<std::string, double> domain_bias;
    std::vector<std::pair<std::string, std::vector<std::string>>> interest_urls;
};

// Interest pages whose domains carry a bias near the interest's planted
// RD skew, plus one shared domain present on 90% of interests.
PagesFixture generate_pages(const std::vector<synth::PlantedInterest>& interests,
                            std::uint64_t seed = 5);
void write_pages(const PagesFixture& fixture, const std::filesystem::path& domain_bias_csv,
                 const std::filesystem::path& interest_pages_jsonl);

inline constexpr const char* kSharedDomain = "megamart.com";

}  // namespace proxyaudit::demo
