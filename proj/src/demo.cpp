#include "proxyaudit/demo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit::demo {

namespace {

using adlib::Date;

constexpr std::array<const char*, 120> kNames{
    "Politics", "Voting", "Election", "Politics and social issues", "Community issues",
    "Social change", "Hunting", "Fishing", "Country music", "Jazz", "Yoga", "Veganism",
    "Pickup trucks", "Gardening", "Camping", "Hip hop music", "Gospel music", "Baseball",
    "Basketball", "American football", "Soccer", "Golf", "Tennis", "Stock car racing",
    "Rodeo", "Farming", "Ranching", "Firearms", "Archery", "Craft beer", "Wine", "Coffee",
    "Tea", "Organic food", "Fast food", "Barbecue", "Soul food", "Latin music", "Salsa dancing",
    "Reggaeton", "Telenovelas", "Spanish language", "Christianity", "Bible study",
    "Meditation", "Astrology", "Environmentalism", "Climate change", "Recycling", "Solar energy",
    "Electric vehicles", "Motorcycles", "Boating", "Home improvement", "Interior design",
    "Fashion", "Beauty salons", "Hair care", "Cosmetics", "Sneakers", "Streetwear",
    "Video games", "Board games", "Science fiction", "Anime", "Comic books", "Classical music",
    "Opera", "Theatre", "Museums", "Art galleries", "Photography", "Travel", "Cruises",
    "Road trips", "National parks", "Hiking", "Running", "Cycling", "Fitness", "Weight training",
    "Martial arts", "Boxing", "Wrestling", "Military", "Veterans", "Law enforcement",
    "Small business", "Entrepreneurship", "Real estate", "Investing", "Personal finance",
    "Retirement planning", "Insurance", "Parenting", "Homeschooling", "Higher education",
    "Student loans", "Public transportation", "Urban planning", "Civil rights",
    "Immigration", "Labor unions", "Healthcare", "Nursing", "Teaching", "Volunteering",
    "Charity", "Pets", "Dogs", "Cats", "Horses", "Birdwatching", "Cooking", "Baking",
    "Vegetarian cuisine", "Mexican cuisine", "Southern cuisine", "Soap making", "Quilting"};

constexpr std::size_t kFirstPolitical = 0, kPoliticalCount = 6;

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * u01(rng); }

double normal(std::mt19937_64& rng) {
    // Box-Muller on our own u01 so streams do not depend on the library's
    // distribution implementations.
    double u1 = u01(rng), u2 = u01(rng);
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t pick_weighted(std::mt19937_64& rng, const std::vector<double>& w) {
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double r = u01(rng) * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (r < w[i]) return i;
        r -= w[i];
    }
    return w.size() - 1;
}

std::string opt_cell(const std::map<AudiencePair, double>& m, AudiencePair p) {
    auto it = m.find(p);
    return it == m.end() ? "" : fixed(it->second, 6);
}

}  // namespace

std::vector<synth::PlantedInterest> demo_interests(std::size_t count, std::uint64_t seed) {
    if (count == 0 || count > kNames.size())
        throw std::invalid_argument("demo_interests: count must be in [1, " + std::to_string(kNames.size()) + "]");
    std::mt19937_64 rng(seed);
    std::vector<synth::PlantedInterest> out;
    for (std::size_t i = 0; i < count; ++i) {
        synth::PlantedInterest p;
        char id[16];
        std::snprintf(id, sizeof id, "I%04zu", i + 1);
        p.interest_id = id;
        p.name = kNames[i];
        // Log-uniform base rate in [1%, 12%]; rounded so the CSV round-trips.
        double base = std::exp(uniform(rng, std::log(0.01), std::log(0.12)));
        p.base_rate = (i % 15 == 14) ? 0.0008 : std::round(base * 1e6) / 1e6;
        p.planted_skew[AudiencePair::RD] = std::round(uniform(rng, -0.6, 0.6) * 1e6) / 1e6;
        p.planted_skew[AudiencePair::WB] = std::round(uniform(rng, -0.5, 0.5) * 1e6) / 1e6;
        p.planted_skew[AudiencePair::WH] = std::round(uniform(rng, -0.5, 0.5) * 1e6) / 1e6;
        out.push_back(std::move(p));
    }
    return out;
}

void save_planted_interests(const std::vector<synth::PlantedInterest>& interests,
                            const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"interest_id", "name", "base_rate", "s_rd", "s_wb", "s_wh", "s_bh"});
    for (const auto& p : interests)
        w.row({p.interest_id, p.name, fixed(p.base_rate, 6), opt_cell(p.planted_skew, AudiencePair::RD),
               opt_cell(p.planted_skew, AudiencePair::WB), opt_cell(p.planted_skew, AudiencePair::WH),
               opt_cell(p.planted_skew, AudiencePair::BH)});
    w.close();
}

std::vector<synth::PlantedInterest> load_planted_interests(const std::filesystem::path& path) {
    auto lines = csv::read_lines(path);
    if (lines.empty() || csv::split_line(lines[0]) !=
                             std::vector<std::string>{"interest_id", "name", "base_rate", "s_rd", "s_wb",
                                                      "s_wh", "s_bh"})
        throw ConfigError(path.string() + ": expected header interest_id,name,base_rate,s_rd,s_wb,s_wh,s_bh");
    std::vector<synth::PlantedInterest> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = csv::split_line(lines[i]);
        auto where = path.string() + ":" + std::to_string(i + 1);
        if (f.size() != 7) throw ConfigError(where + ": expected 7 fields");
        synth::PlantedInterest p;
        p.interest_id = f[0];
        p.name = f[1];
        try {
            p.base_rate = std::stod(f[2]);
            constexpr std::array<AudiencePair, 4> order{AudiencePair::RD, AudiencePair::WB, AudiencePair::WH,
                                                        AudiencePair::BH};
            for (std::size_t k = 0; k < 4; ++k)
                if (!f[3 + k].empty()) p.planted_skew[order[k]] = std::stod(f[3 + k]);
        } catch (const std::logic_error&) {
            throw ConfigError(where + ": non-numeric rate or skew");
        }
        out.push_back(std::move(p));
    }
    return out;
}

AdCorpus generate_ad_corpus(const std::vector<synth::PlantedInterest>& interests, const CorpusConfig& config) {
    if (interests.empty()) throw std::invalid_argument("generate_ad_corpus: no interests");
    if (config.weeks < 1) throw std::invalid_argument("generate_ad_corpus: weeks must be >= 1");
    std::mt19937_64 rng(config.seed);
    AdCorpus corpus;

    using analytics::RawLabel;
    constexpr std::array<RawLabel, 3> cons{RawLabel::GOP, RawLabel::RPACs, RawLabel::Conservative};
    constexpr std::array<RawLabel, 3> prog{RawLabel::Dems, RawLabel::DPACs, RawLabel::Progressive};
    constexpr std::array<RawLabel, 3> other{RawLabel::Non, RawLabel::Independent, RawLabel::Other};
    std::size_t n = 0;
    auto add = [&](RawLabel l) {
        char id[16];
        std::snprintf(id, sizeof id, "ADV%04zu", ++n);
        corpus.advertisers.emplace_back(id, l);
    };
    for (std::size_t i = 0; i < config.advertisers_per_side; ++i) {
        add(cons[i % 3]);
        add(prog[i % 3]);
    }
    for (std::size_t i = 0; i < config.other_advertisers; ++i) add(other[i % 3]);

    std::vector<int> delay_values;
    std::vector<double> delay_w;
    for (auto [d, w] : config.delay_weights) {
        delay_values.push_back(d);
        delay_w.push_back(w);
    }

    const std::vector<std::pair<adlib::CriterionKind, std::string>> extras{
        {adlib::CriterionKind::Age, "Age 18-24"},          {adlib::CriterionKind::Age, "Age 65+"},
        {adlib::CriterionKind::Location, "North Carolina"}, {adlib::CriterionKind::Location, "Florida"},
        {adlib::CriterionKind::Gender, "Women"},           {adlib::CriterionKind::CustomAudience, "Supporter list"},
        {adlib::CriterionKind::Lookalike, "Lookalike (US, 1%)"},
        {adlib::CriterionKind::Demographic, "Parents (All)"},
        {adlib::CriterionKind::Demographic, "Household income: top 10%"},
        {adlib::CriterionKind::Behavior, "Frequent travelers"},
        {adlib::CriterionKind::Behavior, "Small business owners"}};

    struct Window {
        adlib::TargetingReportSnapshot snap;
        Date available;
    };
    std::map<std::string, std::vector<Window>> windows;  // per advertiser, in week order
    Date last_available = config.first_monday;

    for (const auto& [adv, label] : corpus.advertisers) {
        auto group = analytics::group_of(label);
        double sign = group == analytics::Group::Conservatives ? 1.0
                      : group == analytics::Group::Progressives ? -1.0
                                                                : 0.0;
        for (int w = 0; w < config.weeks; ++w) {
            bool active = u01(rng) < config.activity;
            int delay = delay_values[pick_weighted(rng, delay_w)];
            double spend_draw = normal(rng);
            if (!active) continue;
            Window win;
            win.snap.advertiser_id = adv;
            win.snap.window_start = config.first_monday + std::chrono::days{7 * w};
            win.snap.window_end = win.snap.window_start + std::chrono::days{6};
            win.available = win.snap.window_end + std::chrono::days{delay};
            // Whole currency units, roughly log-normal around 60k.
            win.snap.total_spend =
                static_cast<adlib::Micros>(std::llround(std::exp(11.0 + 1.2 * spend_draw))) * adlib::kMicrosPerUnit;

            // Include and exclude interests, preferring the congruent side.
            std::set<std::size_t> used;
            auto choose = [&](adlib::Mode mode, int k) {
                std::vector<double> weights;
                for (std::size_t i = 0; i < interests.size(); ++i) {
                    double s = interests[i].planted_skew.count(AudiencePair::RD)
                                   ? interests[i].planted_skew.at(AudiencePair::RD)
                                   : 0.0;
                    double dir = mode == adlib::Mode::Include ? 1.0 : -1.0;
                    weights.push_back(used.count(i) ? 0.0 : std::exp(config.congruence * sign * dir * s));
                }
                for (int j = 0; j < k; ++j) {
                    auto i = pick_weighted(rng, weights);
                    weights[i] = 0.0;
                    used.insert(i);
                    adlib::TargetingCriterion c;
                    c.name = interests[i].name.empty() ? interests[i].interest_id : interests[i].name;
                    c.kind = adlib::CriterionKind::Interest;
                    c.raw_kind = std::string(adlib::to_string(c.kind));
                    c.mode = mode;
                    c.num_ads = 1 + static_cast<std::int64_t>(rng() % 20);
                    c.spend_fraction = std::round(uniform(rng, 0.05, 1.0) * 1000) / 1000;
                    win.snap.criteria.push_back(std::move(c));
                }
            };
            int k_exclude = std::max(1, config.criteria_per_window / 4);
            choose(adlib::Mode::Include, config.criteria_per_window - k_exclude);
            choose(adlib::Mode::Exclude, k_exclude);
            for (int j = 0; j < 2; ++j) {
                const auto& [kind, name] = extras[rng() % extras.size()];
                adlib::TargetingCriterion c;
                c.name = name;
                c.kind = kind;
                c.raw_kind = std::string(adlib::to_string(kind));
                c.mode = adlib::Mode::Include;
                c.num_ads = 1 + static_cast<std::int64_t>(rng() % 10);
                c.spend_fraction = std::round(uniform(rng, 0.05, 1.0) * 1000) / 1000;
                bool dup = std::any_of(win.snap.criteria.begin(), win.snap.criteria.end(), [&](const auto& o) {
                    return o.name == c.name && o.kind == c.kind && o.mode == c.mode;
                });
                if (!dup) win.snap.criteria.push_back(std::move(c));
            }
            last_available = std::max(last_available, win.available);
            ++corpus.planted_delays[delay];
            ++corpus.windows;
            windows[adv].push_back(std::move(win));
        }
    }

    // Daily collection from the earliest availability through the latest.
    Date first_available = last_available;
    for (const auto& [adv, ws] : windows) first_available = std::min(first_available, ws.front().available);
    for (Date d = first_available; d <= last_available; d += std::chrono::days{1}) corpus.dates.push_back(d);

    std::vector<std::pair<std::string, Date>> eligible_missing;
    for (Date d : corpus.dates) {
        auto& listed = corpus.listings[d];
        for (const auto& [adv, label] : corpus.advertisers) {
            auto it = windows.find(adv);
            if (it == windows.end() || it->second.front().available > d) continue;
            listed.push_back(adv);
            // Latest window available by d.
            const Window* latest = nullptr;
            for (const auto& w : it->second)
                if (w.available <= d) latest = &w;
            auto snap = latest->snap;
            bool first_day = latest->available == d;
            if (first_day) snap.total_spend = snap.total_spend / 10 * 9;
            else eligible_missing.emplace_back(adv, d);
            corpus.reports[{adv, d}] = adlib::to_payload(snap);
            ++corpus.requests;
        }
    }

    auto target = static_cast<std::size_t>(std::llround(config.missing_rate * static_cast<double>(corpus.requests)));
    if (target > eligible_missing.size())
        throw std::invalid_argument("generate_ad_corpus: missing rate too high for the collection schedule");
    // Partial Fisher-Yates over the eligible requests.
    for (std::size_t i = 0; i < target; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (eligible_missing.size() - i));
        std::swap(eligible_missing[i], eligible_missing[j]);
        corpus.reports[eligible_missing[i]] = std::nullopt;
    }
    corpus.missing = target;
    return corpus;
}

void write_replay_dir(const AdCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(p.string(), "cannot open for writing");
        out << text;
    };
    for (const auto& [date, ids] : corpus.listings)
        write(dir / ("advertisers_" + adlib::format_date(date) + ".json"), nlohmann::json(ids).dump() + "\n");
    for (const auto& [key, payload] : corpus.reports) {
        auto stem = key.first + "_" + adlib::format_date(key.second);
        if (payload) write(dir / (stem + ".json"), *payload + "\n");
        else write(dir / (stem + ".missing"), "");
    }
}

void write_affiliations(const AdCorpus& corpus, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"advertiser_id", "raw_label"});
    for (const auto& [id, label] : corpus.advertisers) w.row({id, std::string(analytics::to_string(label))});
    w.close();
}

PagesFixture generate_pages(const std::vector<synth::PlantedInterest>& interests, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PagesFixture fx;
    constexpr std::array<const char*, 10> stems{"river", "summit", "harbor", "prairie", "granite",
                                                "liberty", "cedar", "maple", "beacon", "frontier"};
    constexpr std::array<const char*, 3> tails{"times.com", "post.co.uk", "herald.org"};
    std::vector<std::string> domains;
    for (const char* s : stems)
        for (const char* t : tails) domains.push_back(std::string(s) + t);
    // Spread biases evenly over [-0.9, 0.9], assigned in shuffled order.
    std::vector<std::size_t> order(domains.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t j = 0; j < domains.size(); ++j)
        fx.domain_bias[domains[order[j]]] =
            std::round((-0.9 + 1.8 * static_cast<double>(j) / static_cast<double>(domains.size() - 1)) * 1000) / 1000;
    fx.domain_bias[kSharedDomain] = 0.05;

    for (std::size_t i = 0; i < interests.size(); ++i) {
        const auto& p = interests[i];
        double s = p.planted_skew.count(AudiencePair::RD) ? p.planted_skew.at(AudiencePair::RD) : 0.0;
        std::vector<std::string> urls;
        if (i % 10 != 9) urls.push_back(std::string("https://www.") + kSharedDomain + "/deals/" + p.interest_id);
        // Five domains whose bias is closest to a noisy copy of the skew.
        double target = s + 0.15 * normal(rng);
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& d : domains) ranked.emplace_back(std::abs(fx.domain_bias[d] - target), d);
        std::sort(ranked.begin(), ranked.end());
        for (std::size_t k = 0; k < 5; ++k) {
            const auto& d = ranked[k].second;
            urls.push_back((k % 2 ? "http://" : "https://news.") + d + "/story/" + std::to_string(rng() % 100000));
        }
        urls.push_back("https://blog" + std::to_string(i % 7) + ".example-community.net/post");
        if (i % 13 == 0) urls.push_back("http://192.168.0.1/index.html");
        fx.interest_urls.emplace_back(p.interest_id, std::move(urls));
    }
    return fx;
}

void write_pages(const PagesFixture& fixture, const std::filesystem::path& domain_bias_csv,
                 const std::filesystem::path& interest_pages_jsonl) {
    csv::Writer w(domain_bias_csv);
    w.row({"domain", "score"});
    for (const auto& [d, s] : fixture.domain_bias) w.row({d, fixed(s, 3)});
    w.close();
    std::ofstream out(interest_pages_jsonl, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(interest_pages_jsonl.string(), "cannot open for writing");
    for (const auto& [id, urls] : fixture.interest_urls)
        out << nlohmann::json{{"interest_id", id}, {"urls", urls}}.dump() << '\n';
}

}  // namespace proxyaudit::demo
