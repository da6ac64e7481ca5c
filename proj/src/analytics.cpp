#include "proxyaudit/analytics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit::analytics {

namespace {

constexpr std::array<std::pair<RawLabel, std::string_view>, 9> kLabels{{
    {RawLabel::Non, "Non"},
    {RawLabel::GOP, "GOP"},
    {RawLabel::Dems, "Dems"},
    {RawLabel::RPACs, "R-PACs"},
    {RawLabel::DPACs, "D-PACs"},
    {RawLabel::Conservative, "Conservative"},
    {RawLabel::Progressive, "Progressive"},
    {RawLabel::Independent, "Independent"},
    {RawLabel::Other, "Other"},
}};

constexpr std::array<Leaning, 3> kLeanings{Leaning::DemocraticSkew, Leaning::Neutral,
                                           Leaning::RepublicanSkew};

double to_units(Micros m) { return static_cast<double>(m) / static_cast<double>(adlib::kMicrosPerUnit); }

Leaning leaning_of(const LeaningMap& leanings, const std::string& name) {
    auto it = leanings.find(name);
    return it == leanings.end() ? Leaning::Unavailable : it->second;
}

std::optional<Group> group_for(const Affiliations& aff, const std::string& advertiser) {
    auto it = aff.find(advertiser);
    if (it == aff.end()) return std::nullopt;
    return it->second;
}

}  // namespace

std::string_view to_string(RawLabel l) {
    for (const auto& [label, name] : kLabels)
        if (label == l) return name;
    return "?";
}

std::string_view to_string(Group g) {
    switch (g) {
        case Group::Conservatives: return "Conservatives";
        case Group::Progressives: return "Progressives";
        case Group::Other: return "Other";
    }
    return "?";
}

std::optional<RawLabel> parse_raw_label(std::string_view s) {
    for (const auto& [label, name] : kLabels)
        if (name == s) return label;
    return std::nullopt;
}

Group group_of(RawLabel l) {
    switch (l) {
        case RawLabel::GOP:
        case RawLabel::RPACs:
        case RawLabel::Conservative: return Group::Conservatives;
        case RawLabel::Dems:
        case RawLabel::DPACs:
        case RawLabel::Progressive: return Group::Progressives;
        case RawLabel::Non:
        case RawLabel::Independent:
        case RawLabel::Other: return Group::Other;
    }
    return Group::Other;
}

AffiliationLoad load_affiliations(const std::filesystem::path& source) {
    auto lines = csv::read_lines(source);
    AffiliationLoad out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        if (i == 0 && lines[i] == "advertiser_id,raw_label") continue;
        auto f = csv::split_line(lines[i]);
        if (f.size() != 2 || f[0].empty()) {
            out.rejects.rows.push_back({i + 1, "expected advertiser_id,raw_label"});
            continue;
        }
        auto label = parse_raw_label(f[1]);
        if (!label) {
            out.rejects.rows.push_back({i + 1, "unknown label '" + f[1] + "'"});
            continue;
        }
        out.records.push_back({f[0], *label, group_of(*label)});
    }
    return out;
}

Affiliations index_affiliations(const std::vector<AffiliationRecord>& records) {
    Affiliations a;
    for (const auto& r : records) a[r.advertiser_id] = r.group;
    return a;
}

double GroupUsage::fraction(Mode m, Leaning l) const {
    if (classified == 0) return 0.0;
    auto it = counts.find({m, l});
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(classified);
}

std::vector<GroupUsage> usage_shares(const adlib::TargetingDataset& dataset,
                                     const Affiliations& affiliations, const LeaningMap& leanings) {
    std::map<Group, std::set<std::tuple<std::string, std::string, Mode>>> uses;
    for (const auto& [key, spend] : dataset.spend) {
        if (key.kind != adlib::CriterionKind::Interest) continue;
        auto g = group_for(affiliations, key.advertiser_id);
        if (!g || *g == Group::Other) continue;
        uses[*g].insert({key.advertiser_id, key.name, key.mode});
    }
    if (uses.empty()) throw DataError("no Conservative or Progressive advertisers in the dataset");

    std::vector<GroupUsage> out;
    for (Group g : {Group::Conservatives, Group::Progressives}) {
        GroupUsage u{g, {}, 0, 0};
        for (Mode m : {Mode::Include, Mode::Exclude})
            for (Leaning l : kLeanings) u.counts[{m, l}] = 0;
        for (const auto& [adv, name, mode] : uses[g]) {
            Leaning l = leaning_of(leanings, name);
            if (l == Leaning::Unavailable) {
                ++u.unavailable;
                continue;
            }
            ++u.counts[{mode, l}];
            ++u.classified;
        }
        out.push_back(std::move(u));
    }
    return out;
}

SpendDistribution spend_distribution(const adlib::TargetingDataset& dataset,
                                     const Affiliations& affiliations, Group group, Mode mode,
                                     std::optional<Leaning> leaning, const LeaningMap& leanings) {
    std::map<std::string, Micros> per_interest;
    for (const auto& [key, spend] : dataset.spend) {
        if (key.kind != adlib::CriterionKind::Interest || key.mode != mode) continue;
        if (group_for(affiliations, key.advertiser_id) != group) continue;
        if (leaning && leaning_of(leanings, key.name) != *leaning) continue;
        per_interest[key.name] += spend;
    }
    if (per_interest.empty())
        throw DataError("no " + std::string(to_string(group)) + " " + std::string(adlib::to_string(mode)) +
                        " interests in selection");
    SpendDistribution d;
    for (const auto& [name, spend] : per_interest) d.sorted_spends.push_back(to_units(spend));
    std::sort(d.sorted_spends.begin(), d.sorted_spends.end());
    d.median = median(d.sorted_spends);
    d.mean = mean(d.sorted_spends);
    return d;
}

std::optional<double> spend_skew(Micros spend_r, Micros spend_d) {
    if (spend_r < 0 || spend_d < 0) throw std::invalid_argument("spend_skew: negative spend");
    if (spend_r + spend_d == 0) return std::nullopt;
    return exact_ratio(static_cast<__int128>(spend_r) - spend_d, static_cast<__int128>(spend_r) + spend_d);
}

std::vector<SpendSkewPoint> compute_spend_skew_points(const adlib::TargetingDataset& dataset,
                                                      const Affiliations& affiliations,
                                                      const std::map<std::string, double>& audience_skews,
                                                      Mode mode) {
    std::map<std::string, std::pair<Micros, Micros>> spend;  // (R, D)
    for (const auto& [key, s] : dataset.spend) {
        if (key.kind != adlib::CriterionKind::Interest || key.mode != mode) continue;
        auto g = group_for(affiliations, key.advertiser_id);
        if (g == Group::Conservatives) spend[key.name].first += s;
        else if (g == Group::Progressives) spend[key.name].second += s;
    }
    std::vector<SpendSkewPoint> out;
    for (const auto& [name, rd] : spend) {
        auto sk = audience_skews.find(name);
        if (sk == audience_skews.end()) continue;
        auto v = spend_skew(rd.first, rd.second);
        if (!v) continue;
        out.push_back({name, sk->second, *v, mode, rd.first, rd.second});
    }
    return out;
}

double FitResult::predict(double x) const {
    return 2.0 / (1.0 + std::exp(-(intercept + coefficient * x))) - 1.0;
}

FitResult fit_spend_vs_audience_skew(const std::vector<SpendSkewPoint>& points,
                                     const FitOptions& options) {
    std::vector<double> x, y;
    for (const auto& p : points) {
        x.push_back(p.audience_skew);
        y.push_back(p.spend_skew);
    }
    return fit_sigmoid(x, y, options);
}

FitResult fit_sigmoid(const std::vector<double>& x, const std::vector<double>& y,
                      const FitOptions& options) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_sigmoid: length mismatch");
    const std::size_t n = x.size();
    if (n < 10) throw DataError("sigmoid fit needs at least 10 points, got " + std::to_string(n));

    auto sse_at = [&](double a, double b) {
        double s = 0;
        for (std::size_t k = 0; k < n; ++k) {
            double f = 2.0 / (1.0 + std::exp(-(a + b * x[k]))) - 1.0;
            s += (y[k] - f) * (y[k] - f);
        }
        return s;
    };

    FitResult fit;
    fit.n_points = n;
    double a = 0, b = 0;
    double sse = sse_at(a, b);
    double lambda = 1e-3;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        // Normal equations of the linearized problem.
        double h00 = 0, h01 = 0, h11 = 0, g0 = 0, g1 = 0;
        for (std::size_t k = 0; k < n; ++k) {
            double s = 1.0 / (1.0 + std::exp(-(a + b * x[k])));
            double f = 2.0 * s - 1.0;
            double d = 2.0 * s * (1.0 - s);  // df/dz
            double ja = d, jb = d * x[k];
            double r = y[k] - f;
            h00 += ja * ja;
            h01 += ja * jb;
            h11 += jb * jb;
            g0 += ja * r;
            g1 += jb * r;
        }
        if (std::hypot(g0, g1) < options.tolerance * 1e-3) {
            converged = true;
            break;
        }
        bool stepped = false;
        while (lambda < 1e16) {
            double m00 = h00 + lambda * std::max(h00, 1e-12);
            double m11 = h11 + lambda * std::max(h11, 1e-12);
            double det = m00 * m11 - h01 * h01;
            if (det <= 0 || !std::isfinite(det)) {
                lambda *= 10;
                continue;
            }
            double da = (m11 * g0 - h01 * g1) / det;
            double db = (m00 * g1 - h01 * g0) / det;
            double trial = sse_at(a + da, b + db);
            if (std::isfinite(trial) && trial <= sse) {
                double rel = (sse - trial) / std::max(sse, 1e-300);
                a += da;
                b += db;
                bool small_step = std::hypot(da, db) < options.tolerance * (std::hypot(a, b) + options.tolerance);
                sse = trial;
                lambda = std::max(lambda / 10, 1e-12);
                stepped = true;
                if (rel < options.tolerance || small_step || sse == 0) converged = true;
                break;
            }
            lambda *= 10;
        }
        if (!stepped) {
            // No descent direction left at machine precision: a stationary point.
            converged = true;
        }
        if (converged) {
            ++it;
            break;
        }
    }

    fit.intercept = a;
    fit.coefficient = b;
    fit.sse = sse;
    fit.iterations = it;
    double my = mean(y);
    double sst = 0;
    for (double v : y) sst += (v - my) * (v - my);
    fit.r_squared = sst > 0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 0.0;
    if (!converged)
        throw FitError("sigmoid fit did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (sse " + fixed(sse, 9) + ", a " + fixed(a, 6) + ", b " +
                           fixed(b, 6) + ")",
                       fit);
    return fit;
}

CoverageCorrelation coverage_correlation(const EstimateMatrix& matrix, AudiencePair pair) {
    auto [la, lb] = pair_audiences(pair);
    const auto* ta = matrix.total(std::string(la));
    const auto* tb = matrix.total(std::string(lb));
    if (!ta || !tb || !ta->ok() || !tb->ok() || *ta->count <= 0 || *tb->count <= 0)
        throw ConfigError("coverage correlation needs positive totals for " + std::string(la) +
                          " and " + std::string(lb));
    CoverageCorrelation cc{pair, std::nullopt, {}};
    std::vector<double> xs, ys;
    for (const auto& interest : matrix.interests()) {
        const auto* ca = matrix.find(std::string(la), interest);
        const auto* cb = matrix.find(std::string(lb), interest);
        if (!ca || !cb || !ca->ok() || !cb->ok()) continue;
        double x = static_cast<double>(*ca->count) / static_cast<double>(*ta->count);
        double y = static_cast<double>(*cb->count) / static_cast<double>(*tb->count);
        cc.points.push_back({interest, x, y});
        xs.push_back(x);
        ys.push_back(y);
    }
    cc.r = pearson(xs, ys, 3);
    return cc;
}

std::set<std::string> default_political_names() {
    return {"Politics", "Voting", "Election", "Politics and social issues", "Community issues",
            "Social change"};
}

std::vector<TopSpendRow> top_spend_table(const adlib::TargetingDataset& dataset,
                                         const SkewTable& skews, std::size_t n,
                                         const SkewThresholds& thresholds,
                                         const std::set<std::string>& political_names) {
    if (n < 1) throw std::invalid_argument("top_spend_table: n must be >= 1");
    auto lower = [](std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    std::set<std::string> political;
    for (const auto& p : political_names) political.insert(lower(p));

    std::map<std::string, TopSpendRow> rows;
    for (const auto& [key, spend] : dataset.spend) {
        using K = adlib::CriterionKind;
        if (key.kind != K::Interest && key.kind != K::Demographic && key.kind != K::Behavior) continue;
        auto& row = rows[key.name];
        row.interest = key.name;
        (key.mode == Mode::Include ? row.inclusion_spend : row.exclusion_spend) += spend;
    }

    std::map<std::string, std::map<AudiencePair, const SkewScore*>> by_name;
    for (const auto& r : skews.rows)
        if (auto p = parse_pair(r.pair_label)) by_name[r.interest_name][*p] = &r.score;

    std::vector<TopSpendRow> out;
    for (auto& [name, row] : rows) {
        row.political = political.count(lower(name)) > 0;
        auto it = by_name.find(name);
        for (AudiencePair p : kAllPairs) {
            std::optional<double> v;
            if (it != by_name.end()) {
                auto s = it->second.find(p);
                if (s != it->second.end() && s->second->usable()) v = s->second->value;
            }
            row.skews[p] = v;
        }
        row.leaning = classify_value(row.skews[AudiencePair::RD], thresholds);
        out.push_back(std::move(row));
    }
    std::stable_sort(out.begin(), out.end(), [](const TopSpendRow& a, const TopSpendRow& b) {
        Micros ta = a.inclusion_spend + a.exclusion_spend;
        Micros tb = b.inclusion_spend + b.exclusion_spend;
        if (ta != tb) return ta > tb;
        return a.interest < b.interest;
    });
    if (out.size() > n) out.resize(n);
    return out;
}

}  // namespace proxyaudit::analytics
