#include "proxyaudit/skew.hpp"

#include <cmath>
#include <stdexcept>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit {

SkewScore compute_skew(std::int64_t n_a_i, std::int64_t n_a, std::int64_t n_b_i, std::int64_t n_b,
                       AudiencePair pair, std::int64_t reliability_floor) {
    if (n_a <= 0 || n_b <= 0)
        throw std::invalid_argument("compute_skew: audience totals must be positive");
    if (n_a_i < 0 || n_b_i < 0 || n_a_i > n_a || n_b_i > n_b)
        throw std::invalid_argument("compute_skew: interest count outside [0, total]");

    SkewScore s;
    s.pair = pair;
    s.n_a_i = n_a_i;
    s.n_a = n_a;
    s.n_b_i = n_b_i;
    s.n_b = n_b;

    // p_A - p_B and p_A + p_B share the denominator n_a*n_b, so the ratio is
    // an exact rational in the cross-multiplied counts.
    const __int128 a = static_cast<__int128>(n_a_i) * n_b;
    const __int128 b = static_cast<__int128>(n_b_i) * n_a;
    if (a + b == 0) {
        s.reason = "interest absent from both audiences";
        return s;
    }
    s.value = exact_ratio(a - b, a + b);
    s.reliable = std::min(n_a_i, n_b_i) >= reliability_floor;
    if (!s.reliable) s.reason = "interest count below reliability floor";
    return s;
}

std::string_view to_string(Leaning l) {
    switch (l) {
        case Leaning::DemocraticSkew: return "DemocraticSkew";
        case Leaning::Neutral: return "Neutral";
        case Leaning::RepublicanSkew: return "RepublicanSkew";
        case Leaning::Unavailable: return "Unavailable";
    }
    return "?";
}

SkewThresholds SkewThresholds::make(double democratic_below, double republican_at_or_above) {
    if (!(democratic_below < republican_at_or_above))
        throw ConfigError("tertile thresholds must satisfy democratic_below < republican_at_or_above");
    return SkewThresholds{democratic_below, republican_at_or_above};
}

Leaning classify_value(std::optional<double> value, const SkewThresholds& t) {
    if (!value) return Leaning::Unavailable;
    if (*value < t.democratic_below) return Leaning::DemocraticSkew;
    if (*value >= t.republican_at_or_above) return Leaning::RepublicanSkew;
    return Leaning::Neutral;
}

Leaning classify_tertile(const SkewScore& score, const SkewThresholds& t) {
    if (!score.usable()) return Leaning::Unavailable;
    return classify_value(score.value, t);
}

SkewThresholds TertileCuts::thresholds() const {
    if (degenerate) throw ConfigError("degenerate tertile cuts: all scores equal");
    return SkewThresholds::make(lower, upper);
}

TertileCuts derive_tertile_thresholds(std::span<const SkewScore> scores) {
    std::vector<double> values;
    for (const auto& s : scores)
        if (s.value) values.push_back(*s.value);
    if (values.size() < 3)
        throw DataError("tertile thresholds need at least 3 defined scores, got " +
                        std::to_string(values.size()));
    TertileCuts cuts;
    cuts.lower = quantile_linear(values, 1.0 / 3.0);
    cuts.upper = quantile_linear(values, 2.0 / 3.0);
    cuts.degenerate = !(cuts.lower < cuts.upper);
    return cuts;
}

std::int64_t Histogram::total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

Histogram make_histogram(std::span<const std::optional<double>> values, double bin_width) {
    if (!(bin_width > 0)) throw std::invalid_argument("bin_width must be positive");
    Histogram h;
    h.bin_width = bin_width;
    const auto nbins = static_cast<std::size_t>(std::ceil(2.0 / bin_width - 1e-9));
    h.counts.assign(nbins, 0);
    for (const auto& v : values) {
        if (!v) {
            ++h.undefined;
            continue;
        }
        // Small epsilon keeps values that sit exactly on an edge (0.4 with
        // width 0.1) in the bin that starts there.
        double pos = (*v - h.lo) / bin_width + 1e-9;
        auto idx = static_cast<std::ptrdiff_t>(std::floor(pos));
        if (idx < 0) idx = 0;
        if (idx >= static_cast<std::ptrdiff_t>(nbins)) idx = static_cast<std::ptrdiff_t>(nbins) - 1;
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    return h;
}

std::map<AudiencePair, Histogram> skew_histogram(std::span<const SkewScore> scores,
                                                 double bin_width) {
    if (!(bin_width > 0)) throw std::invalid_argument("bin_width must be positive");
    std::map<AudiencePair, std::vector<std::optional<double>>> by_pair;
    for (AudiencePair p : kAllPairs) by_pair[p];
    for (const auto& s : scores) by_pair[s.pair].push_back(s.value);
    std::map<AudiencePair, Histogram> out;
    for (const auto& [pair, values] : by_pair) out[pair] = make_histogram(values, bin_width);
    return out;
}

}  // namespace proxyaudit
