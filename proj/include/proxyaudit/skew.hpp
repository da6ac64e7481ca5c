#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxyaudit/labels.hpp"

namespace proxyaudit {

// Interest-restricted counts below this floor mark a score unreliable. The
// original large-scale setting used roughly 1,000; desk-scale worlds are
// ~100x smaller.
inline constexpr std::int64_t kDefaultReliabilityFloor = 50;

// Audience skew of one interest between two disjoint audiences A and B:
//   (p_A - p_B) / (p_A + p_B),  p_G = n_g_i / n_g.
// `value` is empty when p_A + p_B == 0 (no information, distinct from 0).
struct SkewScore {
    std::optional<double> value;
    AudiencePair pair = AudiencePair::RD;
    std::int64_t n_a_i = 0;
    std::int64_t n_a = 0;
    std::int64_t n_b_i = 0;
    std::int64_t n_b = 0;
    bool reliable = false;
    std::string reason;  // set when undefined or unreliable

    bool defined() const noexcept { return value.has_value(); }
    // Defined and reliable; the only scores that reach reports and tertiles.
    bool usable() const noexcept { return value.has_value() && reliable; }
};

// Throws std::invalid_argument unless n_a > 0, n_b > 0, 0 <= n_a_i <= n_a and
// 0 <= n_b_i <= n_b.
SkewScore compute_skew(std::int64_t n_a_i, std::int64_t n_a, std::int64_t n_b_i, std::int64_t n_b,
                       AudiencePair pair = AudiencePair::RD,
                       std::int64_t reliability_floor = kDefaultReliabilityFloor);

enum class Leaning { DemocraticSkew, Neutral, RepublicanSkew, Unavailable };

std::string_view to_string(Leaning l);

// Democratic side is exclusive (value < democratic_below), Republican side
// inclusive (value >= republican_at_or_above).
struct SkewThresholds {
    double democratic_below = -0.073;
    double republican_at_or_above = 0.063;

    // Throws ConfigError unless democratic_below < republican_at_or_above.
    static SkewThresholds make(double democratic_below, double republican_at_or_above);
};

Leaning classify_tertile(const SkewScore& score, const SkewThresholds& thresholds);
Leaning classify_value(std::optional<double> value, const SkewThresholds& thresholds);

struct TertileCuts {
    double lower = 0;  // 1/3 quantile
    double upper = 0;  // 2/3 quantile
    bool degenerate = false;

    // Throws ConfigError when degenerate.
    SkewThresholds thresholds() const;
};

// Linear-interpolation 1/3 and 2/3 quantiles of the defined scores.
// Throws DataError with fewer than three defined scores.
TertileCuts derive_tertile_thresholds(std::span<const SkewScore> scores);

struct Histogram {
    double lo = -1.0;
    double bin_width = 0.1;
    std::vector<std::int64_t> counts;
    std::int64_t undefined = 0;

    double bin_start(std::size_t i) const { return lo + bin_width * static_cast<double>(i); }
    std::int64_t total() const;
};

// Bins over [-1, 1]; the last bin is closed so that +1 is counted. Scores
// are grouped by their pair. Throws std::invalid_argument for bin_width <= 0.
std::map<AudiencePair, Histogram> skew_histogram(std::span<const SkewScore> scores,
                                                 double bin_width);
Histogram make_histogram(std::span<const std::optional<double>> values, double bin_width);

}  // namespace proxyaudit
