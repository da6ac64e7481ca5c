#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace proxyaudit {

// num/den as the correctly rounded double of the exact rational whenever the
// reduced operands fit in 53 bits. Two callers that reach the same rational
// through different integer routes get bit-identical results.
double exact_ratio(__int128 num, __int128 den);

// Pearson correlation; nullopt when fewer than `min_n` points or when either
// axis has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y,
                              std::size_t min_n = 3);

// Linear-interpolation quantile (Hyndman-Fan type 7) over unsorted data.
double quantile_linear(std::span<const double> values, double q);

double median(std::span<const double> values);
double mean(std::span<const double> values);

// Round to `digits` significant figures, half away from zero.
std::int64_t round_sig_figs(std::int64_t value, int digits);

// Locale-independent, fixed precision text for CSV/SVG output.
std::string fixed(double v, int decimals);

// 64-bit FNV-1a, used to derive per-query RNG streams.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 14695981039346656037ULL);

std::string sha256_hex(std::string_view bytes);

}  // namespace proxyaudit
