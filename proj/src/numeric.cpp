#include "proxyaudit/numeric.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace proxyaudit {

namespace {

__int128 abs128(__int128 v) { return v < 0 ? -v : v; }

__int128 gcd128(__int128 a, __int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

constexpr __int128 kMantissaLimit = static_cast<__int128>(1) << 53;

}  // namespace

double exact_ratio(__int128 num, __int128 den) {
    if (den == 0) throw std::invalid_argument("exact_ratio: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    if (num == 0) return 0.0;
    __int128 g = gcd128(num, den);
    num /= g;
    den /= g;
    if (abs128(num) < kMantissaLimit && den < kMantissaLimit)
        return static_cast<double>(num) / static_cast<double>(den);
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y,
                              std::size_t min_n) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < min_n || n < 2) return std::nullopt;
    double mx = mean(x);
    double my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double quantile_linear(std::span<const double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty set");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double h = (static_cast<double>(v.size()) - 1.0) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean of empty set");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::int64_t round_sig_figs(std::int64_t value, int digits) {
    if (value == 0 || digits <= 0) return value;
    bool neg = value < 0;
    std::int64_t mag = neg ? -value : value;
    std::int64_t scale = 1;
    std::int64_t limit = 1;
    for (int i = 0; i < digits; ++i) limit *= 10;
    while (mag / scale >= limit) scale *= 10;
    std::int64_t q = mag / scale;
    std::int64_t rem = mag % scale;
    if (scale > 1 && rem * 2 >= scale) ++q;
    std::int64_t out = q * scale;
    return neg ? -out : out;
}

std::string fixed(double v, int decimals) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // "-0.00" after rounding
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace proxyaudit
