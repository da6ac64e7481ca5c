#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace proxyaudit::testing {

struct PropertyResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;

    bool passed() const { return cases > 0 && failures == 0; }
    void fail(const std::string& what) {
        if (failures++ == 0) first_failure = what;
    }
};

// Randomized checks over `cases` draws each, seeded for repeatability.
PropertyResult check_skew_antisymmetry(std::size_t cases, std::uint64_t seed);
PropertyResult check_skew_scale_invariance(std::size_t cases, std::uint64_t seed);
PropertyResult check_skew_bounds(std::size_t cases, std::uint64_t seed);
PropertyResult check_conjunction_monotonicity(std::size_t cases, std::uint64_t seed);
PropertyResult check_tertile_boundaries(std::size_t cases, std::uint64_t seed);
PropertyResult check_spend_skew_antisymmetry(std::size_t cases, std::uint64_t seed);
PropertyResult check_spend_skew_scale_invariance(std::size_t cases, std::uint64_t seed);

std::vector<PropertyResult> run_all_properties(std::size_t cases, std::uint64_t seed);

}  // namespace proxyaudit::testing
