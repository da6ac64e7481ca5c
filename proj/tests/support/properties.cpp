#include "properties.hpp"

#include <cmath>
#include <random>

#include "proxyaudit/analytics.hpp"
#include "proxyaudit/audience.hpp"
#include "proxyaudit/reach.hpp"
#include "proxyaudit/skew.hpp"
#include "proxyaudit/synthworld.hpp"

namespace proxyaudit::testing {

namespace {

// Counts spanning tiny to platform-scale magnitudes.
std::int64_t draw_total(std::mt19937_64& rng) {
    int digits = 1 + static_cast<int>(rng() % 9);
    std::int64_t hi = 1;
    for (int i = 0; i < digits; ++i) hi *= 10;
    return 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi));
}

std::int64_t draw_part(std::mt19937_64& rng, std::int64_t total) {
    switch (rng() % 5) {
        case 0: return 0;
        case 1: return total;
        default: return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(total + 1));
    }
}

std::string describe(std::int64_t a_i, std::int64_t a, std::int64_t b_i, std::int64_t b) {
    return "(" + std::to_string(a_i) + ", " + std::to_string(a) + ", " + std::to_string(b_i) + ", " +
           std::to_string(b) + ")";
}

}  // namespace

PropertyResult check_skew_antisymmetry(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"skew antisymmetry S_AB = -S_BA"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        auto a = draw_total(rng), b = draw_total(rng);
        auto a_i = draw_part(rng, a), b_i = draw_part(rng, b);
        auto ab = compute_skew(a_i, a, b_i, b);
        auto ba = compute_skew(b_i, b, a_i, a);
        if (ab.defined() != ba.defined() || (ab.defined() && *ab.value != -*ba.value))
            r.fail(describe(a_i, a, b_i, b));
    }
    return r;
}

PropertyResult check_skew_scale_invariance(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"skew scale invariance under proportional count scaling"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        auto a = draw_total(rng) % 100000 + 1, b = draw_total(rng) % 100000 + 1;
        auto a_i = draw_part(rng, a), b_i = draw_part(rng, b);
        auto ka = 1 + static_cast<std::int64_t>(rng() % 1000);
        auto kb = 1 + static_cast<std::int64_t>(rng() % 1000);
        auto base = compute_skew(a_i, a, b_i, b);
        // Both groups scaled by independent factors leave p_A and p_B unchanged.
        auto scaled = compute_skew(a_i * ka, a * ka, b_i * kb, b * kb);
        if (base.defined() != scaled.defined() || (base.defined() && *base.value != *scaled.value))
            r.fail(describe(a_i, a, b_i, b) + " x (" + std::to_string(ka) + ", " + std::to_string(kb) + ")");
    }
    return r;
}

PropertyResult check_skew_bounds(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"skew bounds [-1, 1] with extremes only for one-sided interests"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        auto a = draw_total(rng), b = draw_total(rng);
        auto a_i = draw_part(rng, a), b_i = draw_part(rng, b);
        auto s = compute_skew(a_i, a, b_i, b);
        bool ok;
        if (a_i == 0 && b_i == 0) {
            ok = !s.defined();
        } else {
            double v = *s.value;
            ok = v >= -1.0 && v <= 1.0 && ((v == 1.0) == (b_i == 0)) && ((v == -1.0) == (a_i == 0));
        }
        if (!ok) r.fail(describe(a_i, a, b_i, b));
    }
    return r;
}

PropertyResult check_conjunction_monotonicity(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"reach conjunction monotonicity N_A^i <= N_A"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        synth::WorldConfig wc;
        wc.population_size = 20 + rng() % 200;
        wc.rng_seed = rng();
        wc.activity_rate = 0.5 + 0.5 * static_cast<double>(rng() % 1000) / 1000.0;
        for (int k = 0; k < 3; ++k)
            wc.interests.push_back({"i" + std::to_string(k), "", 0.05 + 0.3 * static_cast<double>(rng() % 1000) / 1000.0,
                                    {{AudiencePair::RD, -0.9 + 1.8 * static_cast<double>(rng() % 1000) / 1000.0}}});
        auto pop = synth::generate_population(wc);
        std::vector<VoterRecord> records;
        for (const auto& m : pop.members()) records.push_back({m.voter_id, m.state, m.party, m.race});
        AudienceSpec aud;
        try {
            aud = build_uniform_audience(records, AudienceSelector(Party::Rep), 1 + rng() % 100, rng());
        } catch (const DataError&) {
            aud = build_uniform_audience(records, AudienceSelector(Party::Dem), 1 + rng() % 100, rng());
        }
        EstimateModel models[] = {EstimateModel::exact(), EstimateModel::rounded(1 + static_cast<int>(rng() % 3)),
                                  EstimateModel::gaussian(0.3, rng())};
        for (const auto& model : models) {
            SyntheticBackend be(pop, model);
            auto total = be.estimate(aud, std::nullopt).count;
            for (const auto& id : pop.interest_ids()) {
                auto with = be.estimate(aud, id).count;
                if (with > total || with < 0)
                    r.fail(be.id() + " " + aud.label + "/" + id + ": " + std::to_string(with) + " > " +
                           std::to_string(total));
            }
        }
    }
    return r;
}

PropertyResult check_tertile_boundaries(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"tertile rules (< -0.073 Democratic, >= 0.063 Republican)"};
    std::mt19937_64 rng(seed);
    const SkewThresholds t;
    auto reference = [&](double v) {
        if (v < -0.073) return Leaning::DemocraticSkew;
        if (v >= 0.063) return Leaning::RepublicanSkew;
        return Leaning::Neutral;
    };
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        double v;
        switch (i % 4) {
            // Values at and one ulp around each boundary.
            case 0: v = std::nextafter(-0.073, (rng() & 1) ? 1.0 : -1.0); break;
            case 1: v = std::nextafter(0.063, (rng() & 1) ? 1.0 : -1.0); break;
            case 2: v = (rng() & 1) ? -0.073 : 0.063; break;
            default: v = -1.0 + 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        }
        auto got = classify_value(v, t);
        if (got != reference(v)) r.fail("value " + std::to_string(v));
        // Unreliable scores are never classified.
        SkewScore s;
        s.value = v;
        s.reliable = false;
        if (classify_tertile(s, t) != Leaning::Unavailable) r.fail("unreliable score classified");
    }
    return r;
}

PropertyResult check_spend_skew_antisymmetry(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"spend skew antisymmetry"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        auto a = static_cast<adlib::Micros>(rng() % 1'000'000'000'000ULL) * ((rng() % 4) ? 1 : 0);
        auto b = static_cast<adlib::Micros>(rng() % 1'000'000'000'000ULL) * ((rng() % 4) ? 1 : 0);
        auto ab = analytics::spend_skew(a, b), ba = analytics::spend_skew(b, a);
        if (ab.has_value() != ba.has_value() || (ab && *ab != -*ba))
            r.fail(std::to_string(a) + ", " + std::to_string(b));
    }
    return r;
}

PropertyResult check_spend_skew_scale_invariance(std::size_t cases, std::uint64_t seed) {
    PropertyResult r{"spend skew scale invariance"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < cases; ++i, ++r.cases) {
        auto a = static_cast<adlib::Micros>(rng() % 1'000'000'000ULL);
        auto b = static_cast<adlib::Micros>(rng() % 1'000'000'000ULL);
        auto k = static_cast<adlib::Micros>(1 + rng() % 100'000);
        auto base = analytics::spend_skew(a, b), scaled = analytics::spend_skew(a * k, b * k);
        if (base.has_value() != scaled.has_value() || (base && *base != *scaled))
            r.fail(std::to_string(a) + ", " + std::to_string(b) + " x " + std::to_string(k));
    }
    return r;
}

std::vector<PropertyResult> run_all_properties(std::size_t cases, std::uint64_t seed) {
    return {check_skew_antisymmetry(cases, seed + 1),        check_skew_scale_invariance(cases, seed + 2),
            check_skew_bounds(cases, seed + 3),              check_conjunction_monotonicity(cases, seed + 4),
            check_tertile_boundaries(cases, seed + 5),       check_spend_skew_antisymmetry(cases, seed + 6),
            check_spend_skew_scale_invariance(cases, seed + 7)};
}

}  // namespace proxyaudit::testing
