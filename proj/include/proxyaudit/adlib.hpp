#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "proxyaudit/errors.hpp"

namespace proxyaudit::adlib {

// Calendar date as days since the Unix epoch.
using Date = std::chrono::sys_days;

// Strict YYYY-MM-DD.
std::optional<Date> parse_date(std::string_view s);
std::string format_date(Date d);

// Money in integer micro-units (1e-6 of the currency unit).
using Micros = std::int64_t;
inline constexpr Micros kMicrosPerUnit = 1'000'000;

// "6.6 M" style rendering in millions with one decimal.
std::string format_millions(Micros m);

enum class CriterionKind {
    Interest,
    Demographic,
    Behavior,
    Age,
    Gender,
    Location,
    CustomAudience,
    Lookalike,
    Opaque,  // unknown kind, raw text kept in TargetingCriterion::raw_kind
};

enum class Mode { Include, Exclude };

std::string_view to_string(CriterionKind k);
std::optional<CriterionKind> parse_kind(std::string_view s);
std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct TargetingCriterion {
    std::string name;
    CriterionKind kind = CriterionKind::Interest;
    std::string raw_kind;  // as found in the payload
    Mode mode = Mode::Include;
    std::int64_t num_ads = 1;
    double spend_fraction = 0;

    bool operator==(const TargetingCriterion&) const = default;
};

// One observation of an advertiser's weekly aggregate. Windows are 7
// calendar days, both ends inclusive (window_end - window_start == 6 days).
struct TargetingReportSnapshot {
    std::string advertiser_id;
    Date snapshot_date{};
    Date window_start{};
    Date window_end{};
    Micros total_spend = 0;
    std::vector<TargetingCriterion> criteria;

    bool operator==(const TargetingReportSnapshot&) const = default;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& field, const std::string& what)
        : DataError("parse error at '" + field + "': " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ParsedReport {
    TargetingReportSnapshot snapshot;
    std::vector<std::string> warnings;
};

// Canonical payload:
//   {advertiser_id, window_start, window_end, total_spend,
//    criteria:[{name, kind, mode, num_ads, spend_fraction}]}
// total_spend is in currency units. Every failure, including non-JSON input,
// surfaces as ParseError naming the offending field.
ParsedReport parse_targeting_report(std::string_view payload, Date snapshot_date);

// Inverse of the parser, used to re-export normalized windows.
std::string to_payload(const TargetingReportSnapshot& snapshot);

}  // namespace proxyaudit::adlib
