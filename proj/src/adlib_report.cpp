#include <array>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "proxyaudit/adlib.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit::adlib {

using nlohmann::json;

std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t from, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = from; i < from + len; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (!y || !m || !d) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_millions(Micros m) {
    return fixed(static_cast<double>(m) / (1e6 * static_cast<double>(kMicrosPerUnit)), 1) + " M";
}

namespace {

constexpr std::array<std::pair<CriterionKind, std::string_view>, 8> kKinds{{
    {CriterionKind::Interest, "interest"},
    {CriterionKind::Demographic, "demographic"},
    {CriterionKind::Behavior, "behavior"},
    {CriterionKind::Age, "age"},
    {CriterionKind::Gender, "gender"},
    {CriterionKind::Location, "location"},
    {CriterionKind::CustomAudience, "custom_audience"},
    {CriterionKind::Lookalike, "lookalike"},
}};

}  // namespace

std::string_view to_string(CriterionKind k) {
    for (const auto& [kind, name] : kKinds)
        if (kind == k) return name;
    return "opaque";
}

std::optional<CriterionKind> parse_kind(std::string_view s) {
    for (const auto& [kind, name] : kKinds)
        if (name == s) return kind;
    return std::nullopt;
}

std::string_view to_string(Mode m) { return m == Mode::Include ? "include" : "exclude"; }

std::optional<Mode> parse_mode(std::string_view s) {
    if (s == "include") return Mode::Include;
    if (s == "exclude") return Mode::Exclude;
    return std::nullopt;
}

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path + key, "missing");
    return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw ParseError(path + key, "expected string");
    return v.get<std::string>();
}

Date require_date(const json& obj, const std::string& key, const std::string& path) {
    auto s = require_string(obj, key, path);
    auto d = parse_date(s);
    if (!d) throw ParseError(path + key, "expected YYYY-MM-DD, got '" + s + "'");
    return *d;
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number()) throw ParseError(path + key, "expected number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(path + key, "not finite");
    return d;
}

}  // namespace

ParsedReport parse_targeting_report(std::string_view payload, Date snapshot_date) {
    auto root = json::parse(payload, nullptr, false);
    if (root.is_discarded()) throw ParseError("$", "payload is not valid JSON");
    if (!root.is_object()) throw ParseError("$", "expected object");

    ParsedReport out;
    auto& s = out.snapshot;
    s.snapshot_date = snapshot_date;
    s.advertiser_id = require_string(root, "advertiser_id", "");
    if (s.advertiser_id.empty()) throw ParseError("advertiser_id", "empty");
    s.window_start = require_date(root, "window_start", "");
    s.window_end = require_date(root, "window_end", "");
    if ((s.window_end - s.window_start).count() != 6)
        throw ParseError("window_end", "window must span 7 days");
    if (snapshot_date < s.window_end)
        throw ParseError("window_end", "snapshot date precedes the end of the window");
    double spend = require_number(root, "total_spend", "");
    if (spend < 0) throw ParseError("total_spend", "negative");
    if (spend > 9.0e12) throw ParseError("total_spend", "out of range");
    s.total_spend = std::llround(spend * static_cast<double>(kMicrosPerUnit));

    const auto& crit = require(root, "criteria", "");
    if (!crit.is_array()) throw ParseError("criteria", "expected array");
    for (std::size_t i = 0; i < crit.size(); ++i) {
        const auto& c = crit[i];
        const std::string path = "criteria[" + std::to_string(i) + "].";
        if (!c.is_object()) throw ParseError(path.substr(0, path.size() - 1), "expected object");
        TargetingCriterion tc;
        tc.name = require_string(c, "name", path);
        if (tc.name.empty()) throw ParseError(path + "name", "empty");
        tc.raw_kind = require_string(c, "kind", path);
        if (auto k = parse_kind(tc.raw_kind)) {
            tc.kind = *k;
        } else {
            tc.kind = CriterionKind::Opaque;
            out.warnings.push_back(path + "kind: unknown criterion kind '" + tc.raw_kind +
                                   "' kept as opaque");
        }
        auto mode = require_string(c, "mode", path);
        auto m = parse_mode(mode);
        if (!m) throw ParseError(path + "mode", "expected include|exclude, got '" + mode + "'");
        tc.mode = *m;
        const auto& ads = require(c, "num_ads", path);
        if (!ads.is_number_integer()) throw ParseError(path + "num_ads", "expected integer");
        tc.num_ads = ads.get<std::int64_t>();
        if (tc.num_ads < 1) throw ParseError(path + "num_ads", "must be >= 1");
        tc.spend_fraction = require_number(c, "spend_fraction", path);
        if (tc.spend_fraction < 0.0 || tc.spend_fraction > 1.0)
            throw ParseError(path + "spend_fraction", "outside [0, 1]");
        s.criteria.push_back(std::move(tc));
    }
    return out;
}

std::string to_payload(const TargetingReportSnapshot& s) {
    nlohmann::ordered_json j;
    j["advertiser_id"] = s.advertiser_id;
    j["window_start"] = format_date(s.window_start);
    j["window_end"] = format_date(s.window_end);
    // Micros are integral, so the decimal representation is exact to 6 places.
    j["total_spend"] = static_cast<double>(s.total_spend) / static_cast<double>(kMicrosPerUnit);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : s.criteria) {
        nlohmann::ordered_json o;
        o["name"] = c.name;
        o["kind"] = c.kind == CriterionKind::Opaque ? c.raw_kind : std::string(to_string(c.kind));
        o["mode"] = std::string(to_string(c.mode));
        o["num_ads"] = c.num_ads;
        o["spend_fraction"] = c.spend_fraction;
        arr.push_back(std::move(o));
    }
    j["criteria"] = std::move(arr);
    return j.dump();
}

}  // namespace proxyaudit::adlib
