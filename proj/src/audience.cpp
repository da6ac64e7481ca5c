#include "proxyaudit/audience.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/errors.hpp"

namespace proxyaudit {

namespace {

bool valid_state(const std::string& s) {
    return s.size() == 2 && std::isupper(static_cast<unsigned char>(s[0])) &&
           std::isupper(static_cast<unsigned char>(s[1]));
}

}  // namespace

VoterLoadResult load_voter_records(const std::filesystem::path& source,
                                   const std::set<std::string>& allowed_states) {
    auto lines = csv::read_lines(source);
    if (lines.empty() || lines[0] != "voter_id,state,party,race")
        throw DataError(source.string() + ": format mismatch (expected header voter_id,state,party,race)");

    VoterLoadResult out;
    std::unordered_set<std::string> seen;
    std::size_t data_rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        ++data_rows;
        const std::size_t line_no = i + 1;
        auto f = csv::split_line(lines[i]);
        auto reject = [&](std::string why) { out.rejects.rows.push_back({line_no, std::move(why)}); };
        if (f.size() != 4) {
            reject("expected 4 fields, got " + std::to_string(f.size()));
            continue;
        }
        if (f[0].empty()) {
            reject("empty voter_id");
            continue;
        }
        if (!valid_state(f[1]) || (!allowed_states.empty() && !allowed_states.count(f[1]))) {
            reject("state '" + f[1] + "' not allowed");
            continue;
        }
        auto party = parse_party(f[2]);
        if (!party) {
            reject("unknown party '" + f[2] + "'");
            continue;
        }
        auto race = parse_race(f[3]);
        if (!race) {
            reject("unknown race '" + f[3] + "'");
            continue;
        }
        if (!seen.insert(f[0]).second) {
            reject("duplicate voter_id '" + f[0] + "'");
            continue;
        }
        out.records.push_back({f[0], f[1], *party, *race});
    }
    if (data_rows > 0 && out.rejects.count() * 2 > data_rows)
        throw DataError(source.string() + ": format mismatch (" + std::to_string(out.rejects.count()) +
                        " of " + std::to_string(data_rows) + " rows rejected)");
    return out;
}

std::optional<AudienceSelector> AudienceSelector::parse(std::string_view label) {
    if (auto p = parse_party(label)) return AudienceSelector(*p);
    if (auto r = parse_race(label)) return AudienceSelector(*r);
    return std::nullopt;
}

bool AudienceSelector::matches(const VoterRecord& r) const {
    if (auto p = std::get_if<Party>(&which_)) return r.party == *p;
    return r.race == std::get<Race>(which_);
}

std::string AudienceSelector::label() const {
    if (auto p = std::get_if<Party>(&which_)) return std::string(to_string(*p));
    return std::string(to_string(std::get<Race>(which_)));
}

bool AudienceSpec::contains(const std::string& voter_id) const {
    return std::binary_search(member_ids.begin(), member_ids.end(), voter_id);
}

AudienceSpec build_uniform_audience(const std::vector<VoterRecord>& records,
                                    const AudienceSelector& selector, std::size_t requested_size,
                                    std::uint64_t seed) {
    if (requested_size == 0) throw std::invalid_argument("requested_size must be positive");
    std::vector<const VoterRecord*> pool;
    for (const auto& r : records)
        if (selector.matches(r)) pool.push_back(&r);
    if (pool.empty())
        throw DataError("no voter records match selector " + selector.label());

    AudienceSpec spec;
    spec.label = selector.label();
    spec.sample_seed = seed;
    spec.requested_size = requested_size;
    const std::size_t take = std::min(requested_size, pool.size());
    spec.shortfall = pool.size() < requested_size;

    // Partial Fisher-Yates over the eligible pool in file order.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        std::uint64_t span = pool.size() - i;
        std::size_t j = i + static_cast<std::size_t>(rng() % span);
        std::swap(pool[i], pool[j]);
    }
    spec.member_ids.reserve(take);
    for (std::size_t i = 0; i < take; ++i) spec.member_ids.push_back(pool[i]->voter_id);
    std::sort(spec.member_ids.begin(), spec.member_ids.end());
    return spec;
}

std::size_t verify_disjoint(const AudienceSpec& a, const AudienceSpec& b) {
    std::size_t n = 0;
    auto i = a.member_ids.begin();
    auto j = b.member_ids.begin();
    while (i != a.member_ids.end() && j != b.member_ids.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

std::optional<std::string> size_mismatch_warning(const AudienceSpec& a, const AudienceSpec& b) {
    auto big = std::max(a.size(), b.size());
    auto small = std::min(a.size(), b.size());
    if (big == 0 || (big - small) * 10 <= big) return std::nullopt;
    return "audiences " + a.label + " (" + std::to_string(a.size()) + ") and " + b.label + " (" +
           std::to_string(b.size()) + ") differ in size by more than 10%";
}

std::string audience_to_json(const AudienceSpec& spec) {
    nlohmann::ordered_json j;
    j["label"] = spec.label;
    j["seed"] = spec.sample_seed;
    j["requested_size"] = spec.requested_size;
    j["shortfall"] = spec.shortfall;
    j["member_ids"] = spec.member_ids;
    return j.dump(1);
}

AudienceSpec audience_from_json(std::string_view text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("audience file: invalid JSON");
    try {
        AudienceSpec spec;
        spec.label = j.at("label").get<std::string>();
        spec.sample_seed = j.at("seed").get<std::uint64_t>();
        spec.requested_size = j.at("requested_size").get<std::size_t>();
        spec.shortfall = j.value("shortfall", false);
        spec.member_ids = j.at("member_ids").get<std::vector<std::string>>();
        std::sort(spec.member_ids.begin(), spec.member_ids.end());
        spec.member_ids.erase(std::unique(spec.member_ids.begin(), spec.member_ids.end()),
                              spec.member_ids.end());
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("audience file: ") + e.what());
    }
}

void save_audience(const AudienceSpec& spec, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << audience_to_json(spec) << '\n';
    if (!out) throw IoError(path.string(), "write failure");
}

AudienceSpec load_audience(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return audience_from_json(ss.str());
}

}  // namespace proxyaudit
