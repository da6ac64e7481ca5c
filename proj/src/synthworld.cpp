#include "proxyaudit/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit::synth {

namespace {

constexpr double kMixTolerance = 1e-9;

// mt19937_64 with a hand-rolled [0,1) mapping so that generated worlds do
// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    template <typename Key>
    Key categorical(const std::vector<std::pair<Key, double>>& cdf) {
        double u = uniform();
        for (const auto& [key, cum] : cdf)
            if (u < cum) return key;
        return cdf.back().first;
    }

private:
    std::mt19937_64 engine_;
};

template <typename Key>
std::vector<std::pair<Key, double>> cumulative(const std::map<Key, double>& mix) {
    std::vector<std::pair<Key, double>> out;
    double acc = 0;
    for (const auto& [k, w] : mix) {
        if (w <= 0) continue;
        acc += w;
        out.emplace_back(k, acc);
    }
    return out;
}

template <typename Map>
void check_mix(const Map& mix, const char* what) {
    double sum = 0;
    for (const auto& [k, w] : mix) {
        if (w < 0 || !std::isfinite(w)) throw ConfigError(std::string(what) + ": negative or non-finite fraction");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kMixTolerance)
        throw ConfigError(std::string(what) + " fractions sum to " + fixed(sum, 12) + ", expected 1");
}

std::string voter_id_for(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "V%08zu", i + 1);
    return buf;
}

bool in_group_a(const Member& m, AudiencePair pair) {
    switch (pair) {
        case AudiencePair::RD: return m.party == Party::Rep;
        case AudiencePair::WB:
        case AudiencePair::WH: return m.race == Race::White;
        case AudiencePair::BH: return m.race == Race::Black;
    }
    return false;
}

bool in_group_b(const Member& m, AudiencePair pair) {
    switch (pair) {
        case AudiencePair::RD: return m.party == Party::Dem;
        case AudiencePair::WB: return m.race == Race::Black;
        case AudiencePair::WH:
        case AudiencePair::BH: return m.race == Race::Hispanic;
    }
    return false;
}

}  // namespace

GroupMultipliers planted_multipliers(const PlantedInterest& interest) {
    GroupMultipliers g;
    for (Party p : kAllParties) g.party[p] = 1.0;
    for (Race r : kAllRaces) g.race[r] = 1.0;

    for (const auto& [pair, s] : interest.planted_skew) {
        if (!(s > -1.0 && s < 1.0))
            throw ConfigError("interest '" + interest.interest_id + "': planted skew for " +
                              std::string(to_string(pair)) + " must lie in (-1, 1)");
    }

    if (auto it = interest.planted_skew.find(AudiencePair::RD); it != interest.planted_skew.end()) {
        g.party[Party::Rep] = 1.0 + it->second;
        g.party[Party::Dem] = 1.0 - it->second;
    }

    // Race pairs form a small graph over {White, Black, Hispanic}. Each edge
    // fixes the ratio m_A/m_B = (1+S)/(1-S). Propagate log-multipliers from
    // one root, reject inconsistent cycles, then rescale the involved groups
    // to mean 1 (which gives exactly 1+S / 1-S for a single pair).
    std::map<Race, double> logm;
    std::vector<std::tuple<Race, Race, double>> edges;
    for (const auto& [pair, s] : interest.planted_skew) {
        if (pair == AudiencePair::RD) continue;
        Race a = pair == AudiencePair::BH ? Race::Black : Race::White;
        Race b = pair == AudiencePair::WB ? Race::Black : Race::Hispanic;
        edges.emplace_back(a, b, std::log((1.0 + s) / (1.0 - s)));
    }
    if (!edges.empty()) {
        logm[std::get<0>(edges.front())] = 0.0;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& [a, b, lr] : edges) {
                bool ha = logm.count(a), hb = logm.count(b);
                if (ha && !hb) {
                    logm[b] = logm[a] - lr;
                    changed = true;
                } else if (!ha && hb) {
                    logm[a] = logm[b] + lr;
                    changed = true;
                }
            }
        }
        for (const auto& [a, b, lr] : edges) {
            if (std::abs(logm[a] - logm[b] - lr) > 1e-9)
                throw ConfigError("interest '" + interest.interest_id +
                                  "': planted race skews are mutually inconsistent");
        }
        double sum = 0;
        for (const auto& [r, lm] : logm) sum += std::exp(lm);
        double scale = static_cast<double>(logm.size()) / sum;
        for (const auto& [r, lm] : logm) g.race[r] = std::exp(lm) * scale;
    }
    return g;
}

void WorldConfig::validate() const {
    if (joint_mix) {
        std::map<int, double> flat;
        int i = 0;
        for (const auto& [k, w] : *joint_mix) flat[i++] = w;
        check_mix(flat, "joint party x race mix");
    } else {
        check_mix(party_mix, "party_mix");
        check_mix(race_mix, "race_mix");
    }
    if (!(activity_rate >= 0.0 && activity_rate <= 1.0))
        throw ConfigError("activity_rate must lie in [0, 1]");
    if (states.empty()) throw ConfigError("at least one state is required");
    std::set<std::string> ids;
    for (const auto& pi : interests) {
        if (pi.interest_id.empty()) throw ConfigError("interest with empty id");
        if (!ids.insert(pi.interest_id).second)
            throw ConfigError("duplicate interest id '" + pi.interest_id + "'");
        if (!(pi.base_rate >= 0.0 && pi.base_rate <= 1.0))
            throw ConfigError("interest '" + pi.interest_id + "': base_rate must lie in [0, 1]");
        auto g = planted_multipliers(pi);
        for (const auto& [p, mp] : g.party) {
            for (const auto& [r, mr] : g.race) {
                double prob = pi.base_rate * mp * mr;
                if (prob < 0.0 || prob > 1.0)
                    throw ConfigError("interest '" + pi.interest_id +
                                      "': planted skew implies membership probability " +
                                      fixed(prob, 4) + " for " + std::string(to_string(p)) + "/" +
                                      std::string(to_string(r)) + ", outside [0, 1]");
            }
        }
    }
}

Population::Population(std::vector<std::string> interest_ids,
                       std::vector<std::string> interest_names, std::vector<Member> members)
    : interest_ids_(std::move(interest_ids)),
      interest_names_(std::move(interest_names)),
      members_(std::move(members)) {
    if (interest_names_.size() != interest_ids_.size())
        throw std::invalid_argument("interest ids/names length mismatch");
    for (std::uint32_t i = 0; i < interest_ids_.size(); ++i)
        if (!interest_index_.emplace(interest_ids_[i], i).second)
            throw DataError("duplicate interest id '" + interest_ids_[i] + "'");
    member_index_.reserve(members_.size());
    for (std::size_t i = 0; i < members_.size(); ++i) {
        auto& m = members_[i];
        if (!member_index_.emplace(m.voter_id, i).second)
            throw DataError("duplicate voter id '" + m.voter_id + "'");
        std::sort(m.interests.begin(), m.interests.end());
        for (auto idx : m.interests)
            if (idx >= interest_ids_.size())
                throw DataError("member '" + m.voter_id + "' references unknown interest");
    }
}

std::optional<std::uint32_t> Population::interest_index(const std::string& interest_id) const {
    auto it = interest_index_.find(interest_id);
    if (it == interest_index_.end()) return std::nullopt;
    return it->second;
}

const Member* Population::find(const std::string& voter_id) const {
    auto it = member_index_.find(voter_id);
    return it == member_index_.end() ? nullptr : &members_[it->second];
}

bool Population::holds(const Member& m, std::uint32_t interest) const {
    return std::binary_search(m.interests.begin(), m.interests.end(), interest);
}

bool Population::operator==(const Population& o) const {
    if (interest_ids_ != o.interest_ids_ || interest_names_ != o.interest_names_) return false;
    if (members_.size() != o.members_.size()) return false;
    for (std::size_t i = 0; i < members_.size(); ++i) {
        const auto& a = members_[i];
        const auto& b = o.members_[i];
        if (a.voter_id != b.voter_id || a.state != b.state || a.party != b.party ||
            a.race != b.race || a.active != b.active || a.interests != b.interests)
            return false;
    }
    return true;
}

Population generate_population(const WorldConfig& config) {
    config.validate();
    Rng rng(config.rng_seed);

    std::vector<std::string> ids, names;
    std::vector<GroupMultipliers> mults;
    for (const auto& pi : config.interests) {
        ids.push_back(pi.interest_id);
        names.push_back(pi.name.empty() ? pi.interest_id : pi.name);
        mults.push_back(planted_multipliers(pi));
    }

    std::vector<std::pair<std::pair<Party, Race>, double>> joint_cdf;
    if (config.joint_mix) joint_cdf = cumulative(*config.joint_mix);
    auto party_cdf = cumulative(config.party_mix);
    auto race_cdf = cumulative(config.race_mix);

    std::vector<Member> members;
    members.reserve(config.population_size);
    for (std::size_t i = 0; i < config.population_size; ++i) {
        Member m;
        m.voter_id = voter_id_for(i);
        if (config.joint_mix) {
            auto [p, r] = rng.categorical(joint_cdf);
            m.party = p;
            m.race = r;
        } else {
            m.party = rng.categorical(party_cdf);
            m.race = rng.categorical(race_cdf);
        }
        m.state = config.states[rng.below(config.states.size())];
        m.active = rng.bernoulli(config.activity_rate);
        for (std::uint32_t k = 0; k < config.interests.size(); ++k) {
            double p = config.interests[k].base_rate * mults[k].party.at(m.party) *
                       mults[k].race.at(m.race);
            if (rng.bernoulli(p)) m.interests.push_back(k);
        }
        members.push_back(std::move(m));
    }
    return Population(std::move(ids), std::move(names), std::move(members));
}

SkewScore true_skew(const Population& pop, const std::string& interest_id, AudiencePair pair,
                    std::int64_t reliability_floor) {
    auto idx = pop.interest_index(interest_id);
    if (!idx) throw std::invalid_argument("true_skew: unknown interest '" + interest_id + "'");

    std::int64_t n_a = 0, n_a_i = 0, n_b = 0, n_b_i = 0;
    for (const auto& m : pop.members()) {
        if (!m.active) continue;
        if (in_group_a(m, pair)) {
            ++n_a;
            if (pop.holds(m, *idx)) ++n_a_i;
        } else if (in_group_b(m, pair)) {
            ++n_b;
            if (pop.holds(m, *idx)) ++n_b_i;
        }
    }
    if (n_a == 0 || n_b == 0)
        throw std::invalid_argument("true_skew: empty group among active members for pair " +
                                    std::string(to_string(pair)));

    SkewScore s;
    s.pair = pair;
    s.n_a_i = n_a_i;
    s.n_a = n_a;
    s.n_b_i = n_b_i;
    s.n_b = n_b;
    // Rates n_a_i/n_a and n_b_i/n_b as one exact rational.
    __int128 num = static_cast<__int128>(n_a_i) * n_b - static_cast<__int128>(n_b_i) * n_a;
    __int128 den = static_cast<__int128>(n_a_i) * n_b + static_cast<__int128>(n_b_i) * n_a;
    if (den == 0) {
        s.reason = "skew undefined: interest absent from both groups";
        return s;
    }
    s.value = exact_ratio(num, den);
    s.reliable = std::min(n_a_i, n_b_i) >= reliability_floor;
    if (!s.reliable) s.reason = "interest count below reliability floor";
    return s;
}

std::size_t export_voter_file(const Population& pop, const std::filesystem::path& destination) {
    csv::Writer w(destination);
    w.row({"voter_id", "state", "party", "race"});
    for (const auto& m : pop.members())
        w.row({m.voter_id, m.state, std::string(to_string(m.party)), std::string(to_string(m.race))});
    w.close();
    return pop.size();
}

namespace {
std::filesystem::path catalog_path(const std::filesystem::path& p) {
    return p.parent_path() / (p.stem().string() + "_interests.csv");
}
}  // namespace

void save_population(const Population& pop, const std::filesystem::path& destination) {
    {
        csv::Writer cat(catalog_path(destination));
        cat.row({"interest_id", "name"});
        for (std::size_t i = 0; i < pop.interest_ids().size(); ++i)
            cat.row({pop.interest_ids()[i], pop.interest_names()[i]});
        cat.close();
    }
    csv::Writer w(destination);
    w.row({"voter_id", "state", "party", "race", "active", "interests"});
    for (const auto& m : pop.members()) {
        std::string interests;
        for (std::size_t k = 0; k < m.interests.size(); ++k) {
            if (k) interests.push_back(';');
            interests += pop.interest_ids()[m.interests[k]];
        }
        w.row({m.voter_id, m.state, std::string(to_string(m.party)),
               std::string(to_string(m.race)), m.active ? "1" : "0", interests});
    }
    w.close();
}

Population load_population(const std::filesystem::path& source) {
    std::vector<std::string> ids, names;
    {
        auto lines = csv::read_lines(catalog_path(source));
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            auto f = csv::split_line(lines[i]);
            if (f.size() != 2) throw DataError(catalog_path(source).string() + ":" + std::to_string(i + 1) + ": expected 2 fields");
            ids.push_back(f[0]);
            names.push_back(f[1]);
        }
    }
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::uint32_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

    auto lines = csv::read_lines(source);
    if (lines.empty() || lines[0] != "voter_id,state,party,race,active,interests")
        throw DataError(source.string() + ": not a population dump");
    std::vector<Member> members;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = csv::split_line(lines[i]);
        auto where = source.string() + ":" + std::to_string(i + 1);
        if (f.size() != 6) throw DataError(where + ": expected 6 fields");
        auto party = parse_party(f[2]);
        auto race = parse_race(f[3]);
        if (!party || !race) throw DataError(where + ": bad party/race");
        Member m{f[0], f[1], *party, *race, f[4] == "1", {}};
        std::size_t start = 0;
        while (start < f[5].size()) {
            auto end = f[5].find(';', start);
            if (end == std::string::npos) end = f[5].size();
            auto it = index.find(f[5].substr(start, end - start));
            if (it == index.end()) throw DataError(where + ": unknown interest");
            m.interests.push_back(it->second);
            start = end + 1;
        }
        members.push_back(std::move(m));
    }
    return Population(std::move(ids), std::move(names), std::move(members));
}

}  // namespace proxyaudit::synth
