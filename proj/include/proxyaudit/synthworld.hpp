#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "proxyaudit/labels.hpp"
#include "proxyaudit/skew.hpp"

namespace proxyaudit::synth {

// An interest whose membership probability is tilted per audience pair.
// For a pair (A, B) planted at S, members of A hold the interest with
// probability base_rate*(1+S) and members of B with base_rate*(1-S).
struct PlantedInterest {
    std::string interest_id;
    std::string name;  // display name; defaults to interest_id when empty
    double base_rate = 0.0;
    std::map<AudiencePair, double> planted_skew;
};

struct WorldConfig {
    std::size_t population_size = 0;
    std::map<Party, double> party_mix{{Party::Rep, 0.45}, {Party::Dem, 0.45}, {Party::Oth, 0.10}};
    std::map<Race, double> race_mix{
        {Race::White, 0.60}, {Race::Black, 0.15}, {Race::Hispanic, 0.15}, {Race::Other, 0.10}};
    // Optional party x race joint distribution; overrides both mixes when set.
    std::optional<std::map<std::pair<Party, Race>, double>> joint_mix;
    std::vector<std::string> states{"NC", "FL", "GA"};
    std::vector<PlantedInterest> interests;
    double activity_rate = 1.0;
    std::uint64_t rng_seed = 1;

    // Throws ConfigError on any violated invariant, including infeasible
    // planted skews (naming the interest).
    void validate() const;
};

struct Member {
    std::string voter_id;
    std::string state;
    Party party;
    Race race;
    bool active;
    std::vector<std::uint32_t> interests;  // sorted indices into Population::interest_ids()
};

// Immutable once generated; safe to share across threads for reads.
class Population {
public:
    Population() = default;
    Population(std::vector<std::string> interest_ids, std::vector<std::string> interest_names,
               std::vector<Member> members);

    const std::vector<Member>& members() const noexcept { return members_; }
    const std::vector<std::string>& interest_ids() const noexcept { return interest_ids_; }
    const std::vector<std::string>& interest_names() const noexcept { return interest_names_; }
    std::size_t size() const noexcept { return members_.size(); }

    std::optional<std::uint32_t> interest_index(const std::string& interest_id) const;
    const Member* find(const std::string& voter_id) const;
    bool holds(const Member& m, std::uint32_t interest) const;

    bool operator==(const Population& o) const;

private:
    std::vector<std::string> interest_ids_;
    std::vector<std::string> interest_names_;
    std::vector<Member> members_;
    std::unordered_map<std::string, std::uint32_t> interest_index_;
    std::unordered_map<std::string, std::size_t> member_index_;
};

// Per-group membership multipliers implied by a planted interest. Exposed
// for tests and for the feasibility check.
struct GroupMultipliers {
    std::map<Party, double> party;
    std::map<Race, double> race;
};
GroupMultipliers planted_multipliers(const PlantedInterest& interest);

Population generate_population(const WorldConfig& config);

// Exhaustive-count evaluation of the skew statistic over active members.
// Throws std::invalid_argument when either group has no active members.
SkewScore true_skew(const Population& pop, const std::string& interest_id, AudiencePair pair,
                    std::int64_t reliability_floor = kDefaultReliabilityFloor);

// Writes the voter-record file (`voter_id,state,party,race`). Interest
// memberships are not exported.
std::size_t export_voter_file(const Population& pop, const std::filesystem::path& destination);

// Full dump including activity and interests, used by the synthetic reach
// backend between CLI stages.
void save_population(const Population& pop, const std::filesystem::path& destination);
Population load_population(const std::filesystem::path& source);

}  // namespace proxyaudit::synth
