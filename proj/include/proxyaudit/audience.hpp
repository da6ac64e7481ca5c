#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "proxyaudit/labels.hpp"

namespace proxyaudit {

struct VoterRecord {
    std::string voter_id;
    std::string state;
    Party party;
    Race race;
};

struct RejectedRow {
    std::size_t line;
    std::string reason;
};

struct RejectReport {
    std::vector<RejectedRow> rows;
    bool empty() const noexcept { return rows.empty(); }
    std::size_t count() const noexcept { return rows.size(); }
};

struct VoterLoadResult {
    std::vector<VoterRecord> records;
    RejectReport rejects;
};

// Reads the voter-record file (header `voter_id,state,party,race`).
// Malformed rows are rejected with their line number. Throws IoError if the
// file is unreadable, DataError("format mismatch") if the header is wrong or
// more than half of the data rows are rejected. An empty `allowed_states`
// accepts any two-letter uppercase code.
VoterLoadResult load_voter_records(const std::filesystem::path& source,
                                   const std::set<std::string>& allowed_states = {});

// Party- or race-uniform selector.
class AudienceSelector {
public:
    AudienceSelector(Party p) : which_(p) {}
    AudienceSelector(Race r) : which_(r) {}
    static std::optional<AudienceSelector> parse(std::string_view label);

    bool matches(const VoterRecord& r) const;
    std::string label() const;

private:
    std::variant<Party, Race> which_;
};

struct AudienceSpec {
    std::string label;
    std::vector<std::string> member_ids;  // sorted, unique
    std::uint64_t sample_seed = 0;
    std::size_t requested_size = 0;
    bool shortfall = false;  // eligible pool was smaller than requested

    std::size_t size() const noexcept { return member_ids.size(); }
    bool contains(const std::string& voter_id) const;
};

// Uniform sample without replacement, deterministic for a fixed seed.
// Throws std::invalid_argument for requested_size == 0 and DataError naming
// the selector when no record matches.
AudienceSpec build_uniform_audience(const std::vector<VoterRecord>& records,
                                    const AudienceSelector& selector, std::size_t requested_size,
                                    std::uint64_t seed);

// |a ∩ b|. A pair may only feed the skew statistic when this is 0.
std::size_t verify_disjoint(const AudienceSpec& a, const AudienceSpec& b);

// Warning text when two compared audiences differ in size by more than 10%
// of the larger one.
std::optional<std::string> size_mismatch_warning(const AudienceSpec& a, const AudienceSpec& b);

std::string audience_to_json(const AudienceSpec& spec);
AudienceSpec audience_from_json(std::string_view text);
void save_audience(const AudienceSpec& spec, const std::filesystem::path& path);
AudienceSpec load_audience(const std::filesystem::path& path);

}  // namespace proxyaudit
