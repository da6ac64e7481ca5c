#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace proxyaudit {

enum class Party { Rep, Dem, Oth };
enum class Race { White, Black, Hispanic, Other };

inline constexpr std::array<Party, 3> kAllParties{Party::Rep, Party::Dem, Party::Oth};
inline constexpr std::array<Race, 4> kAllRaces{Race::White, Race::Black, Race::Hispanic,
                                               Race::Other};

std::string_view to_string(Party p);
std::string_view to_string(Race r);
std::optional<Party> parse_party(std::string_view s);
std::optional<Race> parse_race(std::string_view s);

// Audience pairs compared by the skew statistic. The first group is "A"
// (positive skew), the second "B".
enum class AudiencePair { RD, WB, WH, BH };

inline constexpr std::array<AudiencePair, 4> kAllPairs{AudiencePair::RD, AudiencePair::WB,
                                                       AudiencePair::WH, AudiencePair::BH};

std::string_view to_string(AudiencePair p);
std::optional<AudiencePair> parse_pair(std::string_view s);

// Audience labels ("REP", "WHITE", ...) of the two sides of a pair.
std::pair<std::string_view, std::string_view> pair_audiences(AudiencePair p);

}  // namespace proxyaudit
