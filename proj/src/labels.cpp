#include "proxyaudit/labels.hpp"

namespace proxyaudit {

std::string_view to_string(Party p) {
    switch (p) {
        case Party::Rep: return "REP";
        case Party::Dem: return "DEM";
        case Party::Oth: return "OTH";
    }
    return "?";
}

std::string_view to_string(Race r) {
    switch (r) {
        case Race::White: return "WHITE";
        case Race::Black: return "BLACK";
        case Race::Hispanic: return "HISPANIC";
        case Race::Other: return "OTHER";
    }
    return "?";
}

std::optional<Party> parse_party(std::string_view s) {
    for (Party p : kAllParties)
        if (to_string(p) == s) return p;
    return std::nullopt;
}

std::optional<Race> parse_race(std::string_view s) {
    for (Race r : kAllRaces)
        if (to_string(r) == s) return r;
    return std::nullopt;
}

std::string_view to_string(AudiencePair p) {
    switch (p) {
        case AudiencePair::RD: return "RD";
        case AudiencePair::WB: return "WB";
        case AudiencePair::WH: return "WH";
        case AudiencePair::BH: return "BH";
    }
    return "?";
}

std::optional<AudiencePair> parse_pair(std::string_view s) {
    for (AudiencePair p : kAllPairs)
        if (to_string(p) == s) return p;
    return std::nullopt;
}

std::pair<std::string_view, std::string_view> pair_audiences(AudiencePair p) {
    switch (p) {
        case AudiencePair::RD: return {"REP", "DEM"};
        case AudiencePair::WB: return {"WHITE", "BLACK"};
        case AudiencePair::WH: return {"WHITE", "HISPANIC"};
        case AudiencePair::BH: return {"BLACK", "HISPANIC"};
    }
    return {"", ""};
}

}  // namespace proxyaudit
