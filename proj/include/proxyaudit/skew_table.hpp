#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proxyaudit/reach.hpp"
#include "proxyaudit/skew.hpp"

namespace proxyaudit {

struct SkewRow {
    std::string interest_id;
    std::string interest_name;
    std::string pair_label;  // "RD", "WB", "WH", "BH" or "PAGE"
    SkewScore score;
};

struct SkewTable {
    std::vector<SkewRow> rows;  // ordered by interest, then pair

    // Rows for one pair keyed by interest id.
    std::map<std::string, const SkewRow*> by_pair(AudiencePair pair) const;
    std::vector<SkewScore> scores(AudiencePair pair) const;
};

// One score per interest x pair. Cells whose estimates failed become
// undefined with a reason. Throws ConfigError when a requested pair lacks an
// audience total (or the total is zero). `names` maps interest ids to
// display names (ids are used when absent).
SkewTable skew_table(const EstimateMatrix& matrix, const std::vector<AudiencePair>& pairs,
                     std::int64_t reliability_floor = kDefaultReliabilityFloor,
                     const std::map<std::string, std::string>& names = {});

// `interest_id,interest_name,pair,value,reliable,n_a_i,n_a,n_b_i,n_b`;
// value empty when undefined.
void save_skew_table(const SkewTable& table, const std::filesystem::path& path);
SkewTable load_skew_table(const std::filesystem::path& path);

std::string format_skew_value(double v);

}  // namespace proxyaudit
