#include "proxyaudit/skew_table.hpp"

#include <cstdlib>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit {

std::map<std::string, const SkewRow*> SkewTable::by_pair(AudiencePair pair) const {
    std::map<std::string, const SkewRow*> out;
    auto label = to_string(pair);
    for (const auto& r : rows)
        if (r.pair_label == label) out[r.interest_id] = &r;
    return out;
}

std::vector<SkewScore> SkewTable::scores(AudiencePair pair) const {
    std::vector<SkewScore> out;
    auto label = to_string(pair);
    for (const auto& r : rows)
        if (r.pair_label == label) out.push_back(r.score);
    return out;
}

SkewTable skew_table(const EstimateMatrix& matrix, const std::vector<AudiencePair>& pairs,
                     std::int64_t reliability_floor, const std::map<std::string, std::string>& names) {
    for (AudiencePair p : pairs) {
        auto [a, b] = pair_audiences(p);
        for (auto label : {a, b}) {
            const auto* t = matrix.total(std::string(label));
            if (!t || !t->ok())
                throw ConfigError("estimate matrix lacks a usable total for audience " + std::string(label) +
                                  " (needed by pair " + std::string(to_string(p)) + ")");
            if (*t->count == 0)
                throw ConfigError("audience " + std::string(label) + " has zero estimated reach");
        }
    }

    SkewTable table;
    for (const auto& interest : matrix.interests()) {
        auto nit = names.find(interest);
        const std::string name = nit == names.end() ? interest : nit->second;
        for (AudiencePair p : pairs) {
            auto [a, b] = pair_audiences(p);
            SkewRow row{interest, name, std::string(to_string(p)), {}};
            row.score.pair = p;
            const auto* ta = matrix.total(std::string(a));
            const auto* tb = matrix.total(std::string(b));
            const auto* ca = matrix.find(std::string(a), interest);
            const auto* cb = matrix.find(std::string(b), interest);
            row.score.n_a = *ta->count;
            row.score.n_b = *tb->count;
            if (!ca || !cb || !ca->ok() || !cb->ok()) {
                row.score.reason = "estimate failed: ";
                if (!ca || !cb) row.score.reason += "missing cell";
                else row.score.reason += !ca->ok() ? ca->error : cb->error;
                table.rows.push_back(std::move(row));
                continue;
            }
            row.score = compute_skew(*ca->count, *ta->count, *cb->count, *tb->count, p,
                                     reliability_floor);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string format_skew_value(double v) { return fixed(v, 6); }

void save_skew_table(const SkewTable& table, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"interest_id", "interest_name", "pair", "value", "reliable", "n_a_i", "n_a", "n_b_i", "n_b"});
    for (const auto& r : table.rows) {
        const auto& s = r.score;
        w.row({r.interest_id, r.interest_name, r.pair_label,
               s.value ? format_skew_value(*s.value) : "", s.reliable ? "1" : "0",
               std::to_string(s.n_a_i), std::to_string(s.n_a), std::to_string(s.n_b_i),
               std::to_string(s.n_b)});
    }
    w.close();
}

SkewTable load_skew_table(const std::filesystem::path& path) {
    auto lines = csv::read_lines(path);
    if (lines.empty() ||
        lines[0] != "interest_id,interest_name,pair,value,reliable,n_a_i,n_a,n_b_i,n_b")
        throw DataError(path.string() + ": not a skew table");
    SkewTable t;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = csv::split_line(lines[i]);
        auto where = path.string() + ":" + std::to_string(i + 1);
        if (f.size() != 9) throw DataError(where + ": expected 9 fields");
        SkewRow r{f[0], f[1], f[2], {}};
        if (auto p = parse_pair(f[2])) r.score.pair = *p;
        try {
            if (!f[3].empty()) r.score.value = std::stod(f[3]);
            r.score.reliable = f[4] == "1";
            auto num = [](const std::string& s) { return s.empty() ? 0LL : std::stoll(s); };
            r.score.n_a_i = num(f[5]);
            r.score.n_a = num(f[6]);
            r.score.n_b_i = num(f[7]);
            r.score.n_b = num(f[8]);
        } catch (const std::exception&) {
            throw DataError(where + ": malformed number");
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace proxyaudit
