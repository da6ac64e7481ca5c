#include "proxyaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "proxyaudit/csv.hpp"

namespace proxyaudit::adlib {

TargetingDataset normalize_snapshots(const std::vector<TargetingReportSnapshot>& snapshots,
                                     CollectionLog log) {
    using Key = std::tuple<std::string, Date, Date>;
    std::map<Key, std::vector<const TargetingReportSnapshot*>> groups;
    for (const auto& s : snapshots) groups[{s.advertiser_id, s.window_start, s.window_end}].push_back(&s);

    TargetingDataset ds;
    ds.log = log;
    for (auto& [key, obs] : groups) {
        std::stable_sort(obs.begin(), obs.end(), [](const auto* a, const auto* b) {
            return a->snapshot_date < b->snapshot_date;
        });
        WindowRecord w;
        w.advertiser_id = std::get<0>(key);
        w.window_start = std::get<1>(key);
        w.window_end = std::get<2>(key);
        w.first_seen = obs.front()->snapshot_date;
        w.last_seen = obs.back()->snapshot_date;
        w.criteria = obs.back()->criteria;
        Micros prev = -1;
        for (const auto* o : obs) {
            if (o->total_spend < prev)
                ds.warnings.push_back("advertiser " + w.advertiser_id + " window " +
                                      format_date(w.window_start) + ": total dropped on " +
                                      format_date(o->snapshot_date) + ", keeping maximum");
            prev = o->total_spend;
            w.total_spend = std::max(w.total_spend, o->total_spend);
        }
        for (const auto& c : w.criteria) {
            auto spend = static_cast<Micros>(
                std::llround(c.spend_fraction * static_cast<double>(w.total_spend)));
            ds.spend[CriterionKey{w.advertiser_id, c.kind, c.name, c.mode}] += spend;
        }
        ++ds.delay_histogram[w.delay_days()];
        ds.windows.push_back(std::move(w));
    }
    return ds;
}

std::vector<TargetingReportSnapshot> export_snapshots(const TargetingDataset& dataset) {
    std::vector<TargetingReportSnapshot> out;
    for (const auto& w : dataset.windows) {
        TargetingReportSnapshot s{w.advertiser_id, w.first_seen, w.window_start, w.window_end,
                                  w.total_spend, w.criteria};
        out.push_back(s);
        if (w.last_seen != w.first_seen) {
            s.snapshot_date = w.last_seen;
            out.push_back(std::move(s));
        }
    }
    return out;
}

DatasetStats dataset_stats(const TargetingDataset& ds) {
    DatasetStats st;
    std::set<std::string> advertisers;
    std::map<CriterionKind, std::set<std::string>> names;
    std::set<std::tuple<std::string, CriterionKind, std::string>> inc, exc;
    for (const auto& w : ds.windows) {
        advertisers.insert(w.advertiser_id);
        for (const auto& c : w.criteria) {
            names[c.kind].insert(c.kind == CriterionKind::Opaque ? c.raw_kind + ":" + c.name : c.name);
            auto key = std::make_tuple(w.advertiser_id, c.kind, c.name);
            (c.mode == Mode::Include ? inc : exc).insert(key);
        }
    }
    st.advertisers = advertisers.size();
    st.windows = ds.windows.size();
    for (const auto& [k, s] : names) st.unique_criteria[k] = s.size();
    st.inclusions = inc.size();
    st.exclusions = exc.size();
    st.requests = ds.log.requests;
    st.missing_rate = ds.log.missing_rate();
    st.delay_histogram = ds.delay_histogram;
    return st;
}

std::string stats_to_json(const DatasetStats& st) {
    nlohmann::ordered_json j;
    j["advertisers"] = st.advertisers;
    j["windows"] = st.windows;
    nlohmann::ordered_json kinds = nlohmann::ordered_json::object();
    for (const auto& [k, n] : st.unique_criteria) kinds[std::string(to_string(k))] = n;
    j["unique_criteria"] = kinds;
    j["inclusions"] = st.inclusions;
    j["exclusions"] = st.exclusions;
    j["requests"] = st.requests;
    j["missing_rate"] = st.missing_rate;
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    for (const auto& [d, n] : st.delay_histogram) hist[std::to_string(d)] = n;
    j["delay_histogram_days"] = hist;
    return j.dump(2);
}

namespace {

std::filesystem::path log_path(const std::filesystem::path& p) {
    return p.parent_path() / (p.stem().string() + "_log.json");
}

}  // namespace

void save_dataset(const TargetingDataset& dataset, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    for (const auto& s : export_snapshots(dataset)) {
        auto j = nlohmann::ordered_json::parse(to_payload(s));
        nlohmann::ordered_json line;
        line["snapshot_date"] = format_date(s.snapshot_date);
        for (auto it = j.begin(); it != j.end(); ++it) line[it.key()] = it.value();
        out << line.dump() << '\n';
    }
    if (!out) throw IoError(path.string(), "write failure");

    std::ofstream lg(log_path(path), std::ios::binary | std::ios::trunc);
    if (!lg) throw IoError(log_path(path).string(), "cannot open for writing");
    nlohmann::ordered_json j;
    j["requests"] = dataset.log.requests;
    j["missing"] = dataset.log.missing;
    j["failures"] = dataset.log.failures;
    lg << j.dump(2) << '\n';
}

TargetingDataset load_dataset(const std::filesystem::path& path) {
    auto lines = csv::read_lines(path);
    std::vector<TargetingReportSnapshot> snaps;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto where = path.string() + ":" + std::to_string(i + 1);
        auto j = nlohmann::json::parse(lines[i], nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("snapshot_date") ||
            !j["snapshot_date"].is_string())
            throw DataError(where + ": missing snapshot_date");
        auto date = parse_date(j["snapshot_date"].get<std::string>());
        if (!date) throw DataError(where + ": bad snapshot_date");
        try {
            snaps.push_back(parse_targeting_report(lines[i], *date).snapshot);
        } catch (const ParseError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    CollectionLog log;
    if (std::filesystem::exists(log_path(path))) {
        std::ifstream in(log_path(path));
        std::stringstream ss;
        ss << in.rdbuf();
        auto j = nlohmann::json::parse(ss.str(), nullptr, false);
        if (j.is_object()) {
            log.requests = j.value("requests", std::size_t{0});
            log.missing = j.value("missing", std::size_t{0});
            log.failures = j.value("failures", std::size_t{0});
        }
    }
    return normalize_snapshots(snaps, log);
}

}  // namespace proxyaudit::adlib
