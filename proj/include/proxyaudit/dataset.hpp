#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "proxyaudit/adlib.hpp"

namespace proxyaudit::adlib {

// Request-level bookkeeping from a collection run.
struct CollectionLog {
    std::size_t requests = 0;  // report requests issued
    std::size_t missing = 0;   // answered without targeting data
    std::size_t failures = 0;  // transport failures after retries

    double missing_rate() const {
        return requests ? static_cast<double>(missing) / static_cast<double>(requests) : 0.0;
    }
    bool operator==(const CollectionLog&) const = default;
};

// One (advertiser, week) after deduplicating daily observations.
struct WindowRecord {
    std::string advertiser_id;
    Date window_start{};
    Date window_end{};
    Date first_seen{};  // earliest snapshot date
    Date last_seen{};   // latest snapshot date; criteria come from here
    Micros total_spend = 0;  // maximum observed total
    std::vector<TargetingCriterion> criteria;

    int delay_days() const { return static_cast<int>((first_seen - window_end).count()); }
    bool operator==(const WindowRecord&) const = default;
};

struct CriterionKey {
    std::string advertiser_id;
    CriterionKind kind;
    std::string name;
    Mode mode;

    auto operator<=>(const CriterionKey&) const = default;
};

struct TargetingDataset {
    std::vector<WindowRecord> windows;  // sorted by advertiser, then window_start
    // Normalized spend (spend_fraction x window total) summed over windows.
    std::map<CriterionKey, Micros> spend;
    // Days from window end to first availability -> window count.
    std::map<int, std::size_t> delay_histogram;
    CollectionLog log;
    std::vector<std::string> warnings;  // not part of equality

    bool operator==(const TargetingDataset& o) const {
        return windows == o.windows && spend == o.spend && delay_histogram == o.delay_histogram &&
               log == o.log;
    }
};

// Deduplicates observations of the same (advertiser, window): criteria are
// taken from the latest snapshot, the spend basis is the maximum observed
// total (a later, smaller total is kept out with a warning).
TargetingDataset normalize_snapshots(const std::vector<TargetingReportSnapshot>& snapshots,
                                     CollectionLog log = {});

// Snapshots that normalize back to `dataset` (one at first_seen and, when
// different, one at last_seen per window).
std::vector<TargetingReportSnapshot> export_snapshots(const TargetingDataset& dataset);

struct DatasetStats {
    std::size_t advertisers = 0;
    std::size_t windows = 0;
    std::map<CriterionKind, std::size_t> unique_criteria;  // distinct names per kind
    std::size_t inclusions = 0;  // distinct (advertiser, criterion) pairs used to include
    std::size_t exclusions = 0;
    std::size_t requests = 0;
    double missing_rate = 0;
    std::map<int, std::size_t> delay_histogram;
};

DatasetStats dataset_stats(const TargetingDataset& dataset);
std::string stats_to_json(const DatasetStats& stats);

// JSON lines of canonical payloads with an extra `snapshot_date` field, plus
// a sibling `<stem>_log.json` holding the collection log.
void save_dataset(const TargetingDataset& dataset, const std::filesystem::path& path);
TargetingDataset load_dataset(const std::filesystem::path& path);

}  // namespace proxyaudit::adlib
