#include "proxyaudit/ingest.hpp"

namespace proxyaudit::adlib {

IngestResult run_ingest(AdLibraryClient& client, const std::vector<Date>& dates) {
    IngestResult out;
    std::vector<TargetingReportSnapshot> snapshots;
    CollectionLog log;
    for (Date date : dates) {
        for (const auto& id : client.fetch_advertiser_list(date)) {
            ++log.requests;
            auto outcome = client.fetch_targeting_report(id, date);
            if (std::holds_alternative<MissingData>(outcome.result)) {
                ++log.missing;
            } else if (auto* fail = std::get_if<FailureRecord>(&outcome.result)) {
                ++log.failures;
                out.failures.push_back(*fail);
            } else {
                try {
                    auto parsed = parse_targeting_report(std::get<std::string>(outcome.result), date);
                    for (auto& w : parsed.warnings)
                        out.warnings.push_back(id + " " + format_date(date) + ": " + w);
                    snapshots.push_back(std::move(parsed.snapshot));
                } catch (const ParseError& e) {
                    out.parse_errors.push_back(id + " " + format_date(date) + ": " + e.what());
                }
            }
        }
    }
    out.dataset = normalize_snapshots(snapshots, log);
    for (const auto& w : out.dataset.warnings) out.warnings.push_back(w);
    return out;
}

std::vector<Date> date_range(Date first, Date last) {
    std::vector<Date> out;
    for (Date d = first; d <= last; d += std::chrono::days{1}) out.push_back(d);
    return out;
}

}  // namespace proxyaudit::adlib
