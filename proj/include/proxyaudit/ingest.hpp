#pragma once

#include <string>
#include <vector>

#include "proxyaudit/dataset.hpp"
#include "proxyaudit/fetch.hpp"

namespace proxyaudit::adlib {

struct IngestResult {
    TargetingDataset dataset;
    std::vector<FailureRecord> failures;
    std::vector<std::string> parse_errors;
    std::vector<std::string> warnings;
};

// Daily collection loop: for every date, list advertisers and request each
// one's report. Missing data and failures are logged and the run continues.
IngestResult run_ingest(AdLibraryClient& client, const std::vector<Date>& dates);

// Inclusive date range.
std::vector<Date> date_range(Date first, Date last);

}  // namespace proxyaudit::adlib
