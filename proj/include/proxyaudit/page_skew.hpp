#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "proxyaudit/audience.hpp"  // RejectReport

namespace proxyaudit::page {

// Public-suffix rules (plain, `*.` wildcard and `!` exception rules) in the
// publicsuffix.org list format.
class PublicSuffixList {
public:
    static PublicSuffixList load(const std::filesystem::path& path);
    static PublicSuffixList parse(std::string_view text);

    // Registrable domain (public suffix plus one label) of a lowercase host,
    // or nullopt when the host is itself a public suffix.
    std::optional<std::string> registrable_domain(std::string_view host) const;

private:
    std::set<std::string> rules_;
    std::set<std::string> wildcards_;   // stored without the "*."
    std::set<std::string> exceptions_;  // stored without the "!"
};

// Scheme, userinfo, port, path, query and fragment are stripped; the host is
// lowercased and reduced to its registrable domain. Returns nullopt for
// anything that is not a plausible DNS host (IP literals included).
std::optional<std::string> normalize_domain(std::string_view url, const PublicSuffixList& psl);

struct DomainBiasTable {
    std::map<std::string, double> scores;
    std::optional<double> lookup(const std::string& domain) const;
};

struct DomainBiasLoad {
    DomainBiasTable table;
    RejectReport rejects;
    std::vector<std::string> warnings;  // duplicate keys (last one wins)
};

// Rows `domain,score`; an optional `domain,score` header is skipped.
DomainBiasLoad load_domain_bias(const std::filesystem::path& source, const PublicSuffixList& psl);

struct InterestPagesRecord {
    std::string interest_id;
    std::vector<std::string> domains;  // normalized, de-duplicated, input order
};

struct InterestPagesLoad {
    std::vector<InterestPagesRecord> records;
    RejectReport dropped_urls;  // one entry per URL that failed to normalize
};

// JSON lines: {"interest_id": ..., "urls": [...]}. A line that is not valid
// JSON or lacks an interest_id is reported and skipped.
InterestPagesLoad load_interest_pages(const std::filesystem::path& source,
                                      const PublicSuffixList& psl);

struct DomainPrevalence {
    std::string domain;
    double fraction = 0;  // share of interests whose list mentions the domain
    std::size_t interests = 0;
};

// Descending by fraction, ties by domain. Throws DataError on empty input.
std::vector<DomainPrevalence> rank_domain_prevalence(const std::vector<InterestPagesRecord>& records);

struct PageSkewResult {
    std::string interest_id;
    std::optional<double> value;
    std::size_t matched = 0;
    std::size_t total = 0;
    std::size_t dropped = 0;
};

// Drops the `drop_top_k` globally most prevalent domains, then takes the
// unweighted mean bias of the remaining domains found in the table.
PageSkewResult compute_page_skew(const InterestPagesRecord& record, const DomainBiasTable& table,
                                 std::size_t drop_top_k,
                                 const std::vector<DomainPrevalence>& prevalence);

struct TradeoffPoint {
    std::size_t k = 0;
    double coverage = 0;  // fraction of interests with a defined page skew
    std::optional<double> pearson_r;
    std::size_t joint = 0;  // interests defined in both metrics
};

std::vector<TradeoffPoint> pruning_tradeoff_curve(const std::vector<InterestPagesRecord>& records,
                                                  const DomainBiasTable& table,
                                                  const std::map<std::string, double>& voter_skews,
                                                  const std::vector<std::size_t>& k_values);

// Share of domain mentions, and of unique domains, that have a bias score.
struct BiasCoverage {
    double mention_fraction = 0;
    double unique_fraction = 0;
    std::size_t mentions = 0;
    std::size_t unique_domains = 0;
};
BiasCoverage bias_coverage(const std::vector<InterestPagesRecord>& records,
                           const DomainBiasTable& table);

}  // namespace proxyaudit::page
