#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "proxyaudit/audience.hpp"
#include "proxyaudit/dataset.hpp"
#include "proxyaudit/reach.hpp"
#include "proxyaudit/skew.hpp"
#include "proxyaudit/skew_table.hpp"

namespace proxyaudit::analytics {

using adlib::Micros;
using adlib::Mode;

enum class RawLabel { Non, GOP, Dems, RPACs, DPACs, Conservative, Progressive, Independent, Other };
enum class Group { Conservatives, Progressives, Other };

std::string_view to_string(RawLabel l);
std::string_view to_string(Group g);
std::optional<RawLabel> parse_raw_label(std::string_view s);
// GOP, R-PACs, Conservative -> Conservatives; Dems, D-PACs, Progressive ->
// Progressives; Non, Other, Independent -> Other.
Group group_of(RawLabel l);

struct AffiliationRecord {
    std::string advertiser_id;
    RawLabel raw_label;
    Group group;
};

struct AffiliationLoad {
    std::vector<AffiliationRecord> records;
    RejectReport rejects;
};

// Rows `advertiser_id,raw_label` (optional header). Unknown labels are
// rejected per row; an unreadable file throws IoError.
AffiliationLoad load_affiliations(const std::filesystem::path& source);

// advertiser id -> group, for the joins below.
using Affiliations = std::map<std::string, Group>;
Affiliations index_affiliations(const std::vector<AffiliationRecord>& records);

// interest name -> tertile leaning. Names absent from the map count as
// Unavailable.
using LeaningMap = std::map<std::string, Leaning>;

struct GroupUsage {
    Group group;
    // Distinct (advertiser, interest, mode) uses by the group's advertisers.
    std::map<std::pair<Mode, Leaning>, std::size_t> counts;
    std::size_t unavailable = 0;  // uses of interests without a usable skew
    std::size_t classified = 0;   // sum of counts

    double fraction(Mode m, Leaning l) const;
};

// Throws DataError when no advertiser in the dataset is labeled
// Conservatives or Progressives.
std::vector<GroupUsage> usage_shares(const adlib::TargetingDataset& dataset,
                                     const Affiliations& affiliations, const LeaningMap& leanings);

struct SpendDistribution {
    std::vector<double> sorted_spends;  // per interest, currency units
    double median = 0;
    double mean = 0;
};

// Per-interest spend of one group in one mode, optionally restricted to one
// leaning. Throws DataError when the selection is empty.
SpendDistribution spend_distribution(const adlib::TargetingDataset& dataset,
                                     const Affiliations& affiliations, Group group, Mode mode,
                                     std::optional<Leaning> leaning = std::nullopt,
                                     const LeaningMap& leanings = {});

// (a - b) / (a + b); nullopt when a + b == 0.
std::optional<double> spend_skew(Micros spend_r, Micros spend_d);

struct SpendSkewPoint {
    std::string interest;
    double audience_skew = 0;
    double spend_skew = 0;
    Mode mode = Mode::Include;
    Micros spend_r = 0;
    Micros spend_d = 0;
};

// One point per interest that has an audience skew and positive labeled
// spend in `mode`. Republican spend is the Conservatives group, Democratic
// spend the Progressives group; everyone else is ignored.
std::vector<SpendSkewPoint> compute_spend_skew_points(const adlib::TargetingDataset& dataset,
                                                      const Affiliations& affiliations,
                                                      const std::map<std::string, double>& audience_skews,
                                                      Mode mode);

struct FitResult {
    double intercept = 0;
    double coefficient = 0;
    double r_squared = 0;
    std::size_t n_points = 0;
    int iterations = 0;
    double sse = 0;

    double predict(double x) const;
};

class FitError : public DataError {
public:
    FitError(const std::string& what, FitResult best) : DataError(what), best_(best) {}
    const FitResult& best_so_far() const noexcept { return best_; }

private:
    FitResult best_;
};

struct FitOptions {
    int max_iterations = 500;
    double tolerance = 1e-12;
};

// Least-squares fit of y = 2*sigmoid(a + b*x) - 1 (Levenberg-Marquardt from
// a = b = 0). R^2 = 1 - SSR/SST on the [-1, 1] scale, clipped to [0, 1] and
// 0 when SST is 0. Throws DataError for fewer than 10 points, FitError on
// non-convergence.
FitResult fit_spend_vs_audience_skew(const std::vector<SpendSkewPoint>& points,
                                     const FitOptions& options = {});
FitResult fit_sigmoid(const std::vector<double>& x, const std::vector<double>& y,
                      const FitOptions& options = {});

struct ScatterPoint {
    std::string interest;
    double x = 0;  // coverage in audience A
    double y = 0;  // coverage in audience B
};

struct CoverageCorrelation {
    AudiencePair pair;
    std::optional<double> r;
    std::vector<ScatterPoint> points;
};

// Pearson r between the two audiences' coverage fractions over interests
// with successful estimates. r is empty with fewer than 3 points or zero
// variance on either axis.
CoverageCorrelation coverage_correlation(const EstimateMatrix& matrix, AudiencePair pair);

std::set<std::string> default_political_names();

struct TopSpendRow {
    std::string interest;
    Micros exclusion_spend = 0;
    Micros inclusion_spend = 0;
    bool political = false;
    // Empty when the skew is unreliable or undefined (rendered "-").
    std::map<AudiencePair, std::optional<double>> skews;
    Leaning leaning = Leaning::Unavailable;
};

// Interest, demographic and behavior criteria ranked by total spend over
// all advertisers (ties by name). Skews are joined on interest name.
std::vector<TopSpendRow> top_spend_table(const adlib::TargetingDataset& dataset,
                                         const SkewTable& skews, std::size_t n,
                                         const SkewThresholds& thresholds,
                                         const std::set<std::string>& political_names =
                                             default_political_names());

}  // namespace proxyaudit::analytics
