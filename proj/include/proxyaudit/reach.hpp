#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "proxyaudit/audience.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/synthworld.hpp"

namespace proxyaudit {

struct ReachQuery {
    const AudienceSpec* audience = nullptr;
    std::optional<std::string> interest;  // empty: audience total N_A
};

struct ReachEstimate {
    std::int64_t count = 0;
    std::string backend_id;
    bool rounded = false;
};

// Replay backends raise this for queries absent from the fixture. It is a
// data error, never retried.
class ReplayMissError : public DataError {
public:
    using DataError::DataError;
};

// Raised when a backend cannot serve anything at all (bad setup). Aborts a
// batch run instead of marking cells.
class BackendInitError : public BackendError {
public:
    explicit BackendInitError(const std::string& what) : BackendError(what, false) {}
};

// Stand-in for the platform's delivery estimate capability. Implementations
// must tolerate concurrent const calls.
class ReachBackend {
public:
    virtual ~ReachBackend() = default;
    virtual std::string id() const = 0;
    // Throws BackendInitError when the backend is unusable.
    virtual void check_ready() const {}
    virtual ReachEstimate estimate(const AudienceSpec& audience,
                                   const std::optional<std::string>& interest) const = 0;
};

struct EstimateModel {
    enum class Kind { Exact, SigFigs, Gaussian };
    Kind kind = Kind::SigFigs;
    int sig_figs = 2;
    double sigma = 0.05;  // multiplicative noise for Kind::Gaussian
    std::uint64_t seed = 0;

    static EstimateModel exact() { return {Kind::Exact, 0, 0.0, 0}; }
    static EstimateModel rounded(int digits = 2) { return {Kind::SigFigs, digits, 0.0, 0}; }
    static EstimateModel gaussian(double sigma, std::uint64_t seed) {
        return {Kind::Gaussian, 0, sigma, seed};
    }
};

// Counts active audience members (holding the interest, when given) in a
// synthetic population, then applies the estimate model. The
// interest-restricted estimate is capped at the audience total so the
// conjunction never exceeds the audience under any model.
class SyntheticBackend final : public ReachBackend {
public:
    SyntheticBackend(const synth::Population& pop, EstimateModel model);
    std::string id() const override;
    ReachEstimate estimate(const AudienceSpec& audience,
                           const std::optional<std::string>& interest) const override;

    // Count before the estimate model is applied.
    std::int64_t exact_count(const AudienceSpec& audience,
                             const std::optional<std::string>& interest) const;

private:
    std::int64_t apply_model(std::int64_t exact, const std::string& label,
                             const std::optional<std::string>& interest) const;

    const synth::Population& pop_;
    EstimateModel model_;
};

// Serves recorded values from `audience_label,interest_id,count` fixtures
// (empty interest_id for totals). Immutable after load.
class ReplayBackend final : public ReachBackend {
public:
    static ReplayBackend load(const std::filesystem::path& fixture);
    explicit ReplayBackend(std::map<std::pair<std::string, std::string>, std::int64_t> values);

    std::string id() const override { return "replay"; }
    ReachEstimate estimate(const AudienceSpec& audience,
                           const std::optional<std::string>& interest) const override;

private:
    std::map<std::pair<std::string, std::string>, std::int64_t> values_;
};

ReachEstimate estimate_reach(const ReachBackend& backend, const ReachQuery& query);

// N_A^i / N_A from the same backend. Throws DataError when N_A is zero.
double coverage_fraction(const ReachBackend& backend, const AudienceSpec& audience,
                         const std::string& interest);

struct EstimateCell {
    std::string audience;
    std::string interest;  // empty for the audience total
    std::optional<std::int64_t> count;
    bool rounded = false;
    std::string error;  // set when count is empty

    bool ok() const noexcept { return count.has_value(); }
};

// Audience totals and per-interest counts for a set of audiences.
class EstimateMatrix {
public:
    void put(EstimateCell cell);
    const EstimateCell* find(const std::string& audience, const std::string& interest) const;
    const EstimateCell* total(const std::string& audience) const { return find(audience, ""); }

    std::vector<std::string> audiences() const;
    std::vector<std::string> interests() const;  // sorted, excludes totals
    std::size_t size() const noexcept { return cells_.size(); }
    std::size_t error_count() const;
    const std::map<std::pair<std::string, std::string>, EstimateCell>& cells() const { return cells_; }

    // Successful cells in the replay fixture format, sorted by key.
    void save(const std::filesystem::path& path) const;
    static EstimateMatrix load(const std::filesystem::path& path);

private:
    std::map<std::pair<std::string, std::string>, EstimateCell> cells_;
};

struct BatchOptions {
    // Append-only log of finished cells (`audience_label,interest_id,count,status`).
    // Cells already logged as ok are not re-queried.
    std::optional<std::filesystem::path> checkpoint;
    unsigned threads = 1;
    int max_retries = 2;  // for retryable backend errors, per cell
    std::function<void(std::size_t done, std::size_t total)> progress;
};

// One total per audience plus one cell per (audience, interest). Failed
// cells carry an error marker; only BackendInitError aborts the run.
EstimateMatrix batch_estimate(const ReachBackend& backend, const std::vector<AudienceSpec>& audiences,
                              const std::vector<std::string>& interests,
                              const BatchOptions& options = {});

}  // namespace proxyaudit
