#include "proxyaudit/reach.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit {

SyntheticBackend::SyntheticBackend(const synth::Population& pop, EstimateModel model)
    : pop_(pop), model_(model) {}

std::string SyntheticBackend::id() const {
    switch (model_.kind) {
        case EstimateModel::Kind::Exact: return "synthetic:exact";
        case EstimateModel::Kind::SigFigs: return "synthetic:sigfig" + std::to_string(model_.sig_figs);
        case EstimateModel::Kind::Gaussian: return "synthetic:gaussian" + fixed(model_.sigma, 4);
    }
    return "synthetic";
}

std::int64_t SyntheticBackend::exact_count(const AudienceSpec& audience,
                                           const std::optional<std::string>& interest) const {
    std::optional<std::uint32_t> idx;
    if (interest) {
        idx = pop_.interest_index(*interest);
        if (!idx) return 0;  // the platform knows nobody with an unknown interest
    }
    std::int64_t n = 0;
    for (const auto& id : audience.member_ids) {
        const auto* m = pop_.find(id);
        if (!m || !m->active) continue;
        if (idx && !pop_.holds(*m, *idx)) continue;
        ++n;
    }
    return n;
}

std::int64_t SyntheticBackend::apply_model(std::int64_t exact, const std::string& label,
                                           const std::optional<std::string>& interest) const {
    switch (model_.kind) {
        case EstimateModel::Kind::Exact: return exact;
        case EstimateModel::Kind::SigFigs: return round_sig_figs(exact, model_.sig_figs);
        case EstimateModel::Kind::Gaussian: {
            std::uint64_t h = fnv1a(label, model_.seed);
            h = fnv1a("\x1f" + interest.value_or(""), h);
            std::mt19937_64 rng(h);
            std::normal_distribution<double> z(0.0, 1.0);
            double v = static_cast<double>(exact) * (1.0 + model_.sigma * z(rng));
            return std::max<std::int64_t>(0, std::llround(v));
        }
    }
    return exact;
}

ReachEstimate SyntheticBackend::estimate(const AudienceSpec& audience,
                                         const std::optional<std::string>& interest) const {
    ReachEstimate e;
    e.backend_id = id();
    e.rounded = model_.kind != EstimateModel::Kind::Exact;
    std::int64_t total = apply_model(exact_count(audience, std::nullopt), audience.label, std::nullopt);
    if (!interest) {
        e.count = total;
        return e;
    }
    e.count = std::min(total, apply_model(exact_count(audience, interest), audience.label, interest));
    return e;
}

ReplayBackend::ReplayBackend(std::map<std::pair<std::string, std::string>, std::int64_t> values)
    : values_(std::move(values)) {}

ReplayBackend ReplayBackend::load(const std::filesystem::path& fixture) {
    auto matrix = EstimateMatrix::load(fixture);
    std::map<std::pair<std::string, std::string>, std::int64_t> values;
    for (const auto& [key, cell] : matrix.cells())
        if (cell.count) values[key] = *cell.count;
    return ReplayBackend(std::move(values));
}

ReachEstimate ReplayBackend::estimate(const AudienceSpec& audience,
                                      const std::optional<std::string>& interest) const {
    auto it = values_.find({audience.label, interest.value_or("")});
    if (it == values_.end())
        throw ReplayMissError("no fixture for query (" + audience.label + ", " +
                              interest.value_or("<total>") + ")");
    return ReachEstimate{it->second, id(), false};
}

ReachEstimate estimate_reach(const ReachBackend& backend, const ReachQuery& query) {
    if (!query.audience || query.audience->member_ids.empty())
        throw std::invalid_argument("reach query needs a non-empty audience");
    return backend.estimate(*query.audience, query.interest);
}

double coverage_fraction(const ReachBackend& backend, const AudienceSpec& audience,
                         const std::string& interest) {
    auto total = backend.estimate(audience, std::nullopt).count;
    if (total <= 0)
        throw DataError("coverage undefined: audience " + audience.label + " has no reachable users");
    auto with = backend.estimate(audience, interest).count;
    return std::clamp(static_cast<double>(with) / static_cast<double>(total), 0.0, 1.0);
}

void EstimateMatrix::put(EstimateCell cell) {
    auto key = std::make_pair(cell.audience, cell.interest);
    cells_[key] = std::move(cell);
}

const EstimateCell* EstimateMatrix::find(const std::string& audience,
                                         const std::string& interest) const {
    auto it = cells_.find({audience, interest});
    return it == cells_.end() ? nullptr : &it->second;
}

std::vector<std::string> EstimateMatrix::audiences() const {
    std::set<std::string> s;
    for (const auto& [k, c] : cells_) s.insert(k.first);
    return {s.begin(), s.end()};
}

std::vector<std::string> EstimateMatrix::interests() const {
    std::set<std::string> s;
    for (const auto& [k, c] : cells_)
        if (!k.second.empty()) s.insert(k.second);
    return {s.begin(), s.end()};
}

std::size_t EstimateMatrix::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](const auto& kv) { return !kv.second.ok(); }));
}

void EstimateMatrix::save(const std::filesystem::path& path) const {
    csv::Writer w(path);
    w.row({"audience_label", "interest_id", "count"});
    for (const auto& [k, c] : cells_)
        if (c.count) w.row({k.first, k.second, std::to_string(*c.count)});
    w.close();
}

EstimateMatrix EstimateMatrix::load(const std::filesystem::path& path) {
    auto lines = csv::read_lines(path);
    if (lines.empty() || lines[0] != "audience_label,interest_id,count")
        throw DataError(path.string() + ": expected header audience_label,interest_id,count");
    EstimateMatrix m;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = csv::split_line(lines[i]);
        auto where = path.string() + ":" + std::to_string(i + 1);
        if (f.size() != 3 || f[0].empty()) throw DataError(where + ": malformed estimate row");
        std::int64_t count = 0;
        try {
            std::size_t used = 0;
            count = std::stoll(f[2], &used);
            if (used != f[2].size() || count < 0) throw std::invalid_argument("count");
        } catch (const std::exception&) {
            throw DataError(where + ": count must be a non-negative integer");
        }
        m.put(EstimateCell{f[0], f[1], count, false, {}});
    }
    return m;
}

namespace {

std::map<std::pair<std::string, std::string>, std::int64_t> read_checkpoint(
    const std::filesystem::path& path) {
    std::map<std::pair<std::string, std::string>, std::int64_t> done;
    if (!std::filesystem::exists(path)) return done;
    auto lines = csv::read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = csv::split_line(lines[i]);
        // A torn final line from an interrupted run is simply re-queried.
        if (f.size() != 4 || f[3] != "ok") continue;
        try {
            done[{f[0], f[1]}] = std::stoll(f[2]);
        } catch (const std::exception&) {
        }
    }
    return done;
}

}  // namespace

EstimateMatrix batch_estimate(const ReachBackend& backend, const std::vector<AudienceSpec>& audiences,
                              const std::vector<std::string>& interests,
                              const BatchOptions& options) {
    backend.check_ready();

    EstimateMatrix matrix;
    std::map<std::pair<std::string, std::string>, std::int64_t> resumed;
    std::ofstream log;
    if (options.checkpoint) {
        resumed = read_checkpoint(*options.checkpoint);
        bool fresh = !std::filesystem::exists(*options.checkpoint);
        log.open(*options.checkpoint, std::ios::binary | std::ios::app);
        if (!log) throw IoError(options.checkpoint->string(), "cannot open checkpoint");
        if (fresh) log << "audience_label,interest_id,count,status\n" << std::flush;
    }

    struct Task {
        const AudienceSpec* audience;
        std::optional<std::string> interest;
    };
    std::vector<Task> tasks;
    const std::size_t total = audiences.size() * (interests.size() + 1);
    for (const auto& a : audiences) {
        for (std::size_t k = 0; k <= interests.size(); ++k) {
            std::optional<std::string> interest;
            if (k > 0) interest = interests[k - 1];
            auto it = resumed.find({a.label, interest.value_or("")});
            if (it != resumed.end()) {
                matrix.put({a.label, interest.value_or(""), it->second, false, {}});
                continue;
            }
            tasks.push_back({&a, interest});
        }
    }

    std::mutex mu;  // guards matrix, log, progress
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::size_t done = matrix.size();

    auto worker = [&] {
        while (!abort) {
            std::size_t t = next++;
            if (t >= tasks.size()) return;
            const auto& task = tasks[t];
            EstimateCell cell{task.audience->label, task.interest.value_or(""), std::nullopt, false, {}};
            for (int attempt = 0;; ++attempt) {
                try {
                    auto e = backend.estimate(*task.audience, task.interest);
                    cell.count = e.count;
                    cell.rounded = e.rounded;
                    break;
                } catch (const BackendInitError&) {
                    std::lock_guard lock(mu);
                    if (!fatal) fatal = std::current_exception();
                    abort = true;
                    return;
                } catch (const BackendError& e) {
                    if (e.retryable() && attempt < options.max_retries) continue;
                    cell.error = e.what();
                    break;
                } catch (const Error& e) {
                    cell.error = e.what();
                    break;
                }
            }
            std::lock_guard lock(mu);
            if (log.is_open()) {
                log << csv::join({cell.audience, cell.interest,
                                  cell.count ? std::to_string(*cell.count) : "",
                                  cell.ok() ? "ok" : "error"})
                    << '\n'
                    << std::flush;
            }
            matrix.put(std::move(cell));
            ++done;
            if (options.progress) options.progress(done, total);
        }
    };

    unsigned n = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(tasks.size())));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);
    return matrix;
}

}  // namespace proxyaudit
