#include "proxyaudit/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "proxyaudit/analytics.hpp"
#include "proxyaudit/audience.hpp"
#include "proxyaudit/csv.hpp"
#include "proxyaudit/demo.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/fetch.hpp"
#include "proxyaudit/ingest.hpp"
#include "proxyaudit/numeric.hpp"
#include "proxyaudit/page_skew.hpp"
#include "proxyaudit/reach.hpp"
#include "proxyaudit/report.hpp"
#include "proxyaudit/skew_table.hpp"
#include "proxyaudit/synthworld.hpp"

#ifndef PROXYAUDIT_DATA_DIR
#define PROXYAUDIT_DATA_DIR "data"
#endif

namespace proxyaudit::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Accessor that records which keys were read so unknown ones can be reported.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& into) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            into = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: '" + name_ + "." + key + "' has the wrong type");
        }
    }

    void path(const char* key, fs::path& into) {
        std::string s;
        get(key, s);
        if (!s.empty()) into = s;
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError("config: unknown key '" + name_ + "." + k + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

std::string path_str(const fs::path& p) { return p.generic_string(); }

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw IoError(p.string(), what + " not found");
}

std::vector<AudiencePair> parse_pairs(const std::vector<std::string>& labels) {
    std::vector<AudiencePair> out;
    for (const auto& l : labels) {
        auto p = parse_pair(l);
        if (!p) throw ConfigError("config: unknown audience pair '" + l + "'");
        out.push_back(*p);
    }
    return out;
}

EstimateModel estimate_model(const RunConfig& cfg) {
    if (cfg.model == "exact") return EstimateModel::exact();
    if (cfg.model == "sigfigs") return EstimateModel::rounded(cfg.sig_figs);
    if (cfg.model == "gaussian") return EstimateModel::gaussian(cfg.sigma, cfg.seed);
    throw ConfigError("config: estimate.model must be exact, sigfigs or gaussian");
}

fs::path psl_path(const RunConfig& cfg) {
    return cfg.public_suffix_list.empty() ? fs::path(PROXYAUDIT_DATA_DIR) / "public_suffix_list.dat"
                                          : cfg.resolve(cfg.public_suffix_list);
}

fs::path voter_path(const RunConfig& cfg) {
    return cfg.voter_file.empty() ? cfg.out("world/voters.csv") : cfg.resolve(cfg.voter_file);
}

std::map<std::string, std::string> interest_names(const RunConfig& cfg) {
    std::map<std::string, std::string> names;
    auto names_csv = cfg.out("world/population_interests.csv");
    if (fs::is_regular_file(names_csv)) {
        auto lines = csv::read_lines(names_csv);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            auto f = csv::split_line(lines[i]);
            if (f.size() >= 2) names[f[0]] = f[1];
        }
    } else if (!cfg.interests_file.empty()) {
        for (const auto& p : demo::load_planted_interests(cfg.resolve(cfg.interests_file)))
            names[p.interest_id] = p.name.empty() ? p.interest_id : p.name;
    }
    return names;
}

report::Manifest make_manifest(const RunConfig& cfg, const std::string& command) {
    report::Manifest m(command);
    m.set_config(cfg.to_json());
    return m;
}

std::vector<adlib::Date> infer_dates(const fs::path& dir) {
    std::vector<adlib::Date> dates;
    for (const auto& e : fs::directory_iterator(dir)) {
        auto name = e.path().filename().string();
        if (name.rfind("advertisers_", 0) == 0 && e.path().extension() == ".json")
            if (auto d = adlib::parse_date(name.substr(12, 10))) dates.push_back(*d);
    }
    std::sort(dates.begin(), dates.end());
    return dates;
}

}  // namespace

fs::path RunConfig::resolve(const fs::path& p) const {
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
}

fs::path RunConfig::out(const fs::path& rel) const {
    auto root = resolve(out_dir);
    return rel.empty() ? root : (root / rel).lexically_normal();
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
    RunConfig c;
    c.base_dir = base_dir.empty() ? fs::path(".") : base_dir;
    Section top(j, "config");
    top.path("out", c.out_dir);
    top.get("seed", c.seed);
    if (const auto* w = top.sub("world")) {
        Section s(*w, "world");
        s.get("population_size", c.population_size);
        s.get("activity_rate", c.activity_rate);
        s.path("interests", c.interests_file);
        s.path("voter_file", c.voter_file);
        s.finish();
    }
    if (const auto* a = top.sub("audiences")) {
        Section s(*a, "audiences");
        s.get("labels", c.audience_labels);
        s.get("size", c.audience_size);
        s.finish();
    }
    if (const auto* e = top.sub("estimate")) {
        Section s(*e, "estimate");
        s.get("backend", c.backend);
        s.path("replay_fixture", c.replay_fixture);
        s.get("model", c.model);
        s.get("sig_figs", c.sig_figs);
        s.get("sigma", c.sigma);
        s.get("threads", c.threads);
        s.get("cell_retries", c.cell_retries);
        s.finish();
    }
    if (const auto* k = top.sub("skew")) {
        Section s(*k, "skew");
        s.get("pairs", c.pairs);
        s.get("reliability_floor", c.reliability_floor);
        s.finish();
    }
    if (const auto* p = top.sub("pageskew")) {
        Section s(*p, "pageskew");
        s.path("domain_bias", c.domain_bias);
        s.path("interest_pages", c.interest_pages);
        s.path("public_suffix_list", c.public_suffix_list);
        s.get("drop_top_k", c.drop_top_k);
        s.get("tradeoff_k", c.tradeoff_k);
        s.finish();
    }
    if (const auto* i = top.sub("ingest")) {
        Section s(*i, "ingest");
        s.path("replay_dir", c.replay_dir);
        s.get("endpoint", c.endpoint);
        s.get("first_date", c.first_date);
        s.get("last_date", c.last_date);
        s.get("min_delay_ms", c.min_delay_ms);
        s.get("max_retries", c.max_retries);
        s.get("max_in_flight", c.max_in_flight);
        s.finish();
    }
    if (const auto* a = top.sub("analyze")) {
        Section s(*a, "analyze");
        s.path("affiliations", c.affiliations);
        s.get("top_n", c.top_n);
        s.get("bin_width", c.bin_width);
        if (const auto* t = s.sub("thresholds")) {
            if (t->is_string() && t->get<std::string>() == "derive") {
                c.derive_thresholds = true;
            } else if (t->is_object()) {
                Section ts(*t, "analyze.thresholds");
                double lo = c.thresholds.value_or(SkewThresholds{}).democratic_below;
                double hi = SkewThresholds{}.republican_at_or_above;
                ts.get("democratic_below", lo);
                ts.get("republican_at_or_above", hi);
                ts.finish();
                c.thresholds = SkewThresholds::make(lo, hi);
            } else {
                throw ConfigError("config: analyze.thresholds must be \"derive\" or an object");
            }
        }
        s.finish();
    }
    top.finish();

    if (c.population_size == 0) throw ConfigError("config: world.population_size must be positive");
    if (c.activity_rate <= 0 || c.activity_rate > 1) throw ConfigError("config: world.activity_rate must be in (0, 1]");
    if (c.audience_size == 0) throw ConfigError("config: audiences.size must be positive");
    if (c.backend != "synthetic" && c.backend != "replay")
        throw ConfigError("config: estimate.backend must be synthetic or replay");
    if (c.threads == 0) throw ConfigError("config: estimate.threads must be positive");
    if (c.bin_width <= 0) throw ConfigError("config: analyze.bin_width must be positive");
    if (c.min_delay_ms < 0 || c.max_retries < 0 || c.max_in_flight == 0)
        throw ConfigError("config: ingest rate-limit settings out of range");
    for (const auto& l : c.audience_labels)
        if (!AudienceSelector::parse(l)) throw ConfigError("config: unknown audience label '" + l + "'");
    parse_pairs(c.pairs);
    estimate_model(c);
    for (const auto* d : {&c.first_date, &c.last_date})
        if (!d->empty() && !adlib::parse_date(*d)) throw ConfigError("config: bad date '" + *d + "'");
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "config file not found");
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
    auto base = path.parent_path();
    return from_json(j, base.empty() ? fs::path(".") : base);
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["out"] = path_str(out_dir);
    j["seed"] = seed;
    j["world"] = {{"population_size", population_size}, {"activity_rate", activity_rate},
                  {"interests", path_str(interests_file)}, {"voter_file", path_str(voter_file)}};
    j["audiences"] = {{"labels", audience_labels}, {"size", audience_size}};
    j["estimate"] = {{"backend", backend}, {"replay_fixture", path_str(replay_fixture)}, {"model", model},
                     {"sig_figs", sig_figs}, {"sigma", sigma}, {"threads", threads}, {"cell_retries", cell_retries}};
    j["skew"] = {{"pairs", pairs}, {"reliability_floor", reliability_floor}};
    j["pageskew"] = {{"domain_bias", path_str(domain_bias)}, {"interest_pages", path_str(interest_pages)},
                     {"public_suffix_list", path_str(public_suffix_list)}, {"drop_top_k", drop_top_k},
                     {"tradeoff_k", tradeoff_k}};
    j["ingest"] = {{"replay_dir", path_str(replay_dir)}, {"endpoint", endpoint}, {"first_date", first_date},
                   {"last_date", last_date}, {"min_delay_ms", min_delay_ms}, {"max_retries", max_retries},
                   {"max_in_flight", max_in_flight}};
    ordered_json t;
    if (derive_thresholds) t = "derive";
    else {
        auto th = thresholds.value_or(SkewThresholds{});
        t = {{"democratic_below", th.democratic_below}, {"republican_at_or_above", th.republican_at_or_above}};
    }
    j["analyze"] = {{"affiliations", path_str(affiliations)}, {"thresholds", t}, {"top_n", top_n},
                    {"bin_width", bin_width}};
    return j;
}

void cmd_world(const RunConfig& cfg, std::ostream& log) {
    synth::WorldConfig wc;
    wc.population_size = cfg.population_size;
    wc.activity_rate = cfg.activity_rate;
    wc.rng_seed = cfg.seed;
    auto manifest = make_manifest(cfg, "world");
    if (cfg.interests_file.empty()) {
        wc.interests = demo::demo_interests();
    } else {
        auto p = cfg.resolve(cfg.interests_file);
        require_file(p, "interests file");
        wc.interests = demo::load_planted_interests(p);
        manifest.add_input(p);
    }
    auto pop = synth::generate_population(wc);
    auto pop_csv = cfg.out("world/population.csv");
    auto voters = cfg.out("world/voters.csv");
    synth::save_population(pop, pop_csv);
    auto n = synth::export_voter_file(pop, voters);
    log << "world: " << n << " voters, " << pop.interest_ids().size() << " interests\n";
    for (const auto& p : {pop_csv, cfg.out("world/population_interests.csv"), voters}) manifest.add_output(p);
    manifest.write(cfg.out());
}

void cmd_audiences(const RunConfig& cfg, std::ostream& log) {
    auto vp = voter_path(cfg);
    require_file(vp, "voter file");
    auto loaded = load_voter_records(vp);
    for (const auto& r : loaded.rejects.rows)
        log << "audiences: " << vp.string() << ":" << r.line << " rejected: " << r.reason << '\n';
    auto manifest = make_manifest(cfg, "audiences");
    manifest.add_input(vp);
    std::map<std::string, AudienceSpec> built;
    for (std::size_t i = 0; i < cfg.audience_labels.size(); ++i) {
        const auto& label = cfg.audience_labels[i];
        auto sel = *AudienceSelector::parse(label);
        auto spec = build_uniform_audience(loaded.records, sel, cfg.audience_size, cfg.seed * 1000 + i + 1);
        if (spec.shortfall)
            log << "audiences: " << label << " pool smaller than requested (" << spec.size() << " of "
                << cfg.audience_size << ")\n";
        auto path = cfg.out("audiences/" + label + ".json");
        save_audience(spec, path);
        manifest.add_output(path);
        built.emplace(label, std::move(spec));
    }
    for (auto pair : parse_pairs(cfg.pairs)) {
        auto [la, lb] = pair_audiences(pair);
        auto a = built.find(std::string(la)), b = built.find(std::string(lb));
        if (a == built.end() || b == built.end()) continue;
        if (auto overlap = verify_disjoint(a->second, b->second))
            throw DataError("audiences " + a->first + " and " + b->first + " overlap in " +
                            std::to_string(overlap) + " members");
        if (auto w = size_mismatch_warning(a->second, b->second)) log << "audiences: " << *w << '\n';
    }
    log << "audiences: " << built.size() << " built\n";
    manifest.write(cfg.out());
}

void cmd_estimate(const RunConfig& cfg, std::ostream& log) {
    auto manifest = make_manifest(cfg, "estimate");
    std::vector<AudienceSpec> audiences;
    for (const auto& label : cfg.audience_labels) {
        auto path = cfg.out("audiences/" + label + ".json");
        require_file(path, "audience " + label);
        audiences.push_back(load_audience(path));
        manifest.add_input(path);
    }

    std::optional<synth::Population> pop;
    std::unique_ptr<ReachBackend> backend;
    std::vector<std::string> interests;
    if (cfg.backend == "synthetic") {
        auto pop_csv = cfg.out("world/population.csv");
        require_file(pop_csv, "population (run `world` first)");
        pop = synth::load_population(pop_csv);
        manifest.add_input(pop_csv);
        interests = pop->interest_ids();
        backend = std::make_unique<SyntheticBackend>(*pop, estimate_model(cfg));
    } else {
        auto fixture = cfg.resolve(cfg.replay_fixture);
        require_file(fixture, "replay fixture");
        manifest.add_input(fixture);
        interests = EstimateMatrix::load(fixture).interests();
        backend = std::make_unique<ReplayBackend>(ReplayBackend::load(fixture));
    }

    auto checkpoint = cfg.out("estimates.checkpoint.csv");
    BatchOptions opts;
    opts.checkpoint = checkpoint;
    opts.threads = cfg.threads;
    opts.max_retries = cfg.cell_retries;
    auto matrix = batch_estimate(*backend, audiences, interests, opts);
    auto out = cfg.out("estimates.csv");
    matrix.save(out);
    std::error_code ec;
    fs::remove(checkpoint, ec);
    log << "estimate: " << matrix.size() << " cells, " << matrix.error_count() << " errors\n";
    for (const auto& [key, cell] : matrix.cells())
        if (!cell.ok()) log << "estimate: " << key.first << "/" << key.second << ": " << cell.error << '\n';
    manifest.add_output(out);
    manifest.write(cfg.out());
}

void cmd_skew(const RunConfig& cfg, std::ostream& log) {
    auto in = cfg.out("estimates.csv");
    require_file(in, "estimates (run `estimate` first)");
    auto matrix = EstimateMatrix::load(in);
    auto table = skew_table(matrix, parse_pairs(cfg.pairs), cfg.reliability_floor, interest_names(cfg));
    auto out = cfg.out("skews.csv");
    save_skew_table(table, out);
    std::size_t usable = 0;
    for (const auto& r : table.rows) usable += r.score.usable();
    log << "skew: " << table.rows.size() << " scores, " << usable << " usable\n";
    auto manifest = make_manifest(cfg, "skew");
    manifest.add_input(in);
    manifest.add_output(out);
    manifest.write(cfg.out());
}

void cmd_pageskew(const RunConfig& cfg, std::ostream& log) {
    auto psl_file = psl_path(cfg);
    require_file(psl_file, "public suffix list");
    if (cfg.domain_bias.empty() || cfg.interest_pages.empty())
        throw ConfigError("config: pageskew needs domain_bias and interest_pages");
    auto bias_file = cfg.resolve(cfg.domain_bias), pages_file = cfg.resolve(cfg.interest_pages);
    require_file(bias_file, "domain bias file");
    require_file(pages_file, "interest pages file");
    auto psl = page::PublicSuffixList::load(psl_file);
    auto bias = page::load_domain_bias(bias_file, psl);
    for (const auto& w : bias.warnings) log << "pageskew: " << w << '\n';
    for (const auto& r : bias.rejects.rows)
        log << "pageskew: " << bias_file.string() << ":" << r.line << " rejected: " << r.reason << '\n';
    auto pages = page::load_interest_pages(pages_file, psl);
    log << "pageskew: " << pages.dropped_urls.count() << " urls dropped during normalization\n";
    auto prevalence = page::rank_domain_prevalence(pages.records);

    std::map<std::string, double> voter;
    auto skews_csv = cfg.out("skews.csv");
    auto manifest = make_manifest(cfg, "pageskew");
    if (fs::is_regular_file(skews_csv)) {
        auto table = load_skew_table(skews_csv);
        for (const auto& [id, row] : table.by_pair(AudiencePair::RD))
            if (row->score.usable()) voter[id] = *row->score.value;
        manifest.add_input(skews_csv);
    }

    auto out = cfg.out("page_skews.csv");
    csv::Writer w(out);
    w.row({"interest_id", "page_skew", "matched", "total", "dropped", "voter_skew_rd"});
    for (const auto& rec : pages.records) {
        auto r = page::compute_page_skew(rec, bias.table, cfg.drop_top_k, prevalence);
        auto v = voter.find(rec.interest_id);
        w.row({r.interest_id, r.value ? fixed(*r.value, 6) : "", std::to_string(r.matched),
               std::to_string(r.total), std::to_string(r.dropped), v != voter.end() ? fixed(v->second, 6) : ""});
    }
    w.close();

    auto curve_out = cfg.out("page_tradeoff.csv");
    auto curve = page::pruning_tradeoff_curve(pages.records, bias.table, voter, cfg.tradeoff_k);
    csv::Writer cw(curve_out);
    cw.row({"k", "coverage", "pearson_r", "joint"});
    for (const auto& p : curve)
        cw.row({std::to_string(p.k), fixed(p.coverage, 6), p.pearson_r ? fixed(*p.pearson_r, 6) : "",
                std::to_string(p.joint)});
    cw.close();

    auto cov = page::bias_coverage(pages.records, bias.table);
    log << "pageskew: " << pages.records.size() << " interests; bias coverage " << fixed(cov.mention_fraction, 3)
        << " of mentions, " << fixed(cov.unique_fraction, 3) << " of unique domains\n";
    for (const auto& p : {psl_file, bias_file, pages_file}) manifest.add_input(p);
    manifest.add_output(out);
    manifest.add_output(curve_out);
    manifest.write(cfg.out());
}

void cmd_ingest(const RunConfig& cfg, std::ostream& log) {
    auto manifest = make_manifest(cfg, "ingest");
    std::unique_ptr<adlib::Fetcher> fetcher;
    std::vector<adlib::Date> dates;
    if (!cfg.first_date.empty() && !cfg.last_date.empty())
        dates = adlib::date_range(*adlib::parse_date(cfg.first_date), *adlib::parse_date(cfg.last_date));
    if (!cfg.endpoint.empty()) {
        if (dates.empty()) throw ConfigError("config: ingest.first_date and last_date are required with an endpoint");
        fetcher = std::make_unique<adlib::HttpFetcher>(cfg.endpoint);
    } else if (!cfg.replay_dir.empty()) {
        auto dir = cfg.resolve(cfg.replay_dir);
        if (!fs::is_directory(dir)) throw IoError(dir.string(), "replay directory not found");
        if (dates.empty()) {
            auto found = infer_dates(dir);
            if (found.empty()) throw DataError(dir.string() + ": no advertisers_<date>.json listings");
            dates = adlib::date_range(found.front(), found.back());
        }
        fetcher = std::make_unique<adlib::ReplayFetcher>(dir);
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file()) manifest.add_input(e.path());
    } else {
        throw ConfigError("config: ingest needs replay_dir or endpoint");
    }

    adlib::RateLimiter limiter(std::chrono::milliseconds(cfg.min_delay_ms), cfg.max_in_flight);
    adlib::RetryPolicy policy;
    policy.max_retries = cfg.max_retries;
    adlib::AdLibraryClient client(*fetcher, limiter, policy);
    auto res = adlib::run_ingest(client, dates);
    for (const auto& w : res.warnings) log << "ingest: " << w << '\n';
    for (const auto& e : res.parse_errors) log << "ingest: " << e << '\n';
    for (const auto& f : res.failures)
        log << "ingest: " << f.what << " " << adlib::format_date(f.date) << " failed after " << f.attempts
            << " attempts: " << f.last.message << '\n';

    auto snaps = cfg.out("ingest/snapshots.jsonl");
    adlib::save_dataset(res.dataset, snaps);
    auto stats = adlib::dataset_stats(res.dataset);
    auto stats_out = cfg.out("ingest/stats.json");
    report::write_text(stats_out, adlib::stats_to_json(stats));
    log << "ingest: " << stats.requests << " requests, missing rate " << fixed(stats.missing_rate, 4) << ", "
        << stats.windows << " windows, " << res.failures.size() << " failures\n";
    manifest.add_output(snaps);
    manifest.add_output(cfg.out("ingest/snapshots_log.json"));
    manifest.add_output(stats_out);
    manifest.write(cfg.out());
}

void cmd_analyze(const RunConfig& cfg, std::ostream& log) {
    auto manifest = make_manifest(cfg, "analyze");
    auto skews_csv = cfg.out("skews.csv");
    require_file(skews_csv, "skew table (run `skew` first)");
    auto table = load_skew_table(skews_csv);
    manifest.add_input(skews_csv);

    report::AnalysisBundle bundle;
    auto rd = table.scores(AudiencePair::RD);
    SkewThresholds th = cfg.thresholds.value_or(SkewThresholds{});
    if (cfg.derive_thresholds) {
        std::vector<SkewScore> usable;
        for (const auto& s : rd)
            if (s.usable()) usable.push_back(s);
        auto cuts = derive_tertile_thresholds(usable);
        th = cuts.thresholds();
        log << "analyze: derived tertile cuts " << fixed(cuts.lower, 4) << " / " << fixed(cuts.upper, 4) << '\n';
    }
    bundle.thresholds = th;
    bundle.thresholds_derived = cfg.derive_thresholds;

    for (auto pair : parse_pairs(cfg.pairs)) {
        std::vector<std::optional<double>> values;
        for (const auto& s : table.scores(pair)) values.push_back(s.usable() ? s.value : std::nullopt);
        bundle.histograms[std::string(to_string(pair))] = make_histogram(values, cfg.bin_width);
    }

    auto est_csv = cfg.out("estimates.csv");
    if (fs::is_regular_file(est_csv)) {
        auto matrix = EstimateMatrix::load(est_csv);
        manifest.add_input(est_csv);
        for (auto pair : parse_pairs(cfg.pairs)) bundle.coverage.push_back(analytics::coverage_correlation(matrix, pair));
    }

    auto curve_csv = cfg.out("page_tradeoff.csv");
    if (fs::is_regular_file(curve_csv)) {
        auto lines = csv::read_lines(curve_csv);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            auto f = csv::split_line(lines[i]);
            if (f.size() != 4) throw DataError(curve_csv.string() + ": malformed row " + std::to_string(i + 1));
            bundle.tradeoff.push_back({std::stoul(f[0]), std::stod(f[1]),
                                       f[2].empty() ? std::nullopt : std::optional<double>(std::stod(f[2])),
                                       std::stoul(f[3])});
        }
        manifest.add_input(curve_csv);
    }

    auto snaps = cfg.out("ingest/snapshots.jsonl");
    bool have_corpus = fs::is_regular_file(snaps);
    if (have_corpus) {
        auto dataset = adlib::load_dataset(snaps);
        manifest.add_input(snaps);
        if (cfg.affiliations.empty()) throw ConfigError("config: analyze.affiliations is required with ingest data");
        auto aff_file = cfg.resolve(cfg.affiliations);
        require_file(aff_file, "affiliations file");
        manifest.add_input(aff_file);
        auto aff_load = analytics::load_affiliations(aff_file);
        for (const auto& r : aff_load.rejects.rows)
            log << "analyze: " << aff_file.string() << ":" << r.line << " rejected: " << r.reason << '\n';
        auto aff = analytics::index_affiliations(aff_load.records);

        analytics::LeaningMap leanings;
        std::map<std::string, double> audience_skews;
        for (const auto& row : table.rows) {
            if (row.pair_label != "RD") continue;
            leanings[row.interest_name] = classify_tertile(row.score, th);
            if (row.score.usable()) audience_skews[row.interest_name] = *row.score.value;
        }

        try {
            bundle.usage = analytics::usage_shares(dataset, aff, leanings);
        } catch (const DataError& e) {
            log << "analyze: usage shares skipped: " << e.what() << '\n';
        }
        for (auto group : {analytics::Group::Conservatives, analytics::Group::Progressives})
            for (auto mode : {adlib::Mode::Include, adlib::Mode::Exclude})
                for (auto l : {Leaning::DemocraticSkew, Leaning::Neutral, Leaning::RepublicanSkew}) {
                    try {
                        bundle.spend_cdfs.push_back({std::string(analytics::to_string(group)),
                                                     std::string(adlib::to_string(mode)), std::string(to_string(l)),
                                                     analytics::spend_distribution(dataset, aff, group, mode, l, leanings)});
                    } catch (const DataError&) {
                        // Empty selection: the figure simply has no line for it.
                    }
                }
        for (auto mode : {adlib::Mode::Include, adlib::Mode::Exclude}) {
            auto pts = analytics::compute_spend_skew_points(dataset, aff, audience_skews, mode);
            try {
                report::FitPanel panel{std::string(adlib::to_string(mode)),
                                       analytics::fit_spend_vs_audience_skew(pts), {}};
                for (const auto& p : pts) panel.points.emplace_back(p.audience_skew, p.spend_skew);
                log << "analyze: fit " << panel.mode << ": intercept " << fixed(panel.fit.intercept, 3)
                    << ", coefficient " << fixed(panel.fit.coefficient, 3) << ", R2 " << fixed(panel.fit.r_squared, 3)
                    << " over " << panel.fit.n_points << " interests\n";
                bundle.fits.push_back(std::move(panel));
            } catch (const DataError& e) {
                log << "analyze: fit " << adlib::to_string(mode) << " skipped: " << e.what() << '\n';
            }
        }
        bundle.top_spend = analytics::top_spend_table(dataset, table, cfg.top_n, th);
    } else {
        log << "analyze: no ingest data; corpus analyses skipped\n";
    }
    bundle.complete = !bundle.histograms.empty() && !bundle.coverage.empty() && !bundle.spend_cdfs.empty() &&
                      !bundle.fits.empty() && !bundle.tradeoff.empty() && !bundle.usage.empty() &&
                      !bundle.top_spend.empty();

    auto bundle_out = cfg.out("analysis/bundle.json");
    report::write_text(bundle_out, bundle.to_json().dump(2) + "\n");
    manifest.add_output(bundle_out);

    auto fits_out = cfg.out("analysis/fits.csv");
    csv::Writer fw(fits_out);
    fw.row({"mode", "intercept", "coefficient", "r_squared", "n_points"});
    for (const auto& f : bundle.fits)
        fw.row({f.mode, fixed(f.fit.intercept, 6), fixed(f.fit.coefficient, 6), fixed(f.fit.r_squared, 6),
                std::to_string(f.fit.n_points)});
    fw.close();
    manifest.add_output(fits_out);

    auto usage_out = cfg.out("analysis/usage_shares.csv");
    csv::Writer uw(usage_out);
    uw.row({"group", "mode", "leaning", "count", "fraction"});
    for (const auto& u : bundle.usage)
        for (const auto& [key, n] : u.counts)
            uw.row({std::string(analytics::to_string(u.group)), std::string(adlib::to_string(key.first)),
                    std::string(to_string(key.second)), std::to_string(n), fixed(u.fraction(key.first, key.second), 6)});
    uw.close();
    manifest.add_output(usage_out);

    log << "analyze: bundle " << (bundle.complete ? "complete" : "partial") << '\n';
    manifest.write(cfg.out());
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
    auto bundle_in = cfg.out("analysis/bundle.json");
    require_file(bundle_in, "analysis bundle (run `analyze` first)");
    auto j = json::parse(report::read_text(bundle_in), nullptr, false);
    if (j.is_discarded()) throw DataError(bundle_in.string() + ": not valid JSON");
    auto bundle = report::AnalysisBundle::from_json(j);
    auto manifest = make_manifest(cfg, "report");
    manifest.add_input(bundle_in);

    auto dir = cfg.out("report");
    auto emitted = report::emit_plots(bundle, dir);
    for (const auto& p : emitted.written) manifest.add_output(p);
    for (const auto& s : emitted.skipped) log << "report: skipped " << s << " (no data)\n";
    auto md = dir / "top_spend.md";
    report::write_text(md, report::render_top_spend_markdown(bundle.top_spend));
    auto tcsv = dir / "top_spend.csv";
    report::save_top_spend_csv(bundle.top_spend, tcsv);
    manifest.add_output(md);
    manifest.add_output(tcsv);
    log << "report: " << emitted.written.size() / 2 << " figures, " << bundle.top_spend.size()
        << " top-spend rows\n";
    manifest.write(cfg.out());
}

void cmd_all(const RunConfig& cfg, std::ostream& log) {
    cmd_world(cfg, log);
    cmd_audiences(cfg, log);
    cmd_estimate(cfg, log);
    cmd_skew(cfg, log);
    if (!cfg.domain_bias.empty() && !cfg.interest_pages.empty()) cmd_pageskew(cfg, log);
    if (!cfg.replay_dir.empty() || !cfg.endpoint.empty()) cmd_ingest(cfg, log);
    cmd_analyze(cfg, log);
    cmd_report(cfg, log);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const BackendError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    return 1;
}

}  // namespace proxyaudit::pipeline
