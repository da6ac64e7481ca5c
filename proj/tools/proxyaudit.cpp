#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/pipeline.hpp"

namespace pl = proxyaudit::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"proxyaudit: audience skew and ad-library targeting analysis"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> min_delay_ms, max_retries;
    std::string replay_dir, endpoint;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--seed", seed, "master seed (overrides config)");
    app.add_option("--min-delay-ms", min_delay_ms, "minimum spacing between ad-library requests");
    app.add_option("--max-retries", max_retries, "retries per ad-library request");
    app.add_option("--replay-dir", replay_dir, "ad-library replay directory");
    app.add_option("--endpoint", endpoint, "ad-library HTTP endpoint, e.g. http://127.0.0.1:8080");

    const std::map<std::string, void (*)(const pl::RunConfig&, std::ostream&)> commands{
        {"world", pl::cmd_world},       {"audiences", pl::cmd_audiences}, {"estimate", pl::cmd_estimate},
        {"skew", pl::cmd_skew},         {"pageskew", pl::cmd_pageskew},   {"ingest", pl::cmd_ingest},
        {"analyze", pl::cmd_analyze},   {"report", pl::cmd_report},       {"all", pl::cmd_all}};
    const std::map<std::string, std::string> help{
        {"world", "generate a synthetic population and voter file"},
        {"audiences", "build party- and race-uniform audiences"},
        {"estimate", "query reach estimates for every audience x interest"},
        {"skew", "compute the skew table"},
        {"pageskew", "compute page-based skews and the pruning trade-off"},
        {"ingest", "collect and normalize ad-library targeting reports"},
        {"analyze", "usage shares, spend distributions, fits and the top-spend table"},
        {"report", "emit SVG figures, CSVs and the top-spend table"},
        {"all", "run every configured stage in order"}};
    for (const auto& [name, text] : help) app.add_subcommand(name, text)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        pl::RunConfig cfg = config_path.empty() ? pl::RunConfig::from_json(nlohmann::json::object(), ".")
                                                : pl::RunConfig::load(config_path);
        // Flags win over the file. Flag paths are relative to the working directory.
        if (!out_dir.empty()) cfg.out_dir = std::filesystem::absolute(out_dir);
        if (seed) cfg.seed = *seed;
        if (min_delay_ms) cfg.min_delay_ms = *min_delay_ms;
        if (max_retries) cfg.max_retries = *max_retries;
        if (!replay_dir.empty()) cfg.replay_dir = std::filesystem::absolute(replay_dir);
        if (!endpoint.empty()) cfg.endpoint = endpoint;
        if (cfg.min_delay_ms < 0 || cfg.max_retries < 0) throw proxyaudit::ConfigError("rate-limit flags must be >= 0");

        const auto* sub = app.get_subcommands().front();
        commands.at(sub->get_name())(cfg, std::cerr);
        return 0;
    } catch (const std::exception& e) {
        int code = pl::exit_code_for(e);
        const char* kind = code == 3 ? "backend error" : code == 2 ? "config error" : "data error";
        std::cerr << "proxyaudit: " << kind << ": " << e.what() << '\n';
        return code;
    }
}
