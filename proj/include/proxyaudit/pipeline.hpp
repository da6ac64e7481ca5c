#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxyaudit/skew.hpp"

namespace proxyaudit::pipeline {

namespace fs = std::filesystem;

// Declarative run configuration. Relative paths resolve against the config
// file's directory; the output directory is created on demand.
struct RunConfig {
    fs::path base_dir = ".";
    fs::path out_dir = "out";
    std::uint64_t seed = 1;

    // world
    std::size_t population_size = 40000;
    double activity_rate = 0.9;
    fs::path interests_file;  // planted interests CSV; empty uses the built-in demo set
    fs::path voter_file;      // empty uses <out>/world/voters.csv

    // audiences
    std::vector<std::string> audience_labels{"REP", "DEM", "WHITE", "BLACK", "HISPANIC"};
    std::size_t audience_size = 4000;

    // estimate
    std::string backend = "synthetic";  // synthetic | replay
    fs::path replay_fixture;
    std::string model = "sigfigs";      // exact | sigfigs | gaussian
    int sig_figs = 2;
    double sigma = 0.05;
    unsigned threads = 1;
    int cell_retries = 2;

    // skew
    std::vector<std::string> pairs{"RD", "WB", "WH", "BH"};
    std::int64_t reliability_floor = kDefaultReliabilityFloor;

    // pageskew
    fs::path domain_bias;
    fs::path interest_pages;
    fs::path public_suffix_list;  // empty uses the bundled list
    std::size_t drop_top_k = 1;
    std::vector<std::size_t> tradeoff_k{0, 1, 2, 3, 4, 5};

    // ingest
    fs::path replay_dir;
    std::string endpoint;
    std::string first_date, last_date;  // empty: inferred from the replay dir
    int min_delay_ms = 0;
    int max_retries = 3;
    std::size_t max_in_flight = 1;

    // analyze / report
    fs::path affiliations;
    std::optional<SkewThresholds> thresholds;  // empty: derive from the data
    bool derive_thresholds = false;
    std::size_t top_n = 60;
    double bin_width = 0.1;

    // Throws ConfigError on unknown keys, wrong types or bad values.
    static RunConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
    static RunConfig load(const fs::path& path);
    nlohmann::ordered_json to_json() const;

    fs::path resolve(const fs::path& p) const;
    fs::path out(const fs::path& rel = {}) const;
};

// Each command reads its inputs from the config and earlier stages' outputs
// under the output directory, writes its artifacts and updates
// <out>/manifest.json. Errors surface as DataError, ConfigError (IoError)
// or BackendError.
void cmd_world(const RunConfig& cfg, std::ostream& log);
void cmd_audiences(const RunConfig& cfg, std::ostream& log);
void cmd_estimate(const RunConfig& cfg, std::ostream& log);
void cmd_skew(const RunConfig& cfg, std::ostream& log);
void cmd_pageskew(const RunConfig& cfg, std::ostream& log);
void cmd_ingest(const RunConfig& cfg, std::ostream& log);
void cmd_analyze(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);
// Every stage in order; pageskew and ingest run only when configured.
void cmd_all(const RunConfig& cfg, std::ostream& log);

// Maps the error hierarchy to process exit codes (0, 1, 2, 3).
int exit_code_for(const std::exception& e);

}  // namespace proxyaudit::pipeline
