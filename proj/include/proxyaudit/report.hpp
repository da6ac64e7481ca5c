#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxyaudit/analytics.hpp"
#include "proxyaudit/page_skew.hpp"
#include "proxyaudit/skew.hpp"

namespace proxyaudit::report {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct SpendCdf {
    std::string group;   // Conservatives / Progressives
    std::string mode;    // include / exclude
    std::string leaning; // DemocraticSkew / Neutral / RepublicanSkew
    analytics::SpendDistribution distribution;
};

struct FitPanel {
    std::string mode;
    analytics::FitResult fit;
    std::vector<std::pair<double, double>> points;  // (audience skew, spend skew)
};

// Everything the plots and tables are drawn from. Any member may be empty;
// plots whose data is missing are skipped and listed.
struct AnalysisBundle {
    std::map<std::string, Histogram> histograms;  // by pair label
    std::vector<analytics::CoverageCorrelation> coverage;
    std::vector<SpendCdf> spend_cdfs;
    std::vector<FitPanel> fits;
    std::vector<page::TradeoffPoint> tradeoff;
    std::vector<analytics::GroupUsage> usage;
    std::vector<analytics::TopSpendRow> top_spend;
    std::optional<SkewThresholds> thresholds;
    bool thresholds_derived = false;
    bool complete = false;

    nlohmann::ordered_json to_json() const;
    static AnalysisBundle from_json(const nlohmann::json& j);
};

// Minimal deterministic SVG canvas with a linear data-to-pixel mapping.
class Plot {
public:
    Plot(std::string title, std::string x_label, std::string y_label, double x_min, double x_max,
         double y_min, double y_max);

    double px(double x) const;
    double py(double y) const;

    void bar(double x0, double x1, double y, const std::string& fill);
    void point(double x, double y, const std::string& fill, double radius = 2.5);
    void line(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
              double width = kLineWidth, bool dashed = false);
    void step(const std::vector<std::pair<double, double>>& pts, const std::string& stroke);
    void legend(const std::string& label, const std::string& color);
    std::string svg() const;

    static constexpr double kWidth = 480;
    static constexpr double kHeight = 360;
    static constexpr double kLineWidth = 2.0;

private:
    std::string title_, x_label_, y_label_;
    double x_min_, x_max_, y_min_, y_max_;
    std::vector<std::string> body_;
    std::vector<std::pair<std::string, std::string>> legend_;
};

struct EmitResult {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> skipped;
};

// Writes one SVG per figure next to a CSV (`series,x,y` or a histogram
// table) holding exactly the plotted values.
EmitResult emit_plots(const AnalysisBundle& bundle, const std::filesystem::path& out_dir);

// Markdown table: spend in millions, skews to two decimals, "-"
// for unavailable skews.
std::string render_top_spend_markdown(const std::vector<analytics::TopSpendRow>& rows);
void save_top_spend_csv(const std::vector<analytics::TopSpendRow>& rows,
                        const std::filesystem::path& path);

// Run manifest: per command, the config echo and content hashes of inputs
// and outputs. Entries of other commands already on disk are preserved.
class Manifest {
public:
    explicit Manifest(std::string command);
    void set_config(nlohmann::ordered_json config);
    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    // Paths are recorded relative to `root` (the output directory).
    void write(const std::filesystem::path& root) const;

private:
    std::string command_;
    nlohmann::ordered_json config_;
    std::map<std::string, std::string> inputs_, outputs_;
};

std::string file_sha256(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

inline constexpr const char* kToolkitVersion = "0.3.0";

}  // namespace proxyaudit::report
