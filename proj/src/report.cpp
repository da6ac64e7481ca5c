#include "proxyaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit::report {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kMarginLeft = 60, kMarginRight = 20, kMarginTop = 30, kMarginBottom = 45;

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string f2(double v) { return fixed(v, 2); }

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

Leaning parse_leaning(const std::string& s) {
    for (Leaning l : {Leaning::DemocraticSkew, Leaning::Neutral, Leaning::RepublicanSkew, Leaning::Unavailable})
        if (to_string(l) == s) return l;
    return Leaning::Unavailable;
}

const char* color_for(const std::string& leaning) {
    if (leaning == "DemocraticSkew") return "#3b6fb6";
    if (leaning == "RepublicanSkew") return "#c8423b";
    return "#7f7f7f";
}

}  // namespace

ordered_json AnalysisBundle::to_json() const {
    ordered_json j;
    j["complete"] = complete;
    if (thresholds) {
        j["thresholds"] = {{"democratic_below", thresholds->democratic_below},
                           {"republican_at_or_above", thresholds->republican_at_or_above},
                           {"derived", thresholds_derived}};
    } else {
        j["thresholds"] = nullptr;
    }
    ordered_json h = ordered_json::object();
    for (const auto& [pair, hist] : histograms)
        h[pair] = {{"lo", hist.lo}, {"bin_width", hist.bin_width}, {"counts", hist.counts},
                   {"undefined", hist.undefined}};
    j["histograms"] = h;
    auto cov = ordered_json::array();
    for (const auto& c : coverage) {
        auto pts = ordered_json::array();
        for (const auto& p : c.points) pts.push_back({p.interest, p.x, p.y});
        cov.push_back({{"pair", std::string(to_string(c.pair))}, {"r", opt(c.r)}, {"points", pts}});
    }
    j["coverage"] = cov;
    auto cdfs = ordered_json::array();
    for (const auto& c : spend_cdfs)
        cdfs.push_back({{"group", c.group}, {"mode", c.mode}, {"leaning", c.leaning},
                        {"spends", c.distribution.sorted_spends}, {"median", c.distribution.median},
                        {"mean", c.distribution.mean}});
    j["spend_cdfs"] = cdfs;
    auto fs = ordered_json::array();
    for (const auto& f : fits) {
        auto pts = ordered_json::array();
        for (const auto& [x, y] : f.points) pts.push_back({x, y});
        fs.push_back({{"mode", f.mode}, {"intercept", f.fit.intercept}, {"coefficient", f.fit.coefficient},
                      {"r_squared", f.fit.r_squared}, {"n_points", f.fit.n_points},
                      {"iterations", f.fit.iterations}, {"sse", f.fit.sse}, {"points", pts}});
    }
    j["fits"] = fs;
    auto tr = ordered_json::array();
    for (const auto& t : tradeoff)
        tr.push_back({{"k", t.k}, {"coverage", t.coverage}, {"r", opt(t.pearson_r)}, {"joint", t.joint}});
    j["page_tradeoff"] = tr;
    auto us = ordered_json::array();
    for (const auto& u : usage) {
        auto cells = ordered_json::array();
        for (const auto& [key, n] : u.counts)
            cells.push_back({{"mode", std::string(adlib::to_string(key.first))},
                             {"leaning", std::string(to_string(key.second))},
                             {"count", n},
                             {"fraction", u.fraction(key.first, key.second)}});
        us.push_back({{"group", std::string(analytics::to_string(u.group))}, {"classified", u.classified},
                      {"unavailable", u.unavailable}, {"cells", cells}});
    }
    j["usage_shares"] = us;
    auto top = ordered_json::array();
    for (const auto& r : top_spend) {
        ordered_json sk = ordered_json::object();
        for (const auto& [p, v] : r.skews) sk[std::string(to_string(p))] = opt(v);
        top.push_back({{"interest", r.interest}, {"exclusion_spend", r.exclusion_spend},
                       {"inclusion_spend", r.inclusion_spend}, {"political", r.political},
                       {"skews", sk}, {"leaning", std::string(to_string(r.leaning))}});
    }
    j["top_spend"] = top;
    return j;
}

AnalysisBundle AnalysisBundle::from_json(const json& j) {
    AnalysisBundle b;
    try {
        b.complete = j.value("complete", false);
        if (j.contains("thresholds") && !j["thresholds"].is_null()) {
            const auto& t = j["thresholds"];
            b.thresholds = SkewThresholds{t.at("democratic_below").get<double>(),
                                          t.at("republican_at_or_above").get<double>()};
            b.thresholds_derived = t.value("derived", false);
        }
        const json hists = j.value("histograms", json::object());
        for (const auto& [pair, h] : hists.items()) {
            Histogram hist;
            hist.lo = h.at("lo").get<double>();
            hist.bin_width = h.at("bin_width").get<double>();
            hist.counts = h.at("counts").get<std::vector<std::int64_t>>();
            hist.undefined = h.at("undefined").get<std::int64_t>();
            b.histograms[pair] = hist;
        }
        for (const auto& c : j.value("coverage", json::array())) {
            analytics::CoverageCorrelation cc{parse_pair(c.at("pair").get<std::string>()).value_or(AudiencePair::RD),
                                              opt_from(c.at("r")), {}};
            for (const auto& p : c.at("points"))
                cc.points.push_back({p[0].get<std::string>(), p[1].get<double>(), p[2].get<double>()});
            b.coverage.push_back(std::move(cc));
        }
        for (const auto& c : j.value("spend_cdfs", json::array())) {
            SpendCdf s{c.at("group").get<std::string>(), c.at("mode").get<std::string>(),
                       c.at("leaning").get<std::string>(), {}};
            s.distribution.sorted_spends = c.at("spends").get<std::vector<double>>();
            s.distribution.median = c.at("median").get<double>();
            s.distribution.mean = c.at("mean").get<double>();
            b.spend_cdfs.push_back(std::move(s));
        }
        for (const auto& f : j.value("fits", json::array())) {
            FitPanel p;
            p.mode = f.at("mode").get<std::string>();
            p.fit.intercept = f.at("intercept").get<double>();
            p.fit.coefficient = f.at("coefficient").get<double>();
            p.fit.r_squared = f.at("r_squared").get<double>();
            p.fit.n_points = f.at("n_points").get<std::size_t>();
            p.fit.iterations = f.at("iterations").get<int>();
            p.fit.sse = f.at("sse").get<double>();
            for (const auto& pt : f.at("points")) p.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
            b.fits.push_back(std::move(p));
        }
        for (const auto& t : j.value("page_tradeoff", json::array()))
            b.tradeoff.push_back({t.at("k").get<std::size_t>(), t.at("coverage").get<double>(),
                                  opt_from(t.at("r")), t.at("joint").get<std::size_t>()});
        for (const auto& u : j.value("usage_shares", json::array())) {
            analytics::GroupUsage g{u.at("group").get<std::string>() == "Conservatives"
                                        ? analytics::Group::Conservatives
                                        : analytics::Group::Progressives,
                                    {}, u.at("unavailable").get<std::size_t>(),
                                    u.at("classified").get<std::size_t>()};
            for (const auto& c : u.at("cells"))
                g.counts[{adlib::parse_mode(c.at("mode").get<std::string>()).value_or(adlib::Mode::Include),
                          parse_leaning(c.at("leaning").get<std::string>())}] = c.at("count").get<std::size_t>();
            b.usage.push_back(std::move(g));
        }
        for (const auto& r : j.value("top_spend", json::array())) {
            analytics::TopSpendRow row;
            row.interest = r.at("interest").get<std::string>();
            row.exclusion_spend = r.at("exclusion_spend").get<adlib::Micros>();
            row.inclusion_spend = r.at("inclusion_spend").get<adlib::Micros>();
            row.political = r.at("political").get<bool>();
            for (const auto& [p, v] : r.at("skews").items())
                if (auto pair = parse_pair(p)) row.skews[*pair] = opt_from(v);
            row.leaning = parse_leaning(r.at("leaning").get<std::string>());
            b.top_spend.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("analysis bundle: ") + e.what());
    }
    return b;
}

Plot::Plot(std::string title, std::string x_label, std::string y_label, double x_min, double x_max,
           double y_min, double y_max)
    : title_(std::move(title)),
      x_label_(std::move(x_label)),
      y_label_(std::move(y_label)),
      x_min_(x_min),
      x_max_(x_max > x_min ? x_max : x_min + 1),
      y_min_(y_min),
      y_max_(y_max > y_min ? y_max : y_min + 1) {}

double Plot::px(double x) const {
    return kMarginLeft + (x - x_min_) / (x_max_ - x_min_) * (kWidth - kMarginLeft - kMarginRight);
}

double Plot::py(double y) const {
    return kHeight - kMarginBottom - (y - y_min_) / (y_max_ - y_min_) * (kHeight - kMarginTop - kMarginBottom);
}

void Plot::bar(double x0, double x1, double y, const std::string& fill) {
    double top = py(y), base = py(y_min_);
    body_.push_back("<rect x=\"" + f2(px(x0)) + "\" y=\"" + f2(top) + "\" width=\"" + f2(px(x1) - px(x0)) +
                    "\" height=\"" + f2(base - top) + "\" fill=\"" + fill + "\" stroke=\"white\" stroke-width=\"0.5\"/>");
}

void Plot::point(double x, double y, const std::string& fill, double radius) {
    body_.push_back("<circle cx=\"" + f2(px(x)) + "\" cy=\"" + f2(py(y)) + "\" r=\"" + f2(radius) +
                    "\" fill=\"" + fill + "\" fill-opacity=\"0.7\"/>");
}

void Plot::line(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width, bool dashed) {
    if (pts.empty()) return;
    std::string d;
    for (const auto& [x, y] : pts) d += (d.empty() ? "" : " ") + f2(px(x)) + "," + f2(py(y));
    body_.push_back("<polyline points=\"" + d + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                    f2(width) + "\"" + (dashed ? " stroke-dasharray=\"4,3\"" : "") + "/>");
}

void Plot::step(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    std::vector<std::pair<double, double>> s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) s.emplace_back(pts[i].first, pts[i - 1].second);
        s.push_back(pts[i]);
    }
    line(s, stroke);
}

void Plot::legend(const std::string& label, const std::string& color) { legend_.emplace_back(label, color); }

std::string Plot::svg() const {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(kWidth) << "\" height=\"" << f2(kHeight)
      << "\" viewBox=\"0 0 " << f2(kWidth) << " " << f2(kHeight) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << f2(kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(title_) << "</text>\n";
    // Axes and ticks.
    double x0 = px(x_min_), x1 = px(x_max_), y0 = py(y_min_), y1 = py(y_max_);
    o << "<line x1=\"" << f2(x0) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(x1) << "\" y2=\"" << f2(y0)
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << f2(x0) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(x0) << "\" y2=\"" << f2(y1)
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double xv = x_min_ + (x_max_ - x_min_) * i / 4.0;
        double yv = y_min_ + (y_max_ - y_min_) * i / 4.0;
        o << "<line x1=\"" << f2(px(xv)) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(px(xv)) << "\" y2=\""
          << f2(y0 + 4) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << f2(px(xv)) << "\" y=\"" << f2(y0 + 16) << "\" text-anchor=\"middle\">" << f2(xv)
          << "</text>\n";
        o << "<line x1=\"" << f2(x0 - 4) << "\" y1=\"" << f2(py(yv)) << "\" x2=\"" << f2(x0) << "\" y2=\""
          << f2(py(yv)) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << f2(x0 - 6) << "\" y=\"" << f2(py(yv) + 4) << "\" text-anchor=\"end\">" << f2(yv)
          << "</text>\n";
    }
    o << "<text x=\"" << f2((x0 + x1) / 2) << "\" y=\"" << f2(kHeight - 8) << "\" text-anchor=\"middle\">"
      << xml_escape(x_label_) << "</text>\n";
    o << "<text x=\"14\" y=\"" << f2((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << f2((y0 + y1) / 2) << ")\">" << xml_escape(y_label_) << "</text>\n";
    for (const auto& b : body_) o << b << '\n';
    double ly = kMarginTop + 6;
    for (const auto& [label, color] : legend_) {
        o << "<rect x=\"" << f2(x1 - 120) << "\" y=\"" << f2(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/><text x=\"" << f2(x1 - 106) << "\" y=\"" << f2(ly) << "\">" << xml_escape(label)
          << "</text>\n";
        ly += 14;
    }
    o << "</svg>\n";
    return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << text;
    if (!out) throw IoError(path.string(), "write failure");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

namespace {

void write_series_csv(const std::filesystem::path& path, const std::vector<Series>& series) {
    csv::Writer w(path);
    w.row({"series", "x", "y"});
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) w.row({s.name, fixed(x, 6), fixed(y, 6)});
    w.close();
}

}  // namespace

EmitResult emit_plots(const AnalysisBundle& bundle, const std::filesystem::path& out_dir) {
    EmitResult res;
    auto emit = [&](const std::string& stem, const Plot& plot, const std::function<void(const std::filesystem::path&)>& csv_writer) {
        auto svg = out_dir / (stem + ".svg");
        auto csvp = out_dir / (stem + ".csv");
        write_text(svg, plot.svg());
        csv_writer(csvp);
        res.written.push_back(svg);
        res.written.push_back(csvp);
    };

    // Skew histograms.
    for (AudiencePair p : kAllPairs) {
        auto label = std::string(to_string(p));
        auto it = bundle.histograms.find(label);
        if (it == bundle.histograms.end()) {
            res.skipped.push_back("hist_" + label);
            continue;
        }
        const auto& h = it->second;
        std::int64_t peak = 0;
        for (auto c : h.counts) peak = std::max(peak, c);
        Plot plot("Skew distribution " + label, "skew", "interests", -1, 1, 0,
                  peak > 0 ? static_cast<double>(peak) * 1.1 : 1.0);
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            if (h.counts[i] > 0)
                plot.bar(h.bin_start(i), std::min(1.0, h.bin_start(i) + h.bin_width),
                         static_cast<double>(h.counts[i]), "#6a51a3");
        emit("hist_" + label, plot, [&](const std::filesystem::path& path) {
            csv::Writer w(path);
            w.row({"bin_start", "bin_end", "count"});
            for (std::size_t i = 0; i < h.counts.size(); ++i)
                if (h.counts[i] > 0)
                    w.row({fixed(h.bin_start(i), 6), fixed(std::min(1.0, h.bin_start(i) + h.bin_width), 6),
                           std::to_string(h.counts[i])});
            w.close();
        });
    }

    // Coverage scatter per pair.
    for (AudiencePair p : kAllPairs) {
        auto label = std::string(to_string(p));
        auto it = std::find_if(bundle.coverage.begin(), bundle.coverage.end(),
                               [&](const auto& c) { return c.pair == p; });
        if (it == bundle.coverage.end()) {
            res.skipped.push_back("coverage_" + label);
            continue;
        }
        auto [la, lb] = pair_audiences(p);
        double hi = 0;
        for (const auto& pt : it->points) hi = std::max({hi, pt.x, pt.y});
        hi = hi > 0 ? hi * 1.05 : 1.0;
        Series pts{"points", {}}, diag{"diagonal", {{0, 0}, {hi, hi}}};
        for (const auto& pt : it->points) pts.points.emplace_back(pt.x, pt.y);
        Plot plot("Coverage " + std::string(la) + " vs " + std::string(lb) +
                      (it->r ? " (r=" + fixed(*it->r, 3) + ")" : ""),
                  "coverage " + std::string(la), "coverage " + std::string(lb), 0, hi, 0, hi);
        plot.line(diag.points, "#bbbbbb", 1.0, true);
        for (const auto& [x, y] : pts.points) plot.point(x, y, "#2b8cbe");
        emit("coverage_" + label, plot, [&](const auto& path) { write_series_csv(path, {pts, diag}); });
    }

    // Spend CDFs: one figure per (group, mode), one step line per leaning.
    std::map<std::pair<std::string, std::string>, std::vector<const SpendCdf*>> panels;
    for (const auto& c : bundle.spend_cdfs) panels[{c.group, c.mode}].push_back(&c);
    if (panels.empty()) res.skipped.push_back("spend_cdf");
    for (const auto& [key, cdfs] : panels) {
        double lo = 1e300, hi = 0;
        for (const auto* c : cdfs)
            for (double v : c->distribution.sorted_spends)
                if (v > 0) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
        if (hi <= 0) {
            lo = 1;
            hi = 10;
        }
        double lx = std::floor(std::log10(lo)), hx = std::ceil(std::log10(hi));
        if (hx <= lx) hx = lx + 1;
        Plot plot("Spend per interest, " + key.first + " " + key.second, "log10 spend", "CDF", lx, hx, 0, 1);
        std::vector<Series> series;
        for (const auto* c : cdfs) {
            Series s{c->leaning, {}};
            const auto& v = c->distribution.sorted_spends;
            for (std::size_t i = 0; i < v.size(); ++i)
                s.points.emplace_back(std::log10(std::max(v[i], std::pow(10.0, lx))),
                                      static_cast<double>(i + 1) / static_cast<double>(v.size()));
            plot.step(s.points, color_for(c->leaning));
            double m = std::log10(std::max(c->distribution.mean, std::pow(10.0, lx)));
            Series mean_line{c->leaning + " mean", {{m, 0}, {m, 1}}};
            plot.line(mean_line.points, color_for(c->leaning), 1.0, true);
            plot.legend(c->leaning, color_for(c->leaning));
            series.push_back(std::move(s));
            series.push_back(std::move(mean_line));
        }
        emit("spend_cdf_" + key.first + "_" + key.second, plot,
             [&](const auto& path) { write_series_csv(path, series); });
    }

    // Spend skew vs audience skew with fitted curve.
    if (bundle.fits.empty()) res.skipped.push_back("fit");
    for (const auto& f : bundle.fits) {
        Series pts{"points", f.points}, curve{"curve", {}};
        for (int i = 0; i <= 200; ++i) {
            double x = -1.0 + i / 100.0;
            curve.points.emplace_back(x, f.fit.predict(x));
        }
        Plot plot("Spend skew vs audience skew (" + f.mode + ", R2=" + fixed(f.fit.r_squared, 2) + ")",
                  "audience skew RD", "spend skew", -1, 1, -1, 1);
        for (const auto& [x, y] : pts.points) plot.point(x, y, "#999999", 2.0);
        plot.line(curve.points, f.mode == "include" ? "#c8423b" : "#3b6fb6");
        emit("fit_" + f.mode, plot, [&](const auto& path) { write_series_csv(path, {pts, curve}); });
    }

    if (bundle.tradeoff.empty()) {
        res.skipped.push_back("page_tradeoff");
    } else {
        Series cov{"coverage", {}}, r{"pearson_r", {}};
        double kmax = 0;
        for (const auto& t : bundle.tradeoff) {
            kmax = std::max(kmax, static_cast<double>(t.k));
            cov.points.emplace_back(static_cast<double>(t.k), t.coverage);
            if (t.pearson_r) r.points.emplace_back(static_cast<double>(t.k), *t.pearson_r);
        }
        Plot plot("Top-domain pruning", "domains dropped (k)", "value", 0, std::max(1.0, kmax), -1, 1);
        plot.line(cov.points, "#2b8cbe");
        plot.line(r.points, "#e6550d");
        plot.legend("coverage", "#2b8cbe");
        plot.legend("pearson r", "#e6550d");
        emit("page_tradeoff", plot, [&](const auto& path) { write_series_csv(path, {cov, r}); });
    }
    return res;
}

std::string render_top_spend_markdown(const std::vector<analytics::TopSpendRow>& rows) {
    std::ostringstream o;
    o << "| Interest | Spend (exclusion) | Spend (inclusion) | Political | S_RD | S_WB | S_WH | S_BH |\n";
    o << "|---|---:|---:|:-:|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
        o << "| " << r.interest << " | " << adlib::format_millions(r.exclusion_spend) << " | "
          << adlib::format_millions(r.inclusion_spend) << " | " << (r.political ? "x" : "") << " |";
        for (AudiencePair p : kAllPairs) {
            auto it = r.skews.find(p);
            o << ' ' << (it != r.skews.end() && it->second ? fixed(*it->second, 2) : std::string("-")) << " |";
        }
        o << '\n';
    }
    return o.str();
}

void save_top_spend_csv(const std::vector<analytics::TopSpendRow>& rows, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"rank", "interest", "exclusion_spend", "inclusion_spend", "political", "S_RD", "S_WB", "S_WH", "S_BH",
           "leaning"});
    std::size_t rank = 0;
    for (const auto& r : rows) {
        std::vector<std::string> f{std::to_string(++rank), r.interest, adlib::format_millions(r.exclusion_spend),
                                   adlib::format_millions(r.inclusion_spend), r.political ? "1" : "0"};
        for (AudiencePair p : kAllPairs) {
            auto it = r.skews.find(p);
            f.push_back(it != r.skews.end() && it->second ? fixed(*it->second, 2) : "-");
        }
        f.emplace_back(to_string(r.leaning));
        w.row(f);
    }
    w.close();
}

Manifest::Manifest(std::string command) : command_(std::move(command)) {}

void Manifest::set_config(ordered_json config) { config_ = std::move(config); }

void Manifest::add_input(const std::filesystem::path& path) {
    if (std::filesystem::is_regular_file(path)) inputs_[path.lexically_normal().string()] = file_sha256(path);
}

void Manifest::add_output(const std::filesystem::path& path) {
    outputs_[path.lexically_normal().string()] = file_sha256(path);
}

void Manifest::write(const std::filesystem::path& root) const {
    auto path = root / "manifest.json";
    ordered_json doc;
    if (std::filesystem::exists(path)) {
        auto j = ordered_json::parse(read_text(path), nullptr, false);
        if (!j.is_discarded() && j.is_object()) doc = std::move(j);
    }
    doc["toolkit"] = "proxyaudit";
    doc["version"] = kToolkitVersion;
    auto rel = [&](const std::string& p) {
        auto r = std::filesystem::path(p).lexically_relative(root);
        return (r.empty() || r.string().rfind("..", 0) == 0) ? p : r.string();
    };
    ordered_json entry;
    entry["config"] = config_;
    ordered_json in = ordered_json::object(), out = ordered_json::object();
    for (const auto& [p, h] : inputs_) in[p] = h;
    for (const auto& [p, h] : outputs_) out[rel(p)] = h;
    entry["inputs"] = in;
    entry["outputs"] = out;
    // Keep commands in a fixed order regardless of execution order.
    ordered_json commands = ordered_json::object();
    ordered_json previous = doc.contains("commands") ? doc["commands"] : ordered_json::object();
    for (const char* c : {"world", "audiences", "estimate", "skew", "pageskew", "ingest", "analyze", "report"}) {
        if (c == command_) commands[c] = entry;
        else if (previous.contains(c)) commands[c] = previous[c];
    }
    doc["commands"] = commands;
    write_text(path, doc.dump(2) + "\n");
}

}  // namespace proxyaudit::report
