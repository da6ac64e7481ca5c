#include "proxyaudit/page_skew.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "proxyaudit/csv.hpp"
#include "proxyaudit/errors.hpp"
#include "proxyaudit/numeric.hpp"

namespace proxyaudit::page {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> labels_of(std::string_view host) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto dot = host.find('.', start);
        out.push_back(host.substr(start, dot == std::string_view::npos ? dot : dot - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return out;
}

std::string join_from(const std::vector<std::string_view>& labels, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < labels.size(); ++i) {
        if (i > from) out.push_back('.');
        out.append(labels[i]);
    }
    return out;
}

bool valid_label(std::string_view l) {
    if (l.empty() || l.size() > 63 || l.front() == '-' || l.back() == '-') return false;
    return std::all_of(l.begin(), l.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-';
    });
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::string_view text) {
    PublicSuffixList psl;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.rfind("//", 0) == 0) continue;
        // Rules end at the first whitespace.
        auto sp = t.find_first_of(" \t");
        if (sp != std::string_view::npos) t = t.substr(0, sp);
        std::string rule = lower(t);
        if (rule.rfind("!", 0) == 0)
            psl.exceptions_.insert(rule.substr(1));
        else if (rule.rfind("*.", 0) == 0)
            psl.wildcards_.insert(rule.substr(2));
        else
            psl.rules_.insert(rule);
    }
    return psl;
}

PublicSuffixList PublicSuffixList::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open public suffix list");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::optional<std::string> PublicSuffixList::registrable_domain(std::string_view host) const {
    auto labels = labels_of(host);
    const std::size_t n = labels.size();
    // Length (in labels) of the longest matching public suffix; the implicit
    // "*" rule makes it at least 1.
    std::size_t suffix_len = 1;
    for (std::size_t i = 0; i < n; ++i) {
        std::string candidate = join_from(labels, i);
        std::size_t len = n - i;
        if (exceptions_.count(candidate)) {
            // An exception rule wins outright; its suffix is the rule minus
            // the leftmost label.
            suffix_len = len - 1;
            break;
        }
        if (rules_.count(candidate)) suffix_len = std::max(suffix_len, len);
        if (i + 1 < n && wildcards_.count(join_from(labels, i + 1)))
            suffix_len = std::max(suffix_len, len);
    }
    if (suffix_len >= n) return std::nullopt;
    return join_from(labels, n - suffix_len - 1);
}

std::optional<std::string> normalize_domain(std::string_view url, const PublicSuffixList& psl) {
    std::string_view s = trim(url);
    if (s.empty()) return std::nullopt;
    if (auto scheme = s.find("://"); scheme != std::string_view::npos) {
        auto name = s.substr(0, scheme);
        if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
            }))
            return std::nullopt;
        s.remove_prefix(scheme + 3);
    } else if (s.rfind("//", 0) == 0) {
        s.remove_prefix(2);
    }
    auto end = s.find_first_of("/?#");
    if (end != std::string_view::npos) s = s.substr(0, end);
    if (auto at = s.rfind('@'); at != std::string_view::npos) s.remove_prefix(at + 1);
    if (!s.empty() && s.front() == '[') return std::nullopt;  // IPv6 literal
    if (auto colon = s.find(':'); colon != std::string_view::npos) {
        auto port = s.substr(colon + 1);
        if (!std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return std::nullopt;
        s = s.substr(0, colon);
    }
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    if (s.empty()) return std::nullopt;

    std::string host = lower(s);
    auto labels = labels_of(host);
    if (labels.size() < 2) return std::nullopt;
    for (auto l : labels)
        if (!valid_label(l)) return std::nullopt;
    // All-numeric TLD means an IPv4 literal (or garbage).
    const auto tld = labels.back();
    if (std::all_of(tld.begin(), tld.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return std::nullopt;
    return psl.registrable_domain(host);
}

std::optional<double> DomainBiasTable::lookup(const std::string& domain) const {
    auto it = scores.find(domain);
    if (it == scores.end()) return std::nullopt;
    return it->second;
}

DomainBiasLoad load_domain_bias(const std::filesystem::path& source, const PublicSuffixList& psl) {
    auto lines = csv::read_lines(source);
    DomainBiasLoad out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        if (i == 0 && lines[i] == "domain,score") continue;
        const std::size_t line_no = i + 1;
        auto f = csv::split_line(lines[i]);
        if (f.size() != 2) {
            out.rejects.rows.push_back({line_no, "expected 2 fields"});
            continue;
        }
        auto domain = normalize_domain(f[0], psl);
        if (!domain) {
            out.rejects.rows.push_back({line_no, "invalid domain '" + f[0] + "'"});
            continue;
        }
        double score = 0;
        try {
            std::size_t used = 0;
            score = std::stod(f[1], &used);
            if (used != f[1].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            out.rejects.rows.push_back({line_no, "non-numeric score '" + f[1] + "'"});
            continue;
        }
        if (!std::isfinite(score) || score < -1.0 || score > 1.0) {
            out.rejects.rows.push_back({line_no, "score " + f[1] + " outside [-1, 1]"});
            continue;
        }
        if (out.table.scores.count(*domain))
            out.warnings.push_back("line " + std::to_string(line_no) + ": duplicate domain '" +
                                   *domain + "', last value wins");
        out.table.scores[*domain] = score;
    }
    return out;
}

InterestPagesLoad load_interest_pages(const std::filesystem::path& source,
                                      const PublicSuffixList& psl) {
    auto lines = csv::read_lines(source);
    InterestPagesLoad out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::size_t line_no = i + 1;
        auto j = nlohmann::json::parse(lines[i], nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("interest_id") ||
            !(j["interest_id"].is_string() || j["interest_id"].is_number_integer())) {
            out.dropped_urls.rows.push_back({line_no, "malformed record"});
            continue;
        }
        InterestPagesRecord rec;
        rec.interest_id = j["interest_id"].is_string() ? j["interest_id"].get<std::string>()
                                                       : std::to_string(j["interest_id"].get<long long>());
        std::unordered_set<std::string> seen;
        if (j.contains("urls") && j["urls"].is_array()) {
            for (const auto& u : j["urls"]) {
                std::optional<std::string> d;
                if (u.is_string()) d = normalize_domain(u.get<std::string>(), psl);
                if (!d) {
                    out.dropped_urls.rows.push_back(
                        {line_no, "interest " + rec.interest_id + ": malformed URL " + u.dump()});
                    continue;
                }
                if (seen.insert(*d).second) rec.domains.push_back(*d);
            }
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::vector<DomainPrevalence> rank_domain_prevalence(const std::vector<InterestPagesRecord>& records) {
    if (records.empty()) throw DataError("domain prevalence needs at least one interest record");
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        std::set<std::string> uniq(r.domains.begin(), r.domains.end());
        for (const auto& d : uniq) ++counts[d];
    }
    std::vector<DomainPrevalence> out;
    for (const auto& [d, c] : counts)
        out.push_back({d, static_cast<double>(c) / static_cast<double>(records.size()), c});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.interests != b.interests) return a.interests > b.interests;
        return a.domain < b.domain;
    });
    return out;
}

PageSkewResult compute_page_skew(const InterestPagesRecord& record, const DomainBiasTable& table,
                                 std::size_t drop_top_k,
                                 const std::vector<DomainPrevalence>& prevalence) {
    std::set<std::string> top;
    for (std::size_t i = 0; i < drop_top_k && i < prevalence.size(); ++i) top.insert(prevalence[i].domain);

    PageSkewResult r;
    r.interest_id = record.interest_id;
    r.total = record.domains.size();
    // Sum in sorted order so the result never depends on list order.
    std::vector<double> matched;
    for (const auto& d : record.domains) {
        if (top.count(d)) {
            ++r.dropped;
            continue;
        }
        if (auto s = table.lookup(d)) matched.push_back(*s);
    }
    r.matched = matched.size();
    if (!matched.empty()) {
        std::sort(matched.begin(), matched.end());
        double sum = 0;
        for (double v : matched) sum += v;
        double m = sum / static_cast<double>(matched.size());
        r.value = std::clamp(m, matched.front(), matched.back());
    }
    return r;
}

std::vector<TradeoffPoint> pruning_tradeoff_curve(const std::vector<InterestPagesRecord>& records,
                                                  const DomainBiasTable& table,
                                                  const std::map<std::string, double>& voter_skews,
                                                  const std::vector<std::size_t>& k_values) {
    auto prevalence = rank_domain_prevalence(records);
    std::vector<TradeoffPoint> out;
    for (std::size_t k : k_values) {
        TradeoffPoint pt;
        pt.k = k;
        std::size_t defined = 0;
        std::vector<double> xs, ys;
        for (const auto& rec : records) {
            auto res = compute_page_skew(rec, table, k, prevalence);
            if (!res.value) continue;
            ++defined;
            auto it = voter_skews.find(rec.interest_id);
            if (it == voter_skews.end()) continue;
            xs.push_back(*res.value);
            ys.push_back(it->second);
        }
        pt.coverage = static_cast<double>(defined) / static_cast<double>(records.size());
        pt.joint = xs.size();
        pt.pearson_r = pearson(xs, ys, 3);
        out.push_back(pt);
    }
    return out;
}

BiasCoverage bias_coverage(const std::vector<InterestPagesRecord>& records,
                           const DomainBiasTable& table) {
    BiasCoverage c;
    std::size_t hits = 0;
    std::set<std::string> uniq;
    for (const auto& r : records) {
        for (const auto& d : r.domains) {
            ++c.mentions;
            if (table.lookup(d)) ++hits;
            uniq.insert(d);
        }
    }
    c.unique_domains = uniq.size();
    std::size_t uniq_hits = 0;
    for (const auto& d : uniq)
        if (table.lookup(d)) ++uniq_hits;
    if (c.mentions) c.mention_fraction = static_cast<double>(hits) / static_cast<double>(c.mentions);
    if (c.unique_domains)
        c.unique_fraction = static_cast<double>(uniq_hits) / static_cast<double>(c.unique_domains);
    return c;
}

}  // namespace proxyaudit::page
