#include "proxyaudit/csv.hpp"

#include "proxyaudit/errors.hpp"

namespace proxyaudit::csv {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string escape(std::string_view field) {
    bool needs = field.find_first_of(",\"\n") != std::string_view::npos ||
                 (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::vector<std::string> lines;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        first = false;
        lines.push_back(std::move(line));
    }
    if (in.bad()) throw IoError(path.string(), "read failure");
    return lines;
}

Writer::Writer(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError(path.string(), "cannot open for writing");
}

void Writer::row(const std::vector<std::string>& fields) {
    out_ << join(fields) << '\n';
    if (!out_) throw IoError(path_.string(), "write failure");
}

void Writer::close() {
    out_.close();
    if (out_.fail()) throw IoError(path_.string(), "close failure");
}

}  // namespace proxyaudit::csv
