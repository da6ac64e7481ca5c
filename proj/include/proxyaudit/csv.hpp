#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace proxyaudit::csv {

// Minimal RFC 4180 dialect: comma separated, double-quote quoting, no
// embedded newlines inside quoted fields (none of our formats need them).
std::vector<std::string> split_line(std::string_view line);

// Quotes a field only when it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

// Reads a whole file into lines, stripping '\r' and a UTF-8 BOM.
// Throws IoError when the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Line-oriented writer that throws IoError on open/write failure.
class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    void row(const std::vector<std::string>& fields);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace proxyaudit::csv
