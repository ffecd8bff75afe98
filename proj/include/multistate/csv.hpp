#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "multistate/errors.hpp"

namespace multistate::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// UTF-8, comma separated, one header row, no quoting (no field in any of the
// shipped schemas contains a comma). CRLF endings are tolerated.
inline Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) throw DataError("empty file: " + path.string());
    return table;
}

inline void expect_header(const Table& table, const std::vector<std::string>& expected,
                          const std::string& context) {
    if (table.header != expected) {
        std::string want;
        for (const auto& h : expected) {
            if (!want.empty()) want += ',';
            want += h;
        }
        throw DataError(context + ": expected header '" + want + "'");
    }
}

inline long long parse_int(std::string_view text, const std::string& context) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw MalformedRow(context + ": not an integer: '" + std::string(text) + "'");
    return value;
}

inline double parse_double(std::string_view text, const std::string& context) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw MalformedRow(context + ": not a number: '" + std::string(text) + "'");
    return value;
}

// Writes via a temp file in the same directory and renames over the target,
// so readers never observe a partially written file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// Shortest round-trip formatting so rerunning a deterministic pipeline yields
// byte-identical CSVs.
inline std::string format_double(double value) {
    char buf[32];
    int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    double back = 0;
    std::from_chars(buf, buf + n, back);
    if (back == value) {
        for (int prec = 1; prec < 17; ++prec) {
            int m = std::snprintf(buf, sizeof buf, "%.*g", prec, value);
            std::from_chars(buf, buf + m, back);
            if (back == value) break;
        }
    }
    return buf;
}

} // namespace multistate::csv
