#pragma once

// Column tables and their CSV serialization. Every CSV starts with a
// "# config_hash=<hex>" line followed by the column header; values are
// written with 17 significant digits.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hris {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row)
    {
        if (row.size() != columns.size()) {
            throw std::invalid_argument("Table: row width does not match the header");
        }
        rows.push_back(std::move(row));
    }
};

inline std::string format17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// 64-bit FNV-1a, used to tag outputs with the configuration they came from.
inline std::uint64_t fnv1a(std::string_view data)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string to_csv(const Table& t, const std::string& config_hash)
{
    std::string out = "# config_hash=" + config_hash + "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        out += (c ? "," : "") + t.columns[c];
    }
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) {
                out += ",";
            }
            out += format17(row[c]);
        }
        out += "\n";
    }
    return out;
}

inline void write_csv(const std::string& path, const Table& t, const std::string& config_hash)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    f << to_csv(t, config_hash);
    if (!f) {
        throw std::runtime_error("failed writing " + path);
    }
}

} // namespace hris
