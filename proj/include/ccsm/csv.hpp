#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ccsm/error.hpp"

namespace ccsm {

// Minimal delimited-text support. Fields must not contain the delimiter;
// no quoting is performed (patient ids, codes and numbers never need it).

inline std::vector<std::string> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

class DelimitedReader {
public:
    DelimitedReader(const std::filesystem::path& path, char delimiter)
        : path_(path.string()), stream_(path), delimiter_(delimiter) {
        if (!stream_) throw IoError("cannot open " + path_ + " for reading");
    }

    // Reads the header row and checks it against the documented schema.
    void expect_header(const std::vector<std::string>& expected) {
        std::string line;
        if (!std::getline(stream_, line)) {
            throw IngestError(path_ + ": missing header row");
        }
        ++row_;
        const auto fields = split_fields(strip_cr(line), delimiter_);
        if (fields != expected) {
            std::string want;
            for (const auto& f : expected) {
                if (!want.empty()) want += delimiter_;
                want += f;
            }
            throw IngestError(path_ + ": header mismatch: expected \"" + want + "\", got \"" +
                              strip_cr(line) + "\"");
        }
    }

    // Returns false at end of file. Skips blank lines.
    bool next_row(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(stream_, line)) {
            ++row_;
            line = strip_cr(std::move(line));
            if (line.empty()) continue;
            fields = split_fields(line, delimiter_);
            return true;
        }
        return false;
    }

    // 1-based row number of the row most recently returned.
    size_t row() const { return row_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream stream_;
    char delimiter_;
    size_t row_ = 0;
};

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

// Fixed significant-digit formatting used by the report writers: always the
// same byte output for the same value.
inline std::string format_significant(double value, int digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%#.*g", digits, value);
    return buf;
}

inline std::string format_scientific(double value, int sig_digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*e", sig_digits - 1, value);
    return buf;
}

}  // namespace ccsm
