#pragma once

#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "xcal/error.hpp"

namespace xcal::csv {

/// Splits one record of RFC-4180 delimited text. Quoted fields may contain
/// commas and doubled quotes; embedded newlines are not supported.
inline std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
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
        } else if (c == '"' && cur.empty() && !was_quoted) {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else if (c == '\r' && i + 1 == line.size()) {
            break;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw Error("unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Row-at-a-time writer; values are formatted by the caller.
class Writer {
public:
    explicit Writer(std::ostream& out) : out_(&out) {}

    void row(std::initializer_list<std::string_view> fields) {
        bool first = true;
        for (auto f : fields) {
            if (!first) out_->put(',');
            first = false;
            *out_ << quote(f);
        }
        *out_ << "\r\n";
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_->put(',');
            *out_ << quote(fields[i]);
        }
        *out_ << "\r\n";
    }

private:
    std::ostream* out_;
};

// Fixed-precision formatting that never prints "-0.000".
inline std::string fixed(double v, int decimals) {
    std::string s = fmt::format("{:.{}f}", v, decimals);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

}  // namespace xcal::csv
