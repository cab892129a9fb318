/*******************************************************************************
* Copyright 2026 The crust-probe Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#ifndef CRUST_PROBE_IO_HPP
#define CRUST_PROBE_IO_HPP

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "core.hpp"

namespace crust_probe::io {

// ---------------------------------------------------------------------------
// Little-endian binary encoding

class BinaryWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void i8(std::int8_t v) { u8(static_cast<std::uint8_t>(v)); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::string_view s) { buf_.append(s); }

    const std::string& data() const noexcept { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string buf_;
};

/// Reads little-endian values and reports the byte offset of any short read.
class BinaryReader {
public:
    explicit BinaryReader(std::string_view data) : data_(data) {}

    std::uint8_t u8(const char* field) { return static_cast<std::uint8_t>(get(1, field)); }
    std::int8_t i8(const char* field) { return static_cast<std::int8_t>(u8(field)); }
    std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(get(4, field)); }
    std::uint64_t u64(const char* field) { return get(8, field); }
    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }
    double f64(const char* field) { return std::bit_cast<double>(u64(field)); }

    std::string_view bytes(std::size_t n, const char* field) {
        require(n, field);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    /// Throws unless `n` more bytes are available.
    void require(std::size_t n, const char* field) const {
        if (remaining() < n)
            throw FormatError("truncated " + std::string(field) + ": expected " +
                                  std::to_string(n) + " bytes, found " +
                                  std::to_string(remaining()),
                              static_cast<std::int64_t>(pos_));
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    std::uint64_t get(int n, const char* field) {
        require(static_cast<std::size_t>(n), field);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Text numbers. Doubles are written in shortest round-trip form so text
// files reload bit-exactly.

inline std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string fmt(float v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    // from_chars rejects a leading '+'
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw FormatError("invalid number '" + std::string(s) + "' for " + std::string(what));
    return v;
}

inline float parse_float(std::string_view s, std::string_view what) {
    float v = 0.0f;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw FormatError("invalid number '" + std::string(s) + "' for " + std::string(what));
    return v;
}

inline long long parse_int(std::string_view s, std::string_view what) {
    long long v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw FormatError("invalid integer '" + std::string(s) + "' for " + std::string(what));
    return v;
}

// ---------------------------------------------------------------------------
// CSV: plain comma-separated fields, no quoting (none of our fields need it).

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto p = line.find(sep, start);
        if (p == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

/// Parses CSV text and checks the header against `expected` (prefix match
/// when `allow_extra_columns`).
inline CsvTable parse_csv(std::string_view text, const std::vector<std::string>& expected,
                          const std::string& source, bool allow_extra_columns = false) {
    CsvTable t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            for (auto f : fields) t.header.emplace_back(f);
            have_header = true;
            const bool size_ok = allow_extra_columns ? t.header.size() >= expected.size()
                                                     : t.header.size() == expected.size();
            bool names_ok = size_ok;
            for (std::size_t i = 0; names_ok && i < expected.size(); ++i)
                names_ok = t.header[i] == expected[i];
            if (!names_ok) {
                std::string exp;
                for (auto& e : expected) exp += (exp.empty() ? "" : ",") + e;
                throw FormatError(source + ": unexpected CSV header '" + std::string(line) +
                                  "', expected '" + exp + "'");
            }
            continue;
        }
        if (fields.size() != t.header.size())
            throw FormatError(source + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(t.header.size()));
        std::vector<std::string> row;
        row.reserve(fields.size());
        for (auto f : fields) row.emplace_back(f);
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(line_no);
    }
    if (!have_header) throw FormatError(source + ": empty CSV file");
    return t;
}

} // namespace crust_probe::io

#endif // CRUST_PROBE_IO_HPP
