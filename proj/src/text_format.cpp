#include "ppgsleep/text_format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ppgsleep/error.hpp"

namespace ppgsleep::text {

std::string format_double(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

void append_double(std::string& out, double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

std::optional<double> parse_double(std::string_view s) noexcept {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) noexcept {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string_view trim(std::string_view s) noexcept {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(s.substr(start)));
            return out;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return content;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

const std::string* Table::find(std::string_view key) const {
    const auto it = meta.find(key);
    return it == meta.end() ? nullptr : &it->second;
}

const std::string& Table::require(std::string_view key, std::string_view what) const {
    if (const auto* v = find(key)) return *v;
    throw ParseError(std::string(what) + ": missing '# " + std::string(key) + "=' header", 0);
}

Table scan_table(std::string_view content, std::string_view what,
                 const std::optional<std::vector<std::string_view>>& expected_columns, const RowVisitor& visit) {
    Table t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    std::vector<std::string_view> fields;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string_view::npos) eol = content.size();
        std::string_view line = content.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (!have_header) {
            if (trim(line).empty()) continue;
            if (line.front() == '#') {
                const std::string_view body = trim(line.substr(1));
                const std::size_t eq = body.find('=');
                if (eq != std::string_view::npos)
                    t.meta[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
                continue;
            }
            t.columns = split(line, ',');
            t.header_line = line_no;
            have_header = true;
            if (expected_columns && t.columns != *expected_columns) {
                std::string want;
                for (auto c : *expected_columns) want += (want.empty() ? "" : ",") + std::string(c);
                throw ParseError(std::string(what) + ": malformed column header, expected '" + want + "'", line_no);
            }
            continue;
        }
        if (line.empty()) {
            if (pos >= content.size()) break;  // trailing newline
            throw ParseError(std::string(what) + ": empty row", line_no);
        }
        fields.clear();
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) {
                fields.push_back(trim(line.substr(start)));
                break;
            }
            fields.push_back(trim(line.substr(start, comma - start)));
            start = comma + 1;
        }
        if (fields.size() != t.columns.size())
            throw ParseError(std::string(what) + ": expected " + std::to_string(t.columns.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        visit(line_no, fields);
    }
    if (!have_header) throw ParseError(std::string(what) + ": missing column header", line_no);
    return t;
}

Table parse_table(std::string_view content, std::string_view what,
                  const std::optional<std::vector<std::string_view>>& expected_columns) {
    std::vector<Row> rows;
    Table t = scan_table(content, what, expected_columns,
                         [&](std::size_t line, const std::vector<std::string_view>& f) { rows.push_back({line, f}); });
    t.rows = std::move(rows);
    return t;
}

}  // namespace ppgsleep::text
