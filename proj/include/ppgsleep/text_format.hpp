#pragma once

// Shared plumbing for the delimited-text formats: UTF-8, LF line endings,
// ',' delimiter, leading "# key=value" metadata lines, then a one-line
// column header, then data rows.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ppgsleep::text {

// Shortest representation that parses back to the identical double.
std::string format_double(double v);
void append_double(std::string& out, double v);

std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<std::int64_t> parse_int(std::string_view s) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string_view> split(std::string_view s, char delim);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull) noexcept;
std::string hex64(std::uint64_t v);

struct Row {
    std::size_t line;  // 1-based line number in the file
    std::vector<std::string_view> fields;
};

/// Parsed view over a file's contents. The string_views point into the
/// buffer passed to parse(), which must outlive the result.
struct Table {
    std::map<std::string, std::string, std::less<>> meta;
    std::vector<std::string_view> columns;
    std::size_t header_line = 0;
    std::vector<Row> rows;

    const std::string* find(std::string_view key) const;
    // Throws ParseError (prefixed with `what`) if the key is missing.
    const std::string& require(std::string_view key, std::string_view what) const;
};

using RowVisitor = std::function<void(std::size_t line, const std::vector<std::string_view>& fields)>;

// Streams rows to a visitor instead of storing them; `rows` stays empty.
// Throws ParseError on a missing column header or, when expected_columns is
// set, on a header with different columns. Rows whose field count differs
// from the header are rejected with their line number.
Table scan_table(std::string_view content, std::string_view what,
                 const std::optional<std::vector<std::string_view>>& expected_columns, const RowVisitor& visit);

Table parse_table(std::string_view content, std::string_view what,
                  const std::optional<std::vector<std::string_view>>& expected_columns = std::nullopt);

}  // namespace ppgsleep::text
