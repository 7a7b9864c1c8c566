#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conscope::csv {

using Row = std::vector<std::string>;

/// Reads an RFC 4180 style file (quoted fields, "" escapes, LF or CRLF).
/// Blank trailing lines are dropped. Throws LoadError when the file is
/// missing or a quote is left open.
std::vector<Row> read_file(const std::filesystem::path& path);

std::string escape_field(std::string_view field);
std::string join_row(const Row& row);

/// Decimal text with 17 significant digits; round-trips every finite double.
std::string format_real(double value);

/// Parses a full field as a double. "nan"/"inf" are accepted so that
/// validation, not parsing, reports non-finite data.
std::optional<double> parse_real(std::string_view text);

}  // namespace conscope::csv
