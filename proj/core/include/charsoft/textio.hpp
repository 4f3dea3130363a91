#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace charsoft {

enum class FloatFormat {
  kHex,      // exact, canonical
  kDecimal,  // shortest round-trip decimal; for debugging only
};

/// Formats a finite double. Hex output looks like `0x1.8p+0` / `-0x1p-3`.
std::string format_double(double v, FloatFormat format = FloatFormat::kHex);

/// Parses either hex (`[-]0x...p...`) or decimal notation. The whole token
/// must be consumed. Returns false on malformed input.
bool parse_double(std::string_view token, double& out);

/// Shortest round-trip decimal, used for header scalars such as T.
std::string format_scalar(double v);

/// Splits on a single separator, keeping empty fields.
std::vector<std::string_view> split(std::string_view s, char sep);

std::string_view trim_right(std::string_view s);

/// Reads a text file into lines (LF; a trailing CR is stripped).
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// A `MAGIC v1 key=value ...` header line.
struct Header {
  std::string magic;
  std::string version;
  std::vector<std::string> flags;  // bare tokens without '='
  std::map<std::string, std::string, std::less<>> fields;

  const std::string* find(std::string_view key) const;
  const std::string& require(std::string_view key) const;
};

/// Throws SchemaError if the magic or version differ.
Header parse_header(std::string_view line, std::string_view magic, std::string_view version);

}  // namespace charsoft
