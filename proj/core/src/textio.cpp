#include "charsoft/textio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "charsoft/error.hpp"

namespace charsoft {

std::string format_double(double v, FloatFormat format) {
  if (!std::isfinite(v)) throw NumericError("cannot serialize non-finite value");
  char buf[64];
  if (format == FloatFormat::kDecimal) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
  }
  const bool negative = std::signbit(v);
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::fabs(v), std::chars_format::hex);
  std::string out = negative ? "-0x" : "0x";
  out.append(buf, end);
  return out;
}

bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  bool negative = false;
  std::string_view body = token;
  if (body.front() == '-') {
    negative = true;
    body.remove_prefix(1);
  }
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    body.remove_prefix(2);
    if (body.empty() || body.front() == '-' || body.front() == '+') return false;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v,
                                     std::chars_format::hex);
    if (ec != std::errc{} || ptr != body.data() + body.size()) return false;
    out = negative ? -v : v;
    return true;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return false;
  out = v;
  return true;
}

std::string format_scalar(double v) { return format_double(v, FloatFormat::kDecimal); }

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim_right(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n' || s.back() == '\v' || s.back() == '\f')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw PreconditionError("short write to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw PreconditionError("cannot move output into place at " + path.string() + ": " +
                            ec.message());
  }
}

const std::string* Header::find(std::string_view key) const {
  auto it = fields.find(key);
  return it == fields.end() ? nullptr : &it->second;
}

const std::string& Header::require(std::string_view key) const {
  if (const auto* v = find(key)) return *v;
  throw SchemaError(magic + " header: missing field '" + std::string(key) + "'");
}

Header parse_header(std::string_view line, std::string_view magic, std::string_view version) {
  Header h;
  std::size_t i = 0;
  bool first = true;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    std::size_t j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    std::string_view tok = line.substr(i, j - i);
    i = j;
    if (first) {
      h.magic = tok;
      first = false;
    } else if (h.version.empty()) {
      h.version = tok;
    } else if (auto eq = tok.find('='); eq != std::string_view::npos) {
      std::string key(tok.substr(0, eq));
      if (h.fields.count(key) != 0) {
        throw SchemaError(std::string(magic) + " header: duplicate field '" + key + "'");
      }
      h.fields.emplace(std::move(key), std::string(tok.substr(eq + 1)));
    } else {
      h.flags.emplace_back(tok);
    }
  }
  if (h.magic != magic) {
    throw SchemaError("expected a " + std::string(magic) + " header, found '" +
                      std::string(line.substr(0, 40)) + "'");
  }
  if (h.version != version) {
    throw SchemaError(std::string(magic) + " header: unsupported version '" + h.version + "'");
  }
  return h;
}

}  // namespace charsoft
