#include "vslam/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vslam {

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view s, std::string_view what,
                            const char* kind) {
  std::ostringstream os;
  os << what << ": expected " << kind << ", got '" << s << "'";
  throw ConfigError(os.str());
}

}  // namespace

double parse_double(std::string_view s, std::string_view what) {
  const std::string tok(trim(s));
  if (tok.empty()) bad_value(s, what, "a number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    bad_value(s, what, "a number");
  return v;
}

std::int64_t parse_int(std::string_view s, std::string_view what) {
  const std::string tok(trim(s));
  if (tok.empty()) bad_value(s, what, "an integer");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    bad_value(s, what, "an integer");
  return v;
}

std::uint64_t parse_uint64(std::string_view s, std::string_view what) {
  const std::string tok(trim(s));
  if (tok.empty() || tok[0] == '-') bad_value(s, what, "a non-negative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    bad_value(s, what, "a non-negative integer");
  return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
  std::string tok(trim(s));
  std::transform(tok.begin(), tok.end(), tok.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (tok == "on" || tok == "true" || tok == "1") return true;
  if (tok == "off" || tok == "false" || tok == "0") return false;
  bad_value(s, what, "on/off");
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(
        start, pos == std::string_view::npos ? std::string_view::npos
                                             : pos - start));
    out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view s, char sep,
                                      std::string_view what) {
  std::vector<double> out;
  for (const auto& piece : split(s, sep)) out.push_back(parse_double(piece, what));
  return out;
}

Vec3d parse_vec3(std::string_view s, std::string_view what) {
  std::istringstream is{std::string(trim(s))};
  double x, y, z;
  std::string rest;
  if (!(is >> x >> y >> z) || (is >> rest))
    bad_value(s, what, "three numbers 'x y z'");
  return {x, y, z};
}

KeyValueFile KeyValueFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

KeyValueFile KeyValueFile::parse_string(std::string_view text,
                                        std::string origin) {
  KeyValueFile kv;
  kv.origin_ = std::move(origin);
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(
        start, nl == std::string_view::npos ? text.size() - start : nl - start);
    ++line_no;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      std::ostringstream os;
      os << kv.origin_ << ":" << line_no << ": expected 'key = value'";
      throw ConfigError(os.str());
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      std::ostringstream os;
      os << kv.origin_ << ":" << line_no << ": empty key";
      throw ConfigError(os.str());
    }
    if (kv.has(key)) {
      std::ostringstream os;
      os << kv.origin_ << ":" << line_no << ": duplicate key '" << key << "'";
      throw ConfigError(os.str());
    }
    kv.entries_.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

bool KeyValueFile::has(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

const std::string& KeyValueFile::raw(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw ConfigError(origin_ + ": missing key '" + std::string(key) + "'");
}

double KeyValueFile::get_double(std::string_view key) const {
  return parse_double(raw(key), key);
}

std::int64_t KeyValueFile::get_int(std::string_view key) const {
  return parse_int(raw(key), key);
}

std::uint64_t KeyValueFile::get_uint64(std::string_view key) const {
  return parse_uint64(raw(key), key);
}

bool KeyValueFile::get_bool(std::string_view key) const {
  return parse_bool(raw(key), key);
}

const std::string& KeyValueFile::get_string(std::string_view key) const {
  return raw(key);
}

double KeyValueFile::get_double_or(std::string_view key,
                                   double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KeyValueFile::get_int_or(std::string_view key,
                                      std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KeyValueFile::get_bool_or(std::string_view key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

}  // namespace vslam
