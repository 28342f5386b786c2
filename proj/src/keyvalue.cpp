#include "sptrack/keyvalue.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sptrack/errors.hpp"

namespace sptrack {

std::string located(const std::string& source, int line, int column, const std::string& msg) {
  return source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg;
}

namespace {

bool key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string_view trim(std::string_view s, size_t* lead = nullptr) {
  size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  size_t e = s.size();
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (lead) *lead = b;
  return s.substr(b, e - b);
}

std::vector<std::pair<std::string, int>> split_list(const KvEntry& e) {
  std::vector<std::pair<std::string, int>> out;
  size_t start = 0;
  const std::string& v = e.value;
  while (start <= v.size()) {
    size_t comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    size_t lead = 0;
    std::string_view item = trim(std::string_view(v).substr(start, comma - start), &lead);
    out.emplace_back(std::string(item), e.column + static_cast<int>(start + lead));
    start = comma + 1;
  }
  return out;
}

}  // namespace

const KvEntry* KvSection::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

void KvSection::fail(const KvEntry& e, const std::string& msg) const {
  throw ConfigError(located(source, e.line, e.column, "[" + name + "] " + e.key + ": " + msg));
}

void KvSection::fail(const std::string& msg) const {
  throw ConfigError(located(source, line, 1, "[" + name + "] " + msg));
}

std::string KvSection::get_string(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail("missing required key '" + std::string(key) + "'");
  return e->value;
}

std::string KvSection::get_string(std::string_view key, const std::string& fallback) const {
  const KvEntry* e = find(key);
  return e ? e->value : fallback;
}

namespace {

double to_double(const KvSection& s, const KvEntry& e, const std::string& text, int column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw ConfigError(located(s.source, e.line, column, "[" + s.name + "] " + e.key + ": expected a number, got '" + text + "'"));
  return v;
}

long to_long(const KvSection& s, const KvEntry& e, const std::string& text, int column) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw ConfigError(located(s.source, e.line, column, "[" + s.name + "] " + e.key + ": expected an integer, got '" + text + "'"));
  return v;
}

}  // namespace

double KvSection::get_double(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail("missing required key '" + std::string(key) + "'");
  return to_double(*this, *e, e->value, e->column);
}

double KvSection::get_double(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KvSection::get_int(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail("missing required key '" + std::string(key) + "'");
  return to_long(*this, *e, e->value, e->column);
}

long KvSection::get_int(std::string_view key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KvSection::get_bool(std::string_view key, bool fallback) const {
  const KvEntry* e = find(key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(*e, "expected a boolean, got '" + e->value + "'");
}

std::vector<double> KvSection::get_doubles(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail("missing required key '" + std::string(key) + "'");
  std::vector<double> out;
  for (const auto& [item, col] : split_list(*e)) out.push_back(to_double(*this, *e, item, col));
  return out;
}

std::vector<long> KvSection::get_ints(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail("missing required key '" + std::string(key) + "'");
  std::vector<long> out;
  for (const auto& [item, col] : split_list(*e)) out.push_back(to_long(*this, *e, item, col));
  return out;
}

std::vector<std::string> KvSection::get_strings(std::string_view key) const {
  const KvEntry* e = find(key);
  if (!e) fail("missing required key '" + std::string(key) + "'");
  std::vector<std::string> out;
  for (const auto& [item, col] : split_list(*e)) {
    if (item.empty()) throw ConfigError(located(source, e->line, col, "[" + name + "] " + e->key + ": empty list item"));
    out.push_back(item);
  }
  return out;
}

void KvSection::require_known(const std::vector<std::string_view>& allowed) const {
  for (const auto& e : entries)
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
      throw ConfigError(located(source, e.line, 1, "[" + name + "] unknown key '" + e.key + "'"));
}

const KvSection* KvDocument::find(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<const KvSection*> KvDocument::all(std::string_view name) const {
  std::vector<const KvSection*> out;
  for (const auto& s : sections)
    if (s.name == name) out.push_back(&s);
  return out;
}

void KvDocument::require_known(const std::vector<std::string_view>& allowed) const {
  for (const auto& s : sections)
    if (std::find(allowed.begin(), allowed.end(), s.name) == allowed.end())
      throw ConfigError(located(source, s.line, 1, "unknown section [" + s.name + "]"));
}

KvDocument parse_keyvalue(std::string_view text, const std::string& source) {
  KvDocument doc;
  doc.source = source;
  int lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    // Strip comments: whole-line, or '#'/';' preceded by whitespace.
    for (size_t i = 0; i < raw.size(); ++i) {
      if ((raw[i] == '#' || raw[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(raw[i - 1])))) {
        raw = raw.substr(0, i);
        break;
      }
    }
    size_t lead = 0;
    std::string_view line = trim(raw, &lead);
    if (line.empty()) continue;
    const int col0 = static_cast<int>(lead) + 1;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(located(source, lineno, col0 + static_cast<int>(line.size()), "expected ']'"));
      std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(located(source, lineno, col0 + 1, "empty section name"));
      for (size_t i = 0; i < name.size(); ++i) {
        const char c = name[i];
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
          throw ConfigError(located(source, lineno, col0 + 1 + static_cast<int>(i), "invalid character in section name"));
      }
      KvSection s;
      s.name = std::string(name);
      s.line = lineno;
      s.source = source;
      doc.sections.push_back(std::move(s));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(located(source, lineno, col0, "expected 'key = value' or '[section]'"));
    std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(located(source, lineno, col0, "missing key before '='"));
    for (size_t i = 0; i < key.size(); ++i)
      if (!key_char(key[i])) throw ConfigError(located(source, lineno, col0 + static_cast<int>(i), "invalid character in key"));
    size_t vlead = 0;
    std::string_view value = trim(line.substr(eq + 1), &vlead);
    const int vcol = col0 + static_cast<int>(eq + 1 + vlead);
    if (value.empty()) throw ConfigError(located(source, lineno, vcol, "missing value for '" + std::string(key) + "'"));
    if (doc.sections.empty()) throw ConfigError(located(source, lineno, col0, "entry outside of any section"));
    KvSection& sec = doc.sections.back();
    if (sec.find(key)) throw ConfigError(located(source, lineno, col0, "duplicate key '" + std::string(key) + "' in [" + sec.name + "]"));
    sec.entries.push_back(KvEntry{std::string(key), std::string(value), lineno, vcol});
  }
  return doc;
}

KvDocument load_keyvalue(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_keyvalue(ss.str(), path);
}

}  // namespace sptrack
