#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sptrack {

// Sectioned key-value text shared by experiment and topology files:
//
//   # comment            (also ';'; trailing comments need whitespace before '#')
//   [section]            name: letters, digits, '_' or '-'; may repeat
//   key = value          key: letters, digits, '_', '-', '.'
//
// Keys must be unique inside one section instance. Entries before the first
// header are rejected. Every error reports "source:line:column: message".

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
  int column = 0;  // column of the first value character
};

class KvSection {
 public:
  std::string name;
  int line = 0;
  std::vector<KvEntry> entries;
  std::string source;

  const KvEntry* find(std::string_view key) const;
  bool has(std::string_view key) const { return find(key) != nullptr; }

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  long get_int(std::string_view key) const;
  long get_int(std::string_view key, long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<long> get_ints(std::string_view key) const;
  std::vector<std::string> get_strings(std::string_view key) const;

  /// Throws for keys not in `allowed`.
  void require_known(const std::vector<std::string_view>& allowed) const;

  [[noreturn]] void fail(const KvEntry& e, const std::string& msg) const;
  [[noreturn]] void fail(const std::string& msg) const;
};

class KvDocument {
 public:
  std::string source;
  std::vector<KvSection> sections;

  /// First section with this name, or nullptr.
  const KvSection* find(std::string_view name) const;
  std::vector<const KvSection*> all(std::string_view name) const;
  /// Throws for section names not in `allowed`.
  void require_known(const std::vector<std::string_view>& allowed) const;
};

KvDocument parse_keyvalue(std::string_view text, const std::string& source = "<input>");
KvDocument load_keyvalue(const std::string& path);

/// "source:line:column: msg"
std::string located(const std::string& source, int line, int column, const std::string& msg);

}  // namespace sptrack
