#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sst::io {

// Flat key=value settings. Lines starting with '#' and blank lines are
// ignored; keys may not repeat within one file. Which keys are legal is
// decided by the consumer, not here.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "config");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  // Later values win.
  void merge(const Config& other);

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Strict scalar parsing; the whole string must be consumed.
long long parse_int(const std::string& key, const std::string& text);
double parse_double(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);
// Comma-separated, whitespace trimmed, empty string -> empty list.
std::vector<std::string> parse_list(const std::string& text);

}  // namespace sst::io
