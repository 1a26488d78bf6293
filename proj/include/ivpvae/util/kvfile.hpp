#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ivpvae/util/io.hpp"

namespace ivpvae::io {

/// Flat `key=value` text: one entry per line, `#` starts a comment line,
/// blank lines are ignored. Entry order is preserved for writing.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, const std::string& origin = "<string>") {
    KeyValueFile kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
      const std::size_t nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      line = trim(line);
      if (line.empty() || line.front() == '#') continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                          std::string(line) + "'");
      }
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      if (kv.contains(key)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      kv.set(key, std::string(trim(line.substr(eq + 1))));
    }
    return kv;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
  }

  void set(const std::string& key, std::string value) {
    auto [it, inserted] = index_.emplace(key, entries_.size());
    if (inserted) entries_.emplace_back(key, std::move(value));
    else entries_[it->second].second = std::move(value);
  }

  bool contains(const std::string& key) const { return index_.contains(key); }

  const std::string& get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw DataError("missing key '" + key + "'");
    return entries_[it->second].second;
  }

  double get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_double(get(key), v)) throw DataError("key '" + key + "' is not a number: '" + get(key) + "'");
    return v;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace ivpvae::io
