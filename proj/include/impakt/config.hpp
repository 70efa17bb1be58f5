#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace impakt {

// Flat `key = value` experiment files: one pair per line, `#` starts a
// full-line comment, keys use dotted prefixes (model.*, grid.*, ...).
// Duplicate keys are an error. Reads are tracked so a run can reject keys it
// never consumed (typo protection).
class Config {
  public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::string require_string(const std::string& key) const;
    double require_double(const std::string& key) const;
    std::size_t require_size(const std::string& key) const;

    // Keys present in the file that no getter has touched yet.
    std::vector<std::string> untouched_keys() const;
    void expect_all_consumed() const;  // throws ConfigError listing leftovers

    const std::string& raw_text() const { return raw_; }

  private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> touched_;
    std::string raw_;

    const std::string* find(const std::string& key) const;
};

}  // namespace impakt
