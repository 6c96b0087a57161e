#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mlab {

// Flat key/value configuration. One `key = value` per line, `#` starts a
// comment, and a `[section]` line prefixes the following keys with
// `section.`. Malformed input raises ConfigError with the line number.
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<input>");
    static Config from_string(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }
    // Keys present in the file that no getter has asked for.
    std::vector<std::string> unused_keys() const;

private:
    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> used_;
};

}  // namespace mlab
