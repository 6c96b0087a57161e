#include "mlab/config.hpp"

#include "mlab/core.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mlab {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    }
    return v;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source)
{
    Config cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::string where = source + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(where + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(where + ": empty key");
        }
        if (!section.empty()) {
            key = section + "." + key;
        }
        if (cfg.entries_.count(key)) {
            throw ConfigError(where + ": duplicate key '" + key + "'");
        }
        cfg.entries_[key] = value;
    }
    return cfg;
}

Config Config::from_string(const std::string& text)
{
    std::istringstream in(text);
    return parse(in, "<string>");
}

Config Config::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse(in, path);
}

bool Config::has(const std::string& key) const
{
    return entries_.count(key) != 0;
}

void Config::set(const std::string& key, const std::string& value)
{
    entries_[key] = value;
}

std::string Config::get_string(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError("missing required key '" + key + "'");
    }
    used_.insert(key);
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const
{
    return to_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const
{
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const
{
    const double v = get_double(key);
    if (v != static_cast<double>(static_cast<long>(v))) {
        throw ConfigError("key '" + key + "': expected an integer");
    }
    return static_cast<long>(v);
}

long Config::get_int(const std::string& key, long fallback) const
{
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const
{
    if (!has(key)) {
        return fallback;
    }
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_list(const std::string& key) const
{
    const std::string v = get_string(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(to_double(key, item));
    }
    if (out.empty()) {
        throw ConfigError("key '" + key + "': empty list");
    }
    return out;
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const
{
    return has(key) ? get_list(key) : fallback;
}

std::vector<std::string> Config::unused_keys() const
{
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        if (!used_.count(k)) {
            out.push_back(k);
        }
    }
    return out;
}

}  // namespace mlab
