#include "impakt/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "impakt/errors.hpp"

namespace impakt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    cfg.raw_ = text;
    std::stringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not `key = value`: " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
        if (cfg.kv_.count(key))
            throw ConfigError("duplicate config key: " + key);
        cfg.kv_[key] = value;
    }
    return cfg;
}

const std::string* Config::find(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    touched_.insert(key);
    return &it->second;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(*v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: " + *v);
    }
    if (pos != v->size()) throw ConfigError("config key " + key + " is not a number: " + *v);
    return out;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::size_t pos = 0;
    unsigned long long out;
    try {
        out = std::stoull(*v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a nonnegative integer: " + *v);
    }
    if (pos != v->size() || v->find('-') != std::string::npos)
        throw ConfigError("config key " + key + " is not a nonnegative integer: " + *v);
    return static_cast<std::size_t>(out);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config key " + key + " is not a boolean: " + *v);
}

std::string Config::require_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ConfigError("missing required config key: " + key);
    return *v;
}

double Config::require_double(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required config key: " + key);
    return get_double(key, 0.0);
}

std::size_t Config::require_size(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required config key: " + key);
    return get_size(key, 0);
}

std::vector<std::string> Config::untouched_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
        if (!touched_.count(k)) out.push_back(k);
    return out;
}

void Config::expect_all_consumed() const {
    const std::vector<std::string> left = untouched_keys();
    if (left.empty()) return;
    std::string msg = "unrecognized config key(s):";
    for (const std::string& k : left) msg += " " + k;
    throw ConfigError(msg);
}

}  // namespace impakt
