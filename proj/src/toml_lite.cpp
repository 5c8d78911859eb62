#include "ptm/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ptm {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (c == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

std::string unquote(const std::string& s, std::size_t line) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"')
        throw TomlLite::ParseError(line, "expected quoted string: " + s);
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c == '\\' && i + 2 < s.size()) {
            char n = s[i + 1];
            if (n == 'n') { out.push_back('\n'); ++i; continue; }
            if (n == 't') { out.push_back('\t'); ++i; continue; }
            if (n == '"') { out.push_back('"'); ++i; continue; }
            if (n == '\\') { out.push_back('\\'); ++i; continue; }
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_array(const std::string& body, std::size_t line) {
    std::vector<std::string> parts;
    std::string cur;
    bool in_str = false;
    for (char c : body) {
        if (c == '"') in_str = !in_str;
        if (c == ',' && !in_str) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    std::string last = trim(cur);
    if (!last.empty()) parts.push_back(last);
    if (in_str) throw TomlLite::ParseError(line, "unterminated string in array");
    return parts;
}

}  // namespace

TomlLite TomlLite::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

TomlLite TomlLite::parse_string(const std::string& text) {
    TomlLite out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(lineno, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ParseError(lineno, "empty section name");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) throw ParseError(lineno, "empty key");
        if (val.empty()) throw ParseError(lineno, "empty value for key " + key);
        std::string full = section.empty() ? key : section + "." + key;

        if (val.front() == '[') {
            if (val.back() != ']') throw ParseError(lineno, "array must close on the same line");
            auto parts = split_array(val.substr(1, val.size() - 2), lineno);
            out.array_sizes_[full] = parts.size();
            for (std::size_t i = 0; i < parts.size(); ++i) {
                std::string v = parts[i];
                if (!v.empty() && v.front() == '"') v = unquote(v, lineno);
                out.values_[full + "." + std::to_string(i)] = v;
            }
        } else if (val.front() == '"') {
            out.values_[full] = unquote(val, lineno);
        } else {
            out.values_[full] = val;
        }
    }
    return out;
}

const std::string* TomlLite::find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

bool TomlLite::has(const std::string& key) const {
    return values_.count(key) > 0 || array_sizes_.count(key) > 0;
}

std::string TomlLite::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

std::string TomlLite::require_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw std::runtime_error("missing required config key: " + key);
    return *v;
}

std::int64_t TomlLite::get_int(const std::string& key, std::int64_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
        throw std::runtime_error("config key " + key + ": not an integer: " + *v);
    return out;
}

double TomlLite::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        double out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw std::runtime_error("config key " + key + ": not a number: " + *v);
    }
}

bool TomlLite::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw std::runtime_error("config key " + key + ": not a boolean: " + *v);
}

std::vector<std::string> TomlLite::get_string_array(const std::string& key) const {
    std::vector<std::string> out;
    auto it = array_sizes_.find(key);
    if (it == array_sizes_.end()) return out;
    for (std::size_t i = 0; i < it->second; ++i) out.push_back(get_string(key + "." + std::to_string(i), ""));
    return out;
}

std::vector<std::int64_t> TomlLite::get_int_array(const std::string& key) const {
    std::vector<std::int64_t> out;
    auto it = array_sizes_.find(key);
    if (it == array_sizes_.end()) return out;
    for (std::size_t i = 0; i < it->second; ++i) out.push_back(get_int(key + "." + std::to_string(i), 0));
    return out;
}

}  // namespace ptm
