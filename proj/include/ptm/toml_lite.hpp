#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptm {

// Minimal TOML subset: [section] and [a.b] headers, key = value pairs,
// # comments. Values: "strings", integers, floats, booleans, and one-line
// arrays of those. Keys are flattened to "section.key".
class TomlLite {
public:
    struct ParseError : std::runtime_error {
        std::size_t line;
        ParseError(std::size_t l, const std::string& msg)
            : std::runtime_error("config line " + std::to_string(l) + ": " + msg), line(l) {}
    };

    static TomlLite parse_file(const std::string& path);        // throws on io/parse error
    static TomlLite parse_string(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_string_array(const std::string& key) const;  // empty when absent
    std::vector<std::int64_t> get_int_array(const std::string& key) const;

    std::string require_string(const std::string& key) const;

    // all keys, sorted (for config echo)
    const std::map<std::string, std::string>& raw() const { return values_; }

private:
    // values kept as raw token text; arrays stored element-per-entry under key.N
    std::map<std::string, std::string> values_;
    std::map<std::string, std::size_t> array_sizes_;

    const std::string* find(const std::string& key) const;
};

}  // namespace ptm
