#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mgtd::config {

// Line-oriented `key = value` config. Lines starting with '#' (after leading
// whitespace) and blank lines are skipped. Repeated keys are preserved in
// order, which is how mix specs list their inputs.
class KeyValueFile {
public:
    static KeyValueFile parse_string(const std::string& text, const std::string& origin);
    static KeyValueFile parse_file(const std::string& path);

    const std::string& origin() const { return origin_; }
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;  // last occurrence
    std::vector<std::string> get_all(const std::string& key) const;

    // Typed lookups; throw std::runtime_error naming the key plus origin.
    std::string require(const std::string& key) const;
    std::optional<std::int64_t> get_int(const std::string& key) const;
    std::optional<double> get_double(const std::string& key) const;
    std::optional<std::uint64_t> get_uint(const std::string& key) const;

    // Keys never read through the accessors above; used to report typos.
    std::vector<std::string> unused_keys() const;

private:
    void touch(const std::string& key) const;

    std::string origin_;
    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::vector<std::string> used_;
};

// Splits a value like `path name=src map=a:b,c:d` into the leading positional
// token and key=value attributes. Tokens may be double-quoted to carry spaces.
struct AttrLine {
    std::string positional;
    std::vector<std::pair<std::string, std::string>> attrs;

    std::optional<std::string> attr(const std::string& key) const;
};
AttrLine parse_attr_line(const std::string& value);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

}  // namespace mgtd::config
