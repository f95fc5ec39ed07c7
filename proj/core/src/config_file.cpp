#include "mgtd/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mgtd::config {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

KeyValueFile KeyValueFile::parse_string(const std::string& text, const std::string& origin) {
    KeyValueFile f;
    f.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected `key = value`");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        f.entries_.emplace_back(std::move(key), std::move(value));
    }
    return f;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

void KeyValueFile::touch(const std::string& key) const {
    if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        used_.push_back(key);
    }
}

bool KeyValueFile::has(const std::string& key) const {
    touch(key);
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == key; });
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    touch(key);
    std::optional<std::string> out;
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            out = v;
        }
    }
    return out;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& key) const {
    touch(key);
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            out.push_back(v);
        }
    }
    return out;
}

std::string KeyValueFile::require(const std::string& key) const {
    auto v = get(key);
    if (!v) {
        throw std::runtime_error(origin_ + ": missing required key `" + key + "`");
    }
    return *v;
}

std::optional<std::int64_t> KeyValueFile::get_int(const std::string& key) const {
    auto v = get(key);
    if (!v) {
        return std::nullopt;
    }
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size()) {
        throw std::runtime_error(origin_ + ": key `" + key + "` is not an integer: " + *v);
    }
    return out;
}

std::optional<std::uint64_t> KeyValueFile::get_uint(const std::string& key) const {
    auto v = get(key);
    if (!v) {
        return std::nullopt;
    }
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size()) {
        throw std::runtime_error(origin_ + ": key `" + key +
                                 "` is not a non-negative integer: " + *v);
    }
    return out;
}

std::optional<double> KeyValueFile::get_double(const std::string& key) const {
    auto v = get(key);
    if (!v) {
        return std::nullopt;
    }
    try {
        std::size_t pos = 0;
        double d = std::stod(*v, &pos);
        if (pos != v->size()) {
            throw std::invalid_argument(*v);
        }
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error(origin_ + ": key `" + key + "` is not a number: " + *v);
    }
}

std::vector<std::string> KeyValueFile::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        if (std::find(used_.begin(), used_.end(), k) == used_.end() &&
            std::find(out.begin(), out.end(), k) == out.end()) {
            out.push_back(k);
        }
    }
    return out;
}

AttrLine parse_attr_line(const std::string& value) {
    AttrLine out;
    std::vector<std::string> tokens;
    std::string cur;
    bool quoted = false;
    for (char c : value) {
        if (quoted) {
            if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        tokens.push_back(cur);
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto eq = tokens[i].find('=');
        if (i == 0 && eq == std::string::npos) {
            out.positional = tokens[i];
        } else if (eq == std::string::npos) {
            throw std::runtime_error("expected key=value attribute, got: " + tokens[i]);
        } else {
            out.attrs.emplace_back(tokens[i].substr(0, eq), tokens[i].substr(eq + 1));
        }
    }
    return out;
}

std::optional<std::string> AttrLine::attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

}  // namespace mgtd::config
