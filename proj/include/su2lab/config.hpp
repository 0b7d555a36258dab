#pragma once

// Text configuration: an ordered key/value store parsed from UTF-8 lines of
// the form "section.key = value" (with "#" comments), plus command-line
// overrides that win over file entries.  Typed accessors validate ranges
// and enumerated choices so that a bad value is reported against its key.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace su2lab {

/// A config line that does not scan as "key = value".
struct ParseError : std::runtime_error {
    int line;
    explicit ParseError(const std::string& what, int line_number)
        : std::runtime_error(what), line(line_number) {}
};

/// A provided key outside the active command's vocabulary.
struct UnknownKey : std::runtime_error {
    std::string key;
    explicit UnknownKey(const std::string& name)
        : std::runtime_error("unknown key: " + name), key(name) {}
};

/// A value that does not convert, or violates its key's range.
struct BadValue : std::runtime_error {
    std::string key;
    explicit BadValue(const std::string& name, const std::string& why)
        : std::runtime_error("bad value for " + name + ": " + why), key(name) {}
};

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[nodiscard]] inline bool valid_key(std::string_view key) {
    if (key.empty() || key.find('.') == std::string_view::npos) return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    });
}

}  // namespace detail

/// Insertion-ordered key/value store; setting an existing key replaces its
/// value in place, so the echo order is the first-mention order.
class ConfigMap {
  public:
    void set(std::string key, std::string value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        entries_.emplace_back(std::move(key), std::move(value));
    }

    [[nodiscard]] bool has(std::string_view key) const {
        return find(key) != nullptr;
    }

    [[nodiscard]] const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return &v;
        return nullptr;
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    [[nodiscard]] std::string get_string(std::string_view key, std::string def) const {
        const std::string* v = find(key);
        return v ? *v : std::move(def);
    }

    /// The value must be one of the listed choices.
    [[nodiscard]] std::string get_choice(std::string_view key, std::string def,
                                         std::initializer_list<std::string_view> choices) const {
        const std::string got = get_string(key, std::move(def));
        for (std::string_view c : choices)
            if (got == c) return got;
        throw BadValue(std::string(key), "'" + got + "' is not an allowed choice");
    }

    [[nodiscard]] long long get_int(std::string_view key, long long def,
                                    long long lo = std::numeric_limits<long long>::min(),
                                    long long hi = std::numeric_limits<long long>::max()) const {
        const std::string* v = find(key);
        long long out = def;
        if (v) {
            const char* first = v->data();
            const char* last = v->data() + v->size();
            const auto [ptr, ec] = std::from_chars(first, last, out);
            if (ec != std::errc{} || ptr != last)
                throw BadValue(std::string(key), "'" + *v + "' is not an integer");
        }
        if (out < lo || out > hi)
            throw BadValue(std::string(key),
                           std::to_string(out) + " outside [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
        return out;
    }

    [[nodiscard]] double get_double(std::string_view key, double def,
                                    double lo = -std::numeric_limits<double>::infinity(),
                                    double hi = std::numeric_limits<double>::infinity()) const {
        const std::string* v = find(key);
        double out = def;
        if (v) {
            char* end = nullptr;
            out = std::strtod(v->c_str(), &end);
            if (end != v->c_str() + v->size() || v->empty())
                throw BadValue(std::string(key), "'" + *v + "' is not a number");
        }
        if (!(out >= lo) || !(out <= hi))
            throw BadValue(std::string(key), "value outside its allowed range");
        return out;
    }

    /// Rejects any provided key outside the allowed vocabulary.
    void restrict_to(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [k, v] : entries_) {
            bool ok = false;
            for (std::string_view a : allowed) ok = ok || (k == a);
            if (!ok) throw UnknownKey(k);
        }
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Parses "section.key = value" lines into the map; "#" starts a comment,
/// blank lines are skipped, later lines win over earlier ones.
inline void parse_config(std::istream& in, ConfigMap& into) {
    std::string raw;
    int line_number = 0;
    while (std::getline(in, raw)) {
        ++line_number;
        std::string_view line{raw};
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("missing '=' on line " + std::to_string(line_number), line_number);
        const std::string_view key = detail::trim(line.substr(0, eq));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (!detail::valid_key(key))
            throw ParseError("bad key '" + std::string(key) + "' on line " +
                                 std::to_string(line_number),
                             line_number);
        if (value.empty())
            throw ParseError("empty value on line " + std::to_string(line_number), line_number);
        into.set(std::string(key), std::string(value));
    }
}

/// Parses a config file; a missing file is a parse error at line 0.
[[nodiscard]] inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path, 0);
    ConfigMap out;
    parse_config(in, out);
    return out;
}

/// Applies one "key=value" override (later overrides win).
inline void apply_override(ConfigMap& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ParseError("override must look like key=value: " + std::string(assignment), 0);
    const std::string_view key = detail::trim(assignment.substr(0, eq));
    const std::string_view value = detail::trim(assignment.substr(eq + 1));
    if (!detail::valid_key(key))
        throw ParseError("bad override key: " + std::string(key), 0);
    if (value.empty()) throw ParseError("empty override value", 0);
    cfg.set(std::string(key), std::string(value));
}

}  // namespace su2lab
