#pragma once

// Line-oriented key/value text used for experiment configs and run manifests.
//
//     # comment            (whole line; '#' or ';' as first non-blank char)
//     key = value          (top-level entries come before any section)
//     [section]
//     [section.child]      (dotted names nest; each section is flat)
//     key = a, b, c        (lists are comma separated)
//
// Keys match [A-Za-z0-9_]+; section names also allow '.' and '-'. A key may
// appear once per section and a section once per document. Values run to the
// end of the line with surrounding blanks trimmed. Output uses LF line endings.

#include <charconv>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fjdc/errors.hpp"

namespace fjdc {

struct KvEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct KvSection {
    std::string name;  // "" for the top level
    std::size_t line = 0;
    std::vector<KvEntry> entries;

    const KvEntry* find(std::string_view key) const {
        for (const auto& e : entries)
            if (e.key == key) return &e;
        return nullptr;
    }
    void set(std::string key, std::string value) { entries.push_back({std::move(key), std::move(value), 0}); }
};

struct KvDocument {
    std::vector<KvSection> sections{KvSection{}};

    const KvSection* find(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
    KvSection& top() { return sections.front(); }
    KvSection& add(std::string name) {
        sections.push_back(KvSection{std::move(name), 0, {}});
        return sections.back();
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && blank(s.front())) s.remove_prefix(1);
    while (!s.empty() && blank(s.back())) s.remove_suffix(1);
    return s;
}

inline bool valid_key(std::string_view k, bool section) {
    if (k.empty()) return false;
    for (char c : k) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        (section && (c == '.' || c == '-'));
        if (!ok) return false;
    }
    return true;
}

}  // namespace detail

inline KvDocument parse_kv(std::string_view text) {
    KvDocument doc;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "", "unterminated section header");
            const auto name = detail::trim(line.substr(1, line.size() - 2));
            if (!detail::valid_key(name, true)) throw ConfigError(line_no, std::string(name), "invalid section name");
            if (doc.find(name)) throw ConfigError(line_no, std::string(name), "duplicate section");
            doc.add(std::string(name)).line = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "", "expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (!detail::valid_key(key, false)) throw ConfigError(line_no, std::string(key), "invalid key");
        auto& sec = doc.sections.back();
        if (sec.find(key)) throw ConfigError(line_no, std::string(key), "duplicate key");
        sec.entries.push_back({std::string(key), std::string(value), line_no});
    }
    return doc;
}

inline std::string to_kv_text(const KvDocument& doc) {
    std::string out;
    for (const auto& sec : doc.sections) {
        if (!sec.name.empty()) {
            if (!out.empty()) out += '\n';
            out += "[" + sec.name + "]\n";
        }
        for (const auto& e : sec.entries) out += e.key + " = " + e.value + "\n";
    }
    return out;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += format_double(xs[i]);
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = detail::trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
    s = detail::trim(s);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (detail::trim(s).empty()) return out;
    while (true) {
        const auto c = s.find(',');
        out.push_back(detail::trim(s.substr(0, c)));
        if (c == std::string_view::npos) break;
        s = s.substr(c + 1);
    }
    return out;
}

}  // namespace fjdc
