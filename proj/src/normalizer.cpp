// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/normalizer.hpp"

#include <array>
#include <utility>

namespace genxss {

namespace {

constexpr std::array<std::pair<transformation, std::string_view>, 9> names{{
    {transformation::url_decode, "urlDecode"},
    {transformation::url_decode_uni, "urlDecodeUni"},
    {transformation::js_decode, "jsDecode"},
    {transformation::html_entity_decode, "htmlEntityDecode"},
    {transformation::lowercase, "lowercase"},
    {transformation::remove_comments, "removeComments"},
    {transformation::remove_whitespace, "removeWhitespace"},
    {transformation::compress_whitespace, "compressWhitespace"},
    {transformation::none, "none"},
}};

int hex_value(char c) noexcept
{
    if (c >= '0' && c <= '9') {
        return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
    }
    if (c >= 'A' && c <= 'F') {
        return c - 'A' + 10;
    }
    return -1;
}

// Parses exactly `n` hex digits at `pos`.
std::optional<char32_t> parse_hex(std::string_view s, std::size_t pos, std::size_t n)
{
    if (pos + n > s.size()) {
        return std::nullopt;
    }
    char32_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int h = hex_value(s[pos + i]);
        if (h < 0) {
            return std::nullopt;
        }
        v = (v << 4) | static_cast<char32_t>(h);
    }
    return v;
}

bool is_space(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string percent_decode(std::string_view s, bool unicode)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out += s[i];
            continue;
        }
        if (unicode && i + 1 < s.size() && (s[i + 1] == 'u' || s[i + 1] == 'U')) {
            if (auto cp = parse_hex(s, i + 2, 4)) {
                append_utf8(out, *cp);
                i += 5;
                continue;
            }
        }
        if (auto byte = parse_hex(s, i + 1, 2)) {
            out += static_cast<char>(*byte);
            i += 2;
            continue;
        }
        out += '%';
    }
    return out;
}

constexpr std::array<std::pair<std::string_view, char32_t>, 33> named_entities{{
    {"quot", U'"'},   {"amp", U'&'},     {"lt", U'<'},       {"gt", U'>'},
    {"apos", U'\''},  {"nbsp", 0xA0},    {"lpar", U'('},     {"rpar", U')'},
    {"colon", U':'},  {"semi", U';'},    {"sol", U'/'},      {"bsol", U'\\'},
    {"comma", U','},  {"period", U'.'},  {"excl", U'!'},     {"quest", U'?'},
    {"equals", U'='}, {"lsqb", U'['},    {"rsqb", U']'},     {"lbrace", U'{'},
    {"rbrace", U'}'}, {"lowbar", U'_'},  {"grave", U'`'},    {"Tab", U'\t'},
    {"NewLine", U'\n'}, {"num", U'#'},   {"percnt", U'%'},   {"plus", U'+'},
    {"dollar", U'$'}, {"ast", U'*'},     {"verbar", U'|'},   {"Hat", U'^'},
    {"hyphen", U'-'},
}};

bool valid_code_point(char32_t cp) noexcept
{
    return cp != 0 && cp <= 0x10FFFF && (cp < 0xD800 || cp > 0xDFFF);
}

} // namespace

std::string_view to_string(transformation t) noexcept
{
    for (const auto &[kind, name] : names) {
        if (kind == t) {
            return name;
        }
    }
    return "";
}

std::optional<transformation> parse_transformation(std::string_view name) noexcept
{
    for (const auto &[kind, n] : names) {
        if (n == name) {
            return kind;
        }
    }
    return std::nullopt;
}

void append_utf8(std::string &out, char32_t cp)
{
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        cp = 0xFFFD;
    }
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string url_decode(std::string_view s) { return percent_decode(s, false); }

std::string url_decode_uni(std::string_view s) { return percent_decode(s, true); }

std::string js_decode(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 >= s.size()) {
            out += '\\';
            break;
        }
        const char next = s[i + 1];
        if (next == 'u') {
            if (i + 2 < s.size() && s[i + 2] == '{') {
                const auto close = s.find('}', i + 3);
                const auto len = close == std::string_view::npos ? 0 : close - (i + 3);
                if (len >= 1 && len <= 6) {
                    if (auto cp = parse_hex(s, i + 3, len); cp && *cp <= 0x10FFFF) {
                        append_utf8(out, *cp);
                        i = close;
                        continue;
                    }
                }
            } else if (auto cp = parse_hex(s, i + 2, 4)) {
                // Pair a high surrogate with a following \uDCxx escape.
                if (*cp >= 0xD800 && *cp <= 0xDBFF && i + 7 < s.size() &&
                    s.substr(i + 6, 2) == "\\u") {
                    if (auto lo = parse_hex(s, i + 8, 4); lo && *lo >= 0xDC00 && *lo <= 0xDFFF) {
                        append_utf8(out, 0x10000 + ((*cp - 0xD800) << 10) + (*lo - 0xDC00));
                        i += 11;
                        continue;
                    }
                }
                append_utf8(out, *cp);
                i += 5;
                continue;
            }
            out += "\\u";
            ++i;
            continue;
        }
        if (next == 'x') {
            if (auto cp = parse_hex(s, i + 2, 2)) {
                append_utf8(out, *cp);
                i += 3;
                continue;
            }
            out += "\\x";
            ++i;
            continue;
        }
        switch (next) {
        case 'n':
            out += '\n';
            break;
        case 'r':
            out += '\r';
            break;
        case 't':
            out += '\t';
            break;
        case 'f':
            out += '\f';
            break;
        case 'v':
            out += '\v';
            break;
        case 'b':
            out += '\b';
            break;
        default:
            out += next;
            break;
        }
        ++i;
    }
    return out;
}

std::string html_entity_decode(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&' || i + 1 >= s.size()) {
            out += s[i];
            continue;
        }
        if (s[i + 1] == '#') {
            // Numeric reference; the terminating ';' is optional.
            std::size_t j = i + 2;
            const bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
            if (hex) {
                ++j;
            }
            const std::size_t digits_start = j;
            char32_t cp = 0;
            bool overflow = false;
            while (j < s.size()) {
                const int d = hex ? hex_value(s[j]) : (s[j] >= '0' && s[j] <= '9' ? s[j] - '0' : -1);
                if (d < 0) {
                    break;
                }
                cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(d);
                if (cp > 0x10FFFF) {
                    overflow = true;
                }
                ++j;
            }
            if (j == digits_start || overflow || !valid_code_point(cp)) {
                out += s[i];
                continue;
            }
            append_utf8(out, cp);
            if (j < s.size() && s[j] == ';') {
                ++j;
            }
            i = j - 1;
            continue;
        }
        const auto semi = s.find(';', i + 1);
        if (semi != std::string_view::npos && semi - i <= 8) {
            const auto name = s.substr(i + 1, semi - i - 1);
            bool matched = false;
            for (const auto &[entity, cp] : named_entities) {
                if (entity == name) {
                    append_utf8(out, cp);
                    i = semi;
                    matched = true;
                    break;
                }
            }
            if (matched) {
                continue;
            }
        }
        out += s[i];
    }
    return out;
}

std::string lowercase(std::string_view s)
{
    std::string out(s);
    for (auto &c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::string remove_comments(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '*') {
            const auto end = s.find("*/", i + 2);
            if (end == std::string_view::npos) {
                break;
            }
            i = end + 2;
        } else if (s[i] == '/' && i + 1 < s.size() && s[i + 1] == '/') {
            const auto nl = s.find('\n', i + 2);
            if (nl == std::string_view::npos) {
                break;
            }
            i = nl;
        } else {
            out += s[i++];
        }
    }
    return out;
}

std::string remove_whitespace(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (!is_space(c)) {
            out += c;
        }
    }
    return out;
}

std::string compress_whitespace(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : s) {
        if (is_space(c)) {
            if (!in_space) {
                out += ' ';
            }
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    return out;
}

std::string apply(transformation t, std::string_view s)
{
    switch (t) {
    case transformation::url_decode:
        return url_decode(s);
    case transformation::url_decode_uni:
        return url_decode_uni(s);
    case transformation::js_decode:
        return js_decode(s);
    case transformation::html_entity_decode:
        return html_entity_decode(s);
    case transformation::lowercase:
        return lowercase(s);
    case transformation::remove_comments:
        return remove_comments(s);
    case transformation::remove_whitespace:
        return remove_whitespace(s);
    case transformation::compress_whitespace:
        return compress_whitespace(s);
    case transformation::none:
        break;
    }
    return std::string(s);
}

decoded apply_chain(std::string_view s, std::span<const transformation> chain)
{
    decoded result{std::string(s), {}};
    for (auto t : chain) {
        result.value = apply(t, result.value);
        result.trace.steps.push_back({t, result.value, 0});
    }
    return result;
}

std::string decode_layer(std::string_view s)
{
    return html_entity_decode(js_decode(url_decode_uni(s)));
}

decoded full_decode(std::string_view s, std::size_t max_layers)
{
    if (max_layers == 0) {
        max_layers = 1;
    }
    decoded result{std::string(s), {}};
    for (std::size_t layer = 1; layer <= max_layers; ++layer) {
        const std::string before = result.value;
        for (auto t : {transformation::url_decode_uni, transformation::js_decode,
                 transformation::html_entity_decode}) {
            result.value = apply(t, result.value);
            result.trace.steps.push_back({t, result.value, layer});
        }
        result.trace.layers = layer;
        if (result.value == before) {
            return result;
        }
    }
    result.trace.truncated = true;
    return result;
}

} // namespace genxss
