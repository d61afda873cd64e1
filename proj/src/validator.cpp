// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/validator.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "genxss/regex.hpp"

namespace genxss {

namespace {

constexpr std::array<std::pair<injection_context, std::string_view>, 5> context_names{{
    {injection_context::js_string_dq, "js_string_dq"},
    {injection_context::js_string_sq, "js_string_sq"},
    {injection_context::html_attribute, "html_attribute"},
    {injection_context::html_body, "html_body"},
    {injection_context::url_param, "url_param"},
}};

constexpr std::size_t surface_max_passes = 8;

bool is_ident_char(char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '$';
}

bool is_hex(char c) noexcept
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_ws(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length of an identifier escape at `i` (\uXXXX, \u{...}, \xHH), or 0.
std::size_t escape_length(std::string_view s, std::size_t i, bool &is_x)
{
    if (i + 1 >= s.size() || s[i] != '\\') {
        return 0;
    }
    if (s[i + 1] == 'x') {
        if (i + 4 <= s.size() && is_hex(s[i + 2]) && is_hex(s[i + 3])) {
            is_x = true;
            return 4;
        }
        return 0;
    }
    if (s[i + 1] != 'u') {
        return 0;
    }
    is_x = false;
    if (i + 2 < s.size() && s[i + 2] == '{') {
        std::size_t j = i + 3;
        while (j < s.size() && is_hex(s[j])) {
            ++j;
        }
        if (j > i + 3 && j < s.size() && s[j] == '}') {
            return j + 1 - i;
        }
        return 0;
    }
    if (i + 6 <= s.size() && is_hex(s[i + 2]) && is_hex(s[i + 3]) && is_hex(s[i + 4]) &&
        is_hex(s[i + 5])) {
        return 6;
    }
    return 0;
}

// Skips a string literal or comment starting at `i`; returns the index after
// it, or `i` when none starts there.
std::size_t skip_literal(std::string_view s, std::size_t i)
{
    const char c = s[i];
    if (c == '"' || c == '\'' || c == '`') {
        std::size_t j = i + 1;
        while (j < s.size() && s[j] != c) {
            j += s[j] == '\\' ? 2 : 1;
        }
        return std::min(j + 1, s.size());
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
        const auto end = s.find("*/", i + 2);
        return end == std::string_view::npos ? s.size() : end + 2;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
        const auto end = s.find('\n', i + 2);
        return end == std::string_view::npos ? s.size() : end;
    }
    return i;
}

bool is_js_string(injection_context c) noexcept
{
    return c == injection_context::js_string_dq || c == injection_context::js_string_sq;
}

char context_quote(injection_context c) noexcept
{
    return c == injection_context::js_string_sq ? '\'' : '"';
}

bool preceded_by_escape(std::string_view s, std::size_t i)
{
    std::size_t n = 0;
    while (i > n && s[i - n - 1] == '\\') {
        ++n;
    }
    return n % 2 == 1;
}

// Index just past the quote that closes the surrounding JS string, if any.
std::optional<std::size_t> js_string_exit(std::string_view s, char quote)
{
    static constexpr std::string_view continuations = ";,+-*/%&|^?:)}]<>=!";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != quote || preceded_by_escape(s, i)) {
            continue;
        }
        std::size_t j = i + 1;
        while (j < s.size() && is_ws(s[j])) {
            ++j;
        }
        if (j < s.size() && continuations.find(s[j]) != std::string_view::npos) {
            return i + 1;
        }
    }
    return std::nullopt;
}

bool has_tag_open(std::string_view s)
{
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const char n = s[i + 1];
        if (s[i] == '<' && ((n >= 'a' && n <= 'z') || (n >= 'A' && n <= 'Z'))) {
            return true;
        }
    }
    return false;
}

bool breaks_context(std::string_view decoded, injection_context ctx)
{
    const std::string lower = lowercase(decoded);
    switch (ctx) {
    case injection_context::js_string_dq:
    case injection_context::js_string_sq:
        return js_string_exit(decoded, context_quote(ctx)).has_value() ||
               lower.find("</script") != std::string::npos;
    case injection_context::html_attribute:
        for (std::size_t i = 0; i < decoded.size(); ++i) {
            if (decoded[i] == '"' && !preceded_by_escape(decoded, i)) {
                return true;
            }
        }
        return false;
    case injection_context::html_body:
        return has_tag_open(decoded);
    case injection_context::url_param: {
        // The value lands in <a href="...">: a javascript: scheme executes
        // as-is; otherwise it must leave the attribute or open a tag.
        std::string compact;
        for (char c : lower) {
            if (static_cast<unsigned char>(c) > 0x20) {
                compact += c;
            }
        }
        return compact.starts_with("javascript:") || decoded.find('"') != std::string_view::npos ||
               has_tag_open(decoded);
    }
    }
    return false;
}

bool has_execution_primitive(std::string_view decoded)
{
    static const auto call = rx::regex::compile(R"([A-Za-z_$][A-Za-z0-9_$]*\s*[(`])");
    static const auto handler = rx::regex::compile(R"((?i)(?:^|[^a-z0-9_])on[a-z]+\s*=)");
    static const auto script = rx::regex::compile(R"((?i)<script)");

    const std::string code = remove_comments(decoded);
    if (call.matches(code) || handler.matches(decoded) || script.matches(decoded)) {
        return true;
    }
    return remove_whitespace(lowercase(decoded)).find("javascript:") != std::string::npos;
}

// Where executable code starts: after the quote that leaves a JS string, or
// at the beginning for markup contexts.
std::size_t code_start(std::string_view s, injection_context ctx)
{
    if (!is_js_string(ctx)) {
        return 0;
    }
    const auto q = s.find(context_quote(ctx));
    return q == std::string_view::npos ? s.size() : q + 1;
}

bool has_hex_escape_in_identifier(std::string_view surface, injection_context ctx)
{
    std::size_t i = code_start(surface, ctx);
    while (i < surface.size()) {
        if (const auto next = skip_literal(surface, i); next != i) {
            i = next;
            continue;
        }
        bool is_x = false;
        if (!is_ident_char(surface[i]) && escape_length(surface, i, is_x) == 0) {
            ++i;
            continue;
        }
        bool saw_x = false;
        while (i < surface.size()) {
            if (is_ident_char(surface[i])) {
                ++i;
                continue;
            }
            const auto len = escape_length(surface, i, is_x);
            if (len == 0) {
                break;
            }
            saw_x = saw_x || is_x;
            i += len;
        }
        if (saw_x) {
            return true;
        }
    }
    return false;
}

bool parentheses_balanced(std::string_view decoded, injection_context ctx)
{
    std::size_t i = 0;
    if (is_js_string(ctx)) {
        const auto exit = js_string_exit(decoded, context_quote(ctx));
        i = exit.value_or(code_start(decoded, ctx));
    }
    long depth = 0;
    while (i < decoded.size()) {
        if (const auto next = skip_literal(decoded, i); next != i) {
            i = next;
            continue;
        }
        if (decoded[i] == '(') {
            ++depth;
        } else if (decoded[i] == ')' && --depth < 0) {
            return false;
        }
        ++i;
    }
    return depth == 0;
}

} // namespace

std::string_view to_string(injection_context c) noexcept
{
    for (const auto &[k, name] : context_names) {
        if (k == c) {
            return name;
        }
    }
    return "";
}

std::optional<injection_context> parse_injection_context(std::string_view s) noexcept
{
    for (const auto &[k, name] : context_names) {
        if (name == s) {
            return k;
        }
    }
    return std::nullopt;
}

injection_context default_context(attack_type t) noexcept
{
    return t == attack_type::dom_based ? injection_context::url_param : injection_context::js_string_dq;
}

std::string url_surface(std::string_view raw)
{
    std::string s(raw);
    for (std::size_t pass = 0; pass < surface_max_passes; ++pass) {
        auto next = url_decode_uni(s);
        if (next == s) {
            break;
        }
        s = std::move(next);
    }
    return s;
}

validation_verdict analyze_payload(std::string_view raw, injection_context context)
{
    auto full = full_decode(raw);
    validation_verdict v;
    v.decoded_form = std::move(full.value);
    v.trace = std::move(full.trace);

    const std::string surface = url_surface(raw);
    if (!has_execution_primitive(v.decoded_form)) {
        v.reason = reason::no_execution_primitive;
    } else if (!breaks_context(v.decoded_form, context)) {
        v.reason = reason::no_context_break;
    } else if (has_hex_escape_in_identifier(surface, context)) {
        v.reason = reason::mixed_encoding_identifier;
    } else if (!parentheses_balanced(v.decoded_form, context)) {
        v.reason = reason::unbalanced_syntax;
    } else {
        v.status = validation_status::valid;
    }
    return v;
}

} // namespace genxss
