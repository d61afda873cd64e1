// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace genxss {

/// Value transformations shared by the payload validator and the SecRule
/// engine. Every transformation is total: undecodable input passes through.
enum class transformation {
    url_decode,
    url_decode_uni,
    js_decode,
    html_entity_decode,
    lowercase,
    remove_comments,
    remove_whitespace,
    compress_whitespace,
    none,
};

/// ModSecurity spelling, e.g. "urlDecodeUni".
std::string_view to_string(transformation t) noexcept;
std::optional<transformation> parse_transformation(std::string_view name) noexcept;

std::string url_decode(std::string_view s);
std::string url_decode_uni(std::string_view s);
std::string js_decode(std::string_view s);
std::string html_entity_decode(std::string_view s);
std::string lowercase(std::string_view s);
std::string remove_comments(std::string_view s);
std::string remove_whitespace(std::string_view s);
std::string compress_whitespace(std::string_view s);

std::string apply(transformation t, std::string_view s);

/// Appends `cp` as UTF-8. Surrogates and out-of-range values become U+FFFD.
void append_utf8(std::string &out, char32_t cp);

struct decode_step {
    transformation kind;
    std::string output;
    std::size_t layer{0};

    bool operator==(const decode_step &) const = default;
};

struct decode_trace {
    std::vector<decode_step> steps;
    std::size_t layers{0};   // full_decode passes executed
    bool truncated{false};   // max_layers hit before a fixpoint

    bool operator==(const decode_trace &) const = default;
};

struct decoded {
    std::string value;
    decode_trace trace;
};

/// Applies `chain` left to right, recording every intermediate.
decoded apply_chain(std::string_view s, std::span<const transformation> chain);

/// One decode layer: urlDecodeUni, then jsDecode, then htmlEntityDecode.
std::string decode_layer(std::string_view s);

/// Repeats decode_layer until the value stops changing or `max_layers`
/// passes ran. Requires max_layers >= 1.
decoded full_decode(std::string_view s, std::size_t max_layers = 5);

} // namespace genxss
