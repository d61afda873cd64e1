// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "genxss/normalizer.hpp"
#include "genxss/payload.hpp"

namespace genxss {

enum class injection_context { js_string_dq, js_string_sq, html_attribute, html_body, url_param };

std::string_view to_string(injection_context c) noexcept;
std::optional<injection_context> parse_injection_context(std::string_view s) noexcept;

/// Reflected payloads are judged inside a double-quoted JS string, DOM-based
/// payloads against a URL sink.
injection_context default_context(attack_type t) noexcept;

namespace reason {
inline constexpr std::string_view no_context_break = "no_context_break";
inline constexpr std::string_view no_execution_primitive = "no_execution_primitive";
inline constexpr std::string_view mixed_encoding_identifier = "mixed_encoding_identifier";
inline constexpr std::string_view unbalanced_syntax = "unbalanced_syntax";
} // namespace reason

struct validation_verdict {
    validation_status status{validation_status::invalid};
    std::string reason; // empty when valid
    std::string decoded_form;
    decode_trace trace;

    [[nodiscard]] bool valid() const noexcept { return status == validation_status::valid; }
    [[nodiscard]] validation_state to_state() const
    {
        return valid() ? validation_state::valid() : validation_state::invalid(reason);
    }
};

/// Static syntactic check standing in for browser execution. A payload is
/// valid when, after full decoding, it contains an execution primitive,
/// breaks out of `context`, uses only `\u` escapes in identifier position,
/// and leaves parentheses balanced. Checks run in that order and the first
/// failure names the reason.
validation_verdict analyze_payload(std::string_view raw, injection_context context);

/// The raw value after URL decoding only, iterated to a fixpoint. This is the
/// text a JavaScript parser sees for a URL-delivered payload.
std::string url_surface(std::string_view raw);

} // namespace genxss
