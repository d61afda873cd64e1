// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genxss/error.hpp"

namespace genxss::rx {

/// Rejected pattern. `position` is the byte offset of the offending token.
class regex_error : public parse_error {
public:
    regex_error(const std::string &reason, std::size_t position)
        : parse_error(reason + " at offset " + std::to_string(position)), position_(position)
    {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

struct match_span {
    std::size_t begin{0};
    std::size_t end{0};

    bool operator==(const match_span &) const = default;
};

/// Byte-oriented regular expressions restricted to the SecRule dialect:
/// literals, classes, alternation, groups (capturing and `(?:...)`),
/// quantifiers `* + ? {m,n}` (optionally lazy), anchors `^ $`, escapes
/// `\b \B \s \S \d \D \w \W` plus character escapes, and a leading `(?i)`.
/// Backreferences and lookaround are rejected. Matching runs a Pike VM, so
/// search time is O(pattern * subject) with leftmost-first spans.
class regex {
public:
    static constexpr std::uint32_t max_repeat = 1000;

    static regex compile(std::string_view pattern);

    [[nodiscard]] std::optional<match_span> search(std::string_view subject) const;
    [[nodiscard]] bool matches(std::string_view subject) const { return search(subject).has_value(); }

    [[nodiscard]] const std::string &pattern() const noexcept { return pattern_; }
    [[nodiscard]] bool case_insensitive() const noexcept { return icase_; }
    /// An unbounded quantifier applied to a subexpression that itself holds
    /// an unbounded quantifier, e.g. `(a+)+`.
    [[nodiscard]] bool has_nested_unbounded_quantifier() const noexcept { return nested_unbounded_; }

    enum class opcode : std::uint8_t {
        byte,
        set,
        any,
        split,
        jump,
        assert_begin,
        assert_end,
        assert_word,
        assert_not_word,
        match,
    };

    struct instruction {
        opcode op{opcode::match};
        std::uint8_t byte{0};
        std::uint32_t set{0};
        std::uint32_t x{0};
        std::uint32_t y{0};
    };

private:
    std::string pattern_;
    bool icase_{false};
    bool nested_unbounded_{false};
    std::vector<instruction> program_;
    std::vector<std::bitset<256>> sets_;

    friend class compiler;
};

} // namespace genxss::rx
