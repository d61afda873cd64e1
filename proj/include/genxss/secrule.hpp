// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genxss/normalizer.hpp"
#include "genxss/regex.hpp"

namespace genxss {

enum class rule_variable { args, args_names, query_string, request_uri, request_headers };

enum class operator_kind { rx, contains, pm, begins_with, ends_with };

enum class disruptive_action { deny, pass };

std::string_view to_string(rule_variable v) noexcept;
std::string_view to_string(operator_kind k) noexcept;

struct rule_operator {
    operator_kind kind{operator_kind::rx};
    std::string argument;
    bool negated{false};

    // Derived from `argument` at parse time.
    std::shared_ptr<const rx::regex> regex;
    std::vector<std::string> phrases; // @pm, lowercased

    bool operator==(const rule_operator &o) const
    {
        return kind == o.kind && argument == o.argument && negated == o.negated;
    }
};

/// Builds an operator and its compiled form. Throws parse_error.
rule_operator make_operator(operator_kind kind, std::string argument, bool negated = false);

/// One `SecRule VARIABLES "OPERATOR"` test with its own transformations.
struct rule_condition {
    std::vector<rule_variable> variables;
    rule_operator op;
    std::vector<transformation> transformations;

    bool operator==(const rule_condition &) const = default;
};

/// A chain starter plus its chained members. Only the starter carries id,
/// phase and the disruptive action; the rule matches iff every condition
/// matches.
struct secrule {
    std::uint32_t id{0};
    int phase{2};
    disruptive_action action{disruptive_action::pass};
    std::optional<int> status;
    std::string msg;
    std::string severity;
    std::vector<std::string> extra_actions; // non-semantic actions (tag, log, ...) kept for output
    std::vector<rule_condition> conditions;
    std::size_t line{0};

    [[nodiscard]] bool chained() const noexcept { return conditions.size() > 1; }
    [[nodiscard]] int effective_status() const noexcept { return status.value_or(403); }

    bool operator==(const secrule &o) const
    {
        return id == o.id && phase == o.phase && action == o.action && status == o.status &&
               msg == o.msg && severity == o.severity && extra_actions == o.extra_actions &&
               conditions == o.conditions;
    }
};

struct ruleset {
    std::vector<secrule> rules;

    [[nodiscard]] std::size_t size() const noexcept { return rules.size(); }
    [[nodiscard]] bool empty() const noexcept { return rules.empty(); }

    bool operator==(const ruleset &) const = default;
};

/// Parses the supported SecRule subset. `#` comments, blank lines and
/// backslash continuations are handled; other directives are rejected.
/// Throws parse_error carrying the 1-based line of the offending rule.
ruleset parse_ruleset(std::string_view text);

/// Canonical text form; parse_ruleset(serialize(r)) == r.
std::string serialize(const secrule &rule);
std::string serialize(const ruleset &rules);

struct lint_warning {
    std::uint32_t rule_id{0};
    std::string code; // duplicate_id, empty_pattern, catastrophic_backtracking, deny_without_status
    std::string message;

    bool operator==(const lint_warning &) const = default;
};

std::vector<lint_warning> lint_ruleset(const ruleset &rules);
std::string to_string(const lint_warning &w);

} // namespace genxss
