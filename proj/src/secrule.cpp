// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/secrule.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

namespace genxss {

namespace {

constexpr std::pair<rule_variable, std::string_view> variable_names[] = {
    {rule_variable::args, "ARGS"},
    {rule_variable::args_names, "ARGS_NAMES"},
    {rule_variable::query_string, "QUERY_STRING"},
    {rule_variable::request_uri, "REQUEST_URI"},
    {rule_variable::request_headers, "REQUEST_HEADERS"},
};

constexpr std::pair<operator_kind, std::string_view> operator_names[] = {
    {operator_kind::rx, "rx"},
    {operator_kind::contains, "contains"},
    {operator_kind::pm, "pm"},
    {operator_kind::begins_with, "beginsWith"},
    {operator_kind::ends_with, "endsWith"},
};

// Accepted, carried through serialization, no effect on evaluation.
const std::set<std::string_view> passive_actions{"log", "nolog", "auditlog", "noauditlog",
    "capture", "tag", "ver", "rev", "logdata", "maturity", "accuracy", "setvar", "multiMatch"};

bool is_blank(char c) noexcept { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_blank(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_blank(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

struct logical_line {
    std::string text;
    std::size_t line;
};

// Joins backslash continuations and drops comments and blank lines.
std::vector<logical_line> logical_lines(std::string_view text)
{
    std::vector<logical_line> out;
    std::string pending;
    std::size_t pending_line = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto raw = text.substr(start, end - start);
        ++line_no;
        start = end + 1;

        auto line = trim(raw);
        if (pending.empty()) {
            if (line.empty() || line.front() == '#') {
                if (end == text.size()) {
                    break;
                }
                continue;
            }
            pending_line = line_no;
        }
        if (!line.empty() && line.back() == '\\') {
            line.remove_suffix(1);
            pending += line;
            pending += ' ';
        } else {
            pending += line;
            out.push_back({std::move(pending), pending_line});
            pending.clear();
        }
        if (end == text.size()) {
            break;
        }
    }
    if (!pending.empty()) {
        out.push_back({std::move(pending), pending_line});
    }
    return out;
}

// Splits a SecRule line into its whitespace-separated, optionally
// double-quoted arguments. Inside quotes `\"` yields a quote and any other
// backslash pair is kept verbatim.
std::vector<std::string> tokenize(std::string_view s, std::size_t line)
{
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_blank(s[i])) {
            ++i;
        }
        if (i >= s.size()) {
            break;
        }
        std::string tok;
        if (s[i] == '"') {
            ++i;
            bool closed = false;
            while (i < s.size()) {
                if (s[i] == '\\' && i + 1 < s.size()) {
                    if (s[i + 1] == '"') {
                        tok += '"';
                    } else {
                        tok += s[i];
                        tok += s[i + 1];
                    }
                    i += 2;
                    continue;
                }
                if (s[i] == '"') {
                    closed = true;
                    ++i;
                    break;
                }
                tok += s[i++];
            }
            if (!closed) {
                throw parse_error("unterminated quoted argument", line);
            }
        } else {
            while (i < s.size() && !is_blank(s[i])) {
                tok += s[i++];
            }
        }
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::vector<rule_variable> parse_variables(std::string_view spec, std::size_t line)
{
    std::vector<rule_variable> vars;
    std::size_t start = 0;
    while (start <= spec.size()) {
        auto end = spec.find('|', start);
        if (end == std::string_view::npos) {
            end = spec.size();
        }
        const auto name = trim(spec.substr(start, end - start));
        auto it = std::find_if(std::begin(variable_names), std::end(variable_names),
            [&](const auto &p) { return p.second == name; });
        if (it == std::end(variable_names)) {
            throw parse_error("unknown variable '" + std::string(name) + "'", line);
        }
        if (std::find(vars.begin(), vars.end(), it->first) == vars.end()) {
            vars.push_back(it->first);
        }
        start = end + 1;
    }
    return vars;
}

rule_operator parse_operator(std::string_view spec, std::size_t line)
{
    bool negated = false;
    if (!spec.empty() && spec.front() == '!') {
        negated = true;
        spec.remove_prefix(1);
    }
    if (spec.empty() || spec.front() != '@') {
        return make_operator(operator_kind::rx, std::string(spec), negated);
    }
    spec.remove_prefix(1);
    auto sp = spec.find_first_of(" \t");
    const auto name = spec.substr(0, sp);
    std::string_view arg;
    if (sp != std::string_view::npos) {
        arg = spec.substr(sp + 1);
        while (!arg.empty() && (arg.front() == ' ' || arg.front() == '\t')) {
            arg.remove_prefix(1);
        }
    }
    auto it = std::find_if(std::begin(operator_names), std::end(operator_names),
        [&](const auto &p) { return p.second == name; });
    if (it == std::end(operator_names)) {
        throw parse_error("unsupported operator '@" + std::string(name) + "'", line);
    }
    try {
        return make_operator(it->first, std::string(arg), negated);
    } catch (const parse_error &e) {
        throw parse_error("bad operator: " + std::string(e.what()), line);
    }
}

struct action {
    std::string name;
    std::string value;
    bool quoted{false};
};

// Splits "a,b:'x,y',c:1" honouring single quotes; `\'` escapes a quote.
std::vector<action> split_actions(std::string_view s, std::size_t line)
{
    std::vector<action> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (is_blank(s[i]) || s[i] == ',')) {
            ++i;
        }
        if (i >= s.size()) {
            break;
        }
        action a;
        while (i < s.size() && s[i] != ':' && s[i] != ',') {
            a.name += s[i++];
        }
        a.name = std::string(trim(a.name));
        if (i < s.size() && s[i] == ':') {
            ++i;
            while (i < s.size() && is_blank(s[i])) {
                ++i;
            }
            if (i < s.size() && s[i] == '\'') {
                a.quoted = true;
                ++i;
                bool closed = false;
                while (i < s.size()) {
                    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == '\'') {
                        a.value += '\'';
                        i += 2;
                        continue;
                    }
                    if (s[i] == '\'') {
                        closed = true;
                        ++i;
                        break;
                    }
                    a.value += s[i++];
                }
                if (!closed) {
                    throw parse_error("unterminated quoted action value", line);
                }
            } else {
                while (i < s.size() && s[i] != ',') {
                    a.value += s[i++];
                }
                a.value = std::string(trim(a.value));
            }
        }
        if (a.name.empty()) {
            throw parse_error("empty action", line);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::optional<long> to_number(std::string_view s)
{
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::string quote_value(std::string_view v)
{
    std::string out = "'";
    for (char c : v) {
        if (c == '\'') {
            out += "\\'";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

std::string escape_dq(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '"') {
            out += "\\\"";
        } else {
            out += c;
        }
    }
    return out;
}

std::string render_condition(const rule_condition &c, const std::vector<std::string> &actions)
{
    std::string out = "SecRule ";
    for (std::size_t i = 0; i < c.variables.size(); ++i) {
        if (i > 0) {
            out += '|';
        }
        out += to_string(c.variables[i]);
    }
    out += " \"";
    std::string op;
    if (c.op.negated) {
        op += '!';
    }
    op += '@';
    op += to_string(c.op.kind);
    op += ' ';
    op += c.op.argument;
    out += escape_dq(op);
    out += "\" \"";
    std::string joined;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (i > 0) {
            joined += ',';
        }
        joined += actions[i];
    }
    out += escape_dq(joined);
    out += '"';
    return out;
}

} // namespace

std::string_view to_string(rule_variable v) noexcept
{
    for (const auto &[k, name] : variable_names) {
        if (k == v) {
            return name;
        }
    }
    return "";
}

std::string_view to_string(operator_kind k) noexcept
{
    for (const auto &[kind, name] : operator_names) {
        if (kind == k) {
            return name;
        }
    }
    return "";
}

rule_operator make_operator(operator_kind kind, std::string argument, bool negated)
{
    rule_operator op;
    op.kind = kind;
    op.argument = std::move(argument);
    op.negated = negated;
    if (kind == operator_kind::rx) {
        op.regex = std::make_shared<const rx::regex>(rx::regex::compile(op.argument));
    } else if (kind == operator_kind::pm) {
        std::size_t i = 0;
        const std::string lower = lowercase(op.argument);
        while (i < lower.size()) {
            while (i < lower.size() && is_blank(lower[i])) {
                ++i;
            }
            std::size_t j = i;
            while (j < lower.size() && !is_blank(lower[j])) {
                ++j;
            }
            if (j > i) {
                op.phrases.push_back(lower.substr(i, j - i));
            }
            i = j;
        }
    }
    return op;
}

ruleset parse_ruleset(std::string_view text)
{
    ruleset out;
    bool expect_chain_member = false;
    std::size_t chain_line = 0;

    for (const auto &ll : logical_lines(text)) {
        const auto tokens = tokenize(ll.text, ll.line);
        if (tokens.empty()) {
            continue;
        }
        if (tokens[0] != "SecRule") {
            throw parse_error("unknown directive '" + tokens[0] + "'", ll.line);
        }
        if (tokens.size() < 3) {
            throw parse_error("SecRule needs variables and an operator", ll.line);
        }
        if (tokens.size() > 4) {
            throw parse_error("too many arguments to SecRule", ll.line);
        }

        rule_condition cond;
        cond.variables = parse_variables(tokens[1], ll.line);
        cond.op = parse_operator(tokens[2], ll.line);

        secrule head;
        bool has_id = false;
        bool has_phase = false;
        bool has_disruptive = false;
        bool chain = false;
        bool has_meta = false;
        const auto actions = tokens.size() == 4 ? split_actions(tokens[3], ll.line) : std::vector<action>{};
        for (const auto &a : actions) {
            if (a.name == "id") {
                auto v = to_number(a.value);
                if (!v || *v <= 0 || *v > 0xFFFFFFFFL) {
                    throw parse_error("bad id '" + a.value + "'", ll.line);
                }
                head.id = static_cast<std::uint32_t>(*v);
                has_id = true;
            } else if (a.name == "phase") {
                if (a.value == "1") {
                    head.phase = 1;
                } else if (a.value == "2" || a.value == "request") {
                    head.phase = 2;
                } else {
                    throw parse_error("unsupported phase '" + a.value + "'", ll.line);
                }
                has_phase = true;
            } else if (a.name == "deny" || a.name == "block" || a.name == "drop") {
                head.action = disruptive_action::deny;
                has_disruptive = true;
            } else if (a.name == "pass") {
                head.action = disruptive_action::pass;
                has_disruptive = true;
            } else if (a.name == "status") {
                auto v = to_number(a.value);
                if (!v || *v < 100 || *v > 599) {
                    throw parse_error("bad status '" + a.value + "'", ll.line);
                }
                head.status = static_cast<int>(*v);
                has_meta = true;
            } else if (a.name == "msg") {
                head.msg = a.value;
                has_meta = true;
            } else if (a.name == "severity") {
                head.severity = a.value;
                has_meta = true;
            } else if (a.name == "t") {
                if (a.value == "none") {
                    cond.transformations.clear();
                    continue;
                }
                auto t = parse_transformation(a.value);
                if (!t) {
                    throw parse_error("unknown transformation 't:" + a.value + "'", ll.line);
                }
                cond.transformations.push_back(*t);
            } else if (a.name == "chain") {
                chain = true;
            } else if (passive_actions.count(a.name) != 0) {
                std::string kept = a.name;
                if (!a.value.empty() || a.quoted) {
                    kept += ':';
                    kept += a.quoted ? quote_value(a.value) : a.value;
                }
                head.extra_actions.push_back(std::move(kept));
            } else {
                throw parse_error("unknown action '" + a.name + "'", ll.line);
            }
        }

        if (expect_chain_member) {
            if (has_id || has_phase || has_disruptive || has_meta || !head.extra_actions.empty()) {
                throw parse_error("broken chain: chained rule may only carry t: and chain actions",
                    ll.line);
            }
            out.rules.back().conditions.push_back(std::move(cond));
        } else {
            if (!has_id) {
                throw parse_error("missing id", ll.line);
            }
            head.line = ll.line;
            head.conditions.push_back(std::move(cond));
            out.rules.push_back(std::move(head));
        }
        expect_chain_member = chain;
        if (chain) {
            chain_line = ll.line;
        }
    }
    if (expect_chain_member) {
        throw parse_error("broken chain: 'chain' on the last rule", chain_line);
    }
    return out;
}

std::string serialize(const secrule &rule)
{
    std::string out;
    for (std::size_t ci = 0; ci < rule.conditions.size(); ++ci) {
        const auto &cond = rule.conditions[ci];
        std::vector<std::string> actions;
        if (ci == 0) {
            actions.push_back("id:" + std::to_string(rule.id));
            actions.push_back("phase:" + std::to_string(rule.phase));
            actions.emplace_back(rule.action == disruptive_action::deny ? "deny" : "pass");
            if (rule.status) {
                actions.push_back("status:" + std::to_string(*rule.status));
            }
        }
        for (auto t : cond.transformations) {
            actions.push_back("t:" + std::string(to_string(t)));
        }
        if (ci == 0) {
            if (!rule.msg.empty()) {
                actions.push_back("msg:" + quote_value(rule.msg));
            }
            if (!rule.severity.empty()) {
                actions.push_back("severity:" + quote_value(rule.severity));
            }
            actions.insert(actions.end(), rule.extra_actions.begin(), rule.extra_actions.end());
        }
        if (ci + 1 < rule.conditions.size()) {
            actions.emplace_back("chain");
        }
        if (actions.empty()) {
            actions.emplace_back("t:none");
        }
        if (ci > 0) {
            out += "    ";
        }
        out += render_condition(cond, actions);
        out += '\n';
    }
    return out;
}

std::string serialize(const ruleset &rules)
{
    std::string out;
    for (const auto &r : rules.rules) {
        out += serialize(r);
    }
    return out;
}

std::vector<lint_warning> lint_ruleset(const ruleset &rules)
{
    std::vector<lint_warning> out;
    std::map<std::uint32_t, std::size_t> seen;
    for (const auto &r : rules.rules) {
        if (++seen[r.id] == 2) {
            out.push_back({r.id, "duplicate_id",
                "rule id " + std::to_string(r.id) + " is used more than once"});
        }
        for (const auto &c : r.conditions) {
            if (c.op.argument.empty() || (c.op.kind == operator_kind::pm && c.op.phrases.empty())) {
                out.push_back({r.id, "empty_pattern",
                    "rule " + std::to_string(r.id) + " has an empty @" +
                        std::string(to_string(c.op.kind)) + " pattern"});
            }
            if (c.op.regex && c.op.regex->has_nested_unbounded_quantifier()) {
                out.push_back({r.id, "catastrophic_backtracking",
                    "rule " + std::to_string(r.id) +
                        " nests unbounded quantifiers (catastrophic backtracking on PCRE)"});
            }
        }
        if (r.action == disruptive_action::deny && !r.status) {
            out.push_back({r.id, "deny_without_status",
                "rule " + std::to_string(r.id) + " denies without an explicit status"});
        }
    }
    return out;
}

std::string to_string(const lint_warning &w)
{
    return "[" + w.code + "] " + w.message;
}

} // namespace genxss
