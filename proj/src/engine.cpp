// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/engine.hpp"

#include <algorithm>

namespace genxss {

namespace {

struct target_value {
    std::string name;
    std::string value;
};

struct request_targets {
    std::vector<target_value> query_args;
    std::vector<target_value> body_args;
    std::string query_string;
    std::string uri;
    std::vector<target_value> headers;

    explicit request_targets(const http_request &req)
        : query_string(req.query_string()), uri(req.uri())
    {
        for (const auto &[name, value] : req.query) {
            query_args.push_back({decode_form_component(name), decode_form_component(value)});
        }
        if (req.method == http_method::post) {
            for (const auto &[name, value] : split_query(req.body)) {
                body_args.push_back({decode_form_component(name), decode_form_component(value)});
            }
        }
        for (const auto &[name, value] : req.headers) {
            headers.push_back({name, value});
        }
    }

    // Phase 1 sees the request line and headers; phase 2 adds the body.
    std::vector<target_value> expand(rule_variable v, int phase) const
    {
        std::vector<target_value> out;
        auto add_args = [&](bool names) {
            auto push = [&](const std::vector<target_value> &src) {
                for (const auto &a : src) {
                    out.push_back(names ? target_value{a.name, a.name} : a);
                }
            };
            push(query_args);
            if (phase >= 2) {
                push(body_args);
            }
        };
        switch (v) {
        case rule_variable::args:
            add_args(false);
            break;
        case rule_variable::args_names:
            add_args(true);
            break;
        case rule_variable::query_string:
            out.push_back({"", query_string});
            break;
        case rule_variable::request_uri:
            out.push_back({"", uri});
            break;
        case rule_variable::request_headers:
            out = headers;
            break;
        }
        return out;
    }
};

std::optional<match_evidence> match_condition(const rule_condition &cond,
    const request_targets &targets, int phase)
{
    for (auto var : cond.variables) {
        for (const auto &t : targets.expand(var, phase)) {
            auto transformed = apply_chain(t.value, cond.transformations).value;
            auto span = apply_operator(cond.op, transformed);
            if (span.has_value() != cond.op.negated) {
                match_evidence ev;
                ev.variable = var;
                ev.target = t.name;
                ev.transformed = std::move(transformed);
                ev.span = span;
                return ev;
            }
        }
    }
    return std::nullopt;
}

} // namespace

http_request http_request::get(std::string_view target)
{
    http_request req;
    const auto q = target.find('?');
    req.path = std::string(target.substr(0, q));
    if (req.path.empty()) {
        req.path = "/";
    }
    if (q != std::string_view::npos) {
        req.query = split_query(target.substr(q + 1));
    }
    return req;
}

std::string http_request::query_string() const
{
    std::string out;
    for (std::size_t i = 0; i < query.size(); ++i) {
        if (i > 0) {
            out += '&';
        }
        out += query[i].first;
        out += '=';
        out += query[i].second;
    }
    return out;
}

std::string http_request::uri() const
{
    if (query.empty()) {
        return path;
    }
    return path + "?" + query_string();
}

std::vector<std::pair<std::string, std::string>> split_query(std::string_view query)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t start = 0;
    while (start < query.size()) {
        auto end = query.find('&', start);
        if (end == std::string_view::npos) {
            end = query.size();
        }
        const auto part = query.substr(start, end - start);
        if (!part.empty()) {
            const auto eq = part.find('=');
            if (eq == std::string_view::npos) {
                out.emplace_back(std::string(part), std::string());
            } else {
                out.emplace_back(std::string(part.substr(0, eq)), std::string(part.substr(eq + 1)));
            }
        }
        start = end + 1;
    }
    return out;
}

std::string decode_form_component(std::string_view s)
{
    std::string plus(s);
    std::replace(plus.begin(), plus.end(), '+', ' ');
    return url_decode(plus);
}

std::optional<rx::match_span> apply_operator(const rule_operator &op, std::string_view value)
{
    switch (op.kind) {
    case operator_kind::rx:
        return op.regex ? op.regex->search(value) : std::nullopt;
    case operator_kind::contains: {
        const auto pos = value.find(op.argument);
        if (pos == std::string_view::npos) {
            return std::nullopt;
        }
        return rx::match_span{pos, pos + op.argument.size()};
    }
    case operator_kind::pm: {
        const auto lower = lowercase(value);
        std::optional<rx::match_span> best;
        for (const auto &phrase : op.phrases) {
            const auto pos = lower.find(phrase);
            if (pos != std::string::npos && (!best || pos < best->begin)) {
                best = rx::match_span{pos, pos + phrase.size()};
            }
        }
        return best;
    }
    case operator_kind::begins_with:
        if (value.starts_with(op.argument)) {
            return rx::match_span{0, op.argument.size()};
        }
        return std::nullopt;
    case operator_kind::ends_with:
        if (value.ends_with(op.argument)) {
            return rx::match_span{value.size() - op.argument.size(), value.size()};
        }
        return std::nullopt;
    }
    return std::nullopt;
}

match_result evaluate(const http_request &req, const ruleset &rules)
{
    const request_targets targets(req);
    match_result result;
    for (const auto &rule : rules.rules) {
        std::vector<match_evidence> evidence;
        bool matched = true;
        for (const auto &cond : rule.conditions) {
            auto ev = match_condition(cond, targets, rule.phase);
            if (!ev) {
                matched = false;
                break;
            }
            ev->rule_id = rule.id;
            evidence.push_back(std::move(*ev));
        }
        if (!matched) {
            continue;
        }
        result.matched_rule_ids.push_back(rule.id);
        if (rule.action == disruptive_action::deny) {
            result.blocking_rule_ids.push_back(rule.id);
            result.disposition = disposition::blocked;
        }
        std::move(evidence.begin(), evidence.end(), std::back_inserter(result.evidence));
    }
    return result;
}

} // namespace genxss
