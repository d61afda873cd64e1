// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genxss/regex.hpp"
#include "genxss/secrule.hpp"

namespace genxss {

enum class http_method { get, post };

/// Request as seen by the rule engine. Query names and values are stored
/// URL-encoded exactly as sent; names may repeat.
struct http_request {
    http_method method{http_method::get};
    std::string path{"/"};
    std::vector<std::pair<std::string, std::string>> query;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body; // application/x-www-form-urlencoded for POST

    /// Builds a GET request from "path?query", splitting the query on '&'.
    static http_request get(std::string_view target);

    [[nodiscard]] std::string query_string() const;
    [[nodiscard]] std::string uri() const;
};

/// Splits `a=1&b=2` into raw (still encoded) name/value pairs.
std::vector<std::pair<std::string, std::string>> split_query(std::string_view query);

/// Form decoding used for ARGS: '+' becomes a space, then one URL-decode pass.
std::string decode_form_component(std::string_view s);

enum class disposition { blocked, passed };

struct match_evidence {
    std::uint32_t rule_id{0};
    rule_variable variable{rule_variable::args};
    std::string target;      // argument or header name, empty for scalars
    std::string transformed; // value after the rule's transformations
    std::optional<rx::match_span> span;

    bool operator==(const match_evidence &) const = default;
};

struct match_result {
    genxss::disposition disposition{disposition::passed};
    std::vector<std::uint32_t> matched_rule_ids; // every matching rule, file order
    std::vector<std::uint32_t> blocking_rule_ids; // matching deny rules, file order
    std::vector<match_evidence> evidence;

    [[nodiscard]] bool blocked() const noexcept { return disposition == disposition::blocked; }
};

/// Evaluates every rule in file order. A rule matches iff each of its
/// conditions matches some target; any matching deny rule blocks.
match_result evaluate(const http_request &req, const ruleset &rules);

/// Decides one operator against one already-transformed value.
std::optional<rx::match_span> apply_operator(const rule_operator &op, std::string_view value);

} // namespace genxss
