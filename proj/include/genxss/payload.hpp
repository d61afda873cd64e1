// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genxss/error.hpp"

namespace genxss {

enum class attack_type { reflected, dom_based };

enum class source_kind { manual, llm_generated };

struct payload_source {
    source_kind kind{source_kind::manual};
    std::string provider;
    std::string prompt_id;

    static payload_source manual() { return {}; }
    static payload_source llm(std::string provider, std::string prompt_id)
    {
        return {source_kind::llm_generated, std::move(provider), std::move(prompt_id)};
    }

    bool operator==(const payload_source &) const = default;
};

enum class validation_status { unchecked, valid, invalid };

struct validation_state {
    validation_status status{validation_status::unchecked};
    // Machine-readable reason code, only set for invalid.
    std::string reason;

    static validation_state unchecked() { return {}; }
    static validation_state valid() { return {validation_status::valid, {}}; }
    static validation_state invalid(std::string reason)
    {
        return {validation_status::invalid, std::move(reason)};
    }

    bool operator==(const validation_state &) const = default;
};

// indeterminate: a remote target answered with neither a blocking status nor
// a reflecting 2xx, or the request failed.
enum class waf_status { untested, blocked, bypassed, indeterminate };

struct waf_outcome {
    waf_status status{waf_status::untested};
    std::vector<std::uint32_t> rule_ids; // blocked only
    std::string reason;                  // indeterminate only

    static waf_outcome untested() { return {}; }
    static waf_outcome bypassed() { return {waf_status::bypassed, {}, {}}; }
    static waf_outcome blocked(std::vector<std::uint32_t> ids)
    {
        return {waf_status::blocked, std::move(ids), {}};
    }
    static waf_outcome indeterminate(std::string reason)
    {
        return {waf_status::indeterminate, {}, std::move(reason)};
    }

    bool operator==(const waf_outcome &) const = default;
};

/// One attack (or benign) query value. `raw` is the exact URL-encoded form
/// that is submitted. Benign samples carry no attack type.
struct payload {
    std::string id;
    std::string raw;
    std::optional<genxss::attack_type> type;
    payload_source source;
    validation_state validation;
    waf_outcome outcome;

    [[nodiscard]] bool is_benign() const noexcept { return !type.has_value(); }

    bool operator==(const payload &) const = default;
};

/// Throws invariant_error when the payload breaks a model invariant.
void check_payload(const payload &p);

std::string_view to_string(attack_type t) noexcept;
std::optional<attack_type> parse_attack_type(std::string_view s) noexcept;
std::string_view to_string(waf_status s) noexcept;

/// Payloads kept sorted by id with unique ids.
class corpus {
public:
    corpus() = default;
    explicit corpus(std::vector<payload> payloads);

    /// Inserts in id order. Throws invariant_error on duplicate id.
    void add(payload p);

    [[nodiscard]] const std::vector<payload> &payloads() const noexcept { return payloads_; }
    [[nodiscard]] std::size_t size() const noexcept { return payloads_.size(); }
    [[nodiscard]] bool empty() const noexcept { return payloads_.empty(); }
    [[nodiscard]] const payload *find(std::string_view id) const;

    std::map<std::string, std::string> metadata;

    bool operator==(const corpus &) const = default;

private:
    std::vector<payload> payloads_;
};

enum class attack_type_field { required, forbidden };

/// Parses one JSONL record. Unknown or missing fields are rejected.
payload parse_payload_line(std::string_view line, std::size_t line_no,
    attack_type_field policy = attack_type_field::required);
std::string serialize_payload(const payload &p);

/// Reads a JSONL corpus, plus the optional `<path>.meta.json` sidecar.
corpus load_corpus(const std::filesystem::path &path,
    attack_type_field policy = attack_type_field::required);
void save_corpus(const corpus &c, const std::filesystem::path &path);

/// Collapses payloads with identical raw strings onto the first occurrence.
corpus dedup(const corpus &c);

/// Count of distinct payloads after full decoding (reported, never applied).
std::size_t count_semantic_distinct(const corpus &c);

} // namespace genxss
