// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genxss/clusterer.hpp"
#include "genxss/error.hpp"
#include "genxss/payload.hpp"
#include "genxss/secrule.hpp"

namespace genxss {

struct prompt_section {
    std::string title;
    std::string body;

    bool operator==(const prompt_section &) const = default;
};

struct prompt_spec {
    std::string system_role;
    std::vector<prompt_section> sections;
    std::vector<std::string> examples;
    std::size_t requested_count{0};

    /// Canonical JSON text; the basis of hash().
    [[nodiscard]] std::string serialize() const;
    /// Lowercase hex SHA-256 of serialize().
    [[nodiscard]] std::string hash() const;
    /// The user message: every section as a `## title` block.
    [[nodiscard]] std::string user_message() const;

    bool operator==(const prompt_spec &) const = default;
};

std::string sha256_hex(std::string_view data);

std::vector<std::string> default_obfuscation_techniques();

/// Few-shot generation prompt. Examples must be valid attacks; count > 0.
prompt_spec build_attack_prompt(const std::vector<payload> &examples, attack_type type,
    std::size_t count, const std::vector<std::string> &obfuscation_techniques);

/// Rule-writing prompt with one characteristics block per summary. Member
/// indices in the summaries refer to `samples`.
prompt_spec build_rule_prompt(const std::vector<cluster_summary> &summaries,
    const std::vector<std::string> &samples);

struct human_note {
    std::string target_id;
    std::string note;

    bool operator==(const human_note &) const = default;
};

struct feedback_report {
    std::size_t iteration{0};
    std::vector<payload> false_negatives;
    std::vector<payload> false_positives;
    std::vector<std::string> lint_warnings;
    std::vector<std::string> parse_errors;
    std::vector<human_note> human_notes;

    [[nodiscard]] bool empty() const noexcept
    {
        return false_negatives.empty() && false_positives.empty() && lint_warnings.empty() &&
               parse_errors.empty() && human_notes.empty();
    }
};

std::string feedback_to_json(const feedback_report &f);

/// Throws std::invalid_argument("nothing to refine") on empty feedback.
prompt_spec build_refine_prompt(std::string_view previous_rules, const feedback_report &feedback);

enum class provider_kind { openai, gemini, mock };

std::string_view to_string(provider_kind k) noexcept;
std::optional<provider_kind> parse_provider_kind(std::string_view s) noexcept;

struct provider_config {
    provider_kind kind{provider_kind::mock};
    std::string endpoint; // empty: GENXSS_LLM_ENDPOINT, then the provider default
    std::string model{"gpt-4o"};
    double temperature{0.7};
    std::string api_key_env{"GENXSS_LLM_API_KEY"};
    std::chrono::milliseconds timeout{std::chrono::seconds(60)};
    int max_retries{3};
    std::chrono::milliseconds backoff_base{std::chrono::milliseconds(500)};
    std::filesystem::path mock_dir;

    /// Throws config_error on out-of-range values.
    void check() const;
    [[nodiscard]] std::string provider_id() const;
};

struct llm_response {
    std::string text;
    std::string provider;
    std::string prompt_hash;
    std::optional<std::size_t> prompt_tokens;
    std::optional<std::size_t> completion_tokens;
};

enum class llm_error_kind { config, timeout, client_error, retries_exhausted, network, missing_fixture, bad_response };

std::string_view to_string(llm_error_kind k) noexcept;

class llm_error : public error {
public:
    llm_error(llm_error_kind kind, const std::string &message)
        : error(std::string(to_string(kind)) + ": " + message), kind_(kind)
    {}

    [[nodiscard]] llm_error_kind kind() const noexcept { return kind_; }

private:
    llm_error_kind kind_;
};

/// Sends the prompt to the configured provider. Retries 429 and 5xx with
/// exponential backoff; the mock provider reads `<mock_dir>/<hash>.txt`.
llm_response complete(const prompt_spec &prompt, const provider_config &cfg);

class extraction_error : public error {
public:
    using error::error;
};

/// One payload per line. Inside code fences only fenced lines count;
/// otherwise numbered or bulleted lines, otherwise lines that look like
/// markup or script. Throws extraction_error when nothing is found.
std::vector<std::string> parse_payload_list(std::string_view text);

/// Inverse of parse_payload_list for payloads without line breaks.
std::string render_payload_list(const std::vector<std::string> &payloads);

struct extracted_ruleset {
    std::string text;
    ruleset rules;
};

/// Keeps SecRule, comment and continuation lines and parses them. Throws
/// extraction_error when no rule is present or the block does not parse.
extracted_ruleset parse_ruleset_block(std::string_view text);

} // namespace genxss
