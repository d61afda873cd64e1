// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "genxss/engine.hpp"
#include "genxss/payload.hpp"
#include "genxss/secrule.hpp"

namespace genxss {

struct embedded_target {
    ruleset rules;
    std::string path{"/gym"};
    std::string param{"p16"};
};

struct remote_target {
    std::string base_url;
    std::set<int> blocked_statuses{403, 406};
    /// Text that must come back in a 2xx body for a bypass. Empty means the
    /// server-decoded payload itself.
    std::string marker;
    std::string param{"p16"};
    std::size_t concurrency{8};
    std::chrono::milliseconds timeout{std::chrono::seconds(10)};
};

using waf_target = std::variant<embedded_target, remote_target>;

/// The request an embedded target evaluates: `GET <path>?<param>=<raw>`.
http_request embedded_request(const payload &p, const embedded_target &t);

/// Sets `outcome` on every payload and returns them ordered by id. Attack
/// payloads must be valid; benign samples are accepted as they are. Remote
/// failures become indeterminate outcomes instead of aborting the batch.
std::vector<payload> test_payloads(std::vector<payload> payloads, const waf_target &target);

struct confusion_matrix {
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t tn{0};
    std::size_t fn{0};

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const confusion_matrix &) const = default;
};

/// Throws invariant_error when any input is not blocked or bypassed.
confusion_matrix compute_confusion(const std::vector<payload> &attacks, const std::vector<payload> &benign);

struct metric_values {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

/// Undefined ratios are nullopt. Throws std::invalid_argument on an empty matrix.
metric_values metrics(const confusion_matrix &cm);

/// Loads benign samples; a record carrying an attack type is rejected.
std::vector<payload> benign_corpus_load(const std::filesystem::path &path);

} // namespace genxss
