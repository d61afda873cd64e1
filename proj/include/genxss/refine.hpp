// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genxss/clusterer.hpp"
#include "genxss/harness.hpp"
#include "genxss/llm.hpp"
#include "genxss/secrule.hpp"

namespace genxss {

enum class stop_reason { targets_met, max_iterations, no_progress };

std::string_view to_string(stop_reason r) noexcept;

struct refine_config {
    std::size_t max_iterations{5};
    double target_recall{0.85};
    std::size_t max_fp{0};
    std::size_t fn_cap{20};
    std::size_t no_progress_limit{2};
    std::vector<human_note> human_notes;
    /// When set, each iteration is written to `<dir>/iter-<n>/`.
    std::optional<std::filesystem::path> checkpoint_dir;
};

struct iteration_record {
    std::size_t iteration{0};
    std::string prompt_hash;
    bool parsed{false};
    std::string ruleset_text; // extracted block, or the raw reply when nothing parsed
    std::size_t num_rules{0};
    confusion_matrix cm;
    metric_values values;
    feedback_report feedback;
};

struct refine_state {
    std::size_t iteration{0}; // iterations completed
    std::string best_ruleset_text;
    ruleset best_rules;
    confusion_matrix best_cm;
    std::vector<iteration_record> history;
    std::optional<stop_reason> stop;
};

using llm_call = std::function<llm_response(const prompt_spec &)>;

/// The generate, evaluate, feed back loop. Iteration 0 asks for rules from
/// the cluster summaries; later iterations send the previous candidate and
/// its feedback. The best candidate by (blocked, fewer false positives,
/// fewer rules) is retained. Replies that do not parse are reported back as
/// parse errors and do not count towards the no-progress limit. Gateway
/// errors propagate after the finished iterations have been checkpointed.
refine_state run_refinement(const std::vector<payload> &bypass_corpus,
    const std::vector<payload> &benign_corpus, const std::vector<cluster_summary> &summaries,
    const std::vector<std::string> &samples, const llm_call &gateway, const refine_config &config);

/// Reads `[{"target_id": ..., "note": ...}]`. A missing file yields no
/// notes. Targets not in `known_targets` add a warning but are kept.
std::vector<human_note> ingest_annotations(const std::filesystem::path &path,
    const std::set<std::string> &known_targets, std::vector<std::string> *warnings = nullptr);

struct rule_count {
    std::size_t num_rules{0};
    std::size_t num_blocked{0};
    std::size_t num_bypassing{0};
};

/// Counts for the retained ruleset. Throws std::invalid_argument before any
/// iteration has completed.
rule_count rule_count_report(const refine_state &state);

/// JSON document with the confusion counts and metric values (null when
/// undefined).
std::string metrics_to_json(const confusion_matrix &cm, const metric_values &m);

} // namespace genxss
