// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "genxss/cli.hpp"
#include "genxss/clusterer.hpp"
#include "genxss/harness.hpp"
#include "genxss/llm.hpp"
#include "genxss/refine.hpp"
#include "genxss/validator.hpp"

namespace genxss::cli {

namespace fs = std::filesystem;

std::string read_text(const fs::path &path);
void write_text(const fs::path &path, const std::string &text);

/// Wraps `complete`, optionally saving each prompt as `<hash>.prompt.txt`.
llm_call make_llm_call(const provider_config &cfg, const std::optional<fs::path> &dump_dir);

struct generate_summary {
    std::size_t received{0};
    std::size_t added{0};
};

generate_summary generate_stage(const fs::path &examples, attack_type type, std::size_t count,
    const fs::path &out_path, const llm_call &llm, const std::string &provider_id);

struct validate_summary {
    std::size_t valid{0};
    std::size_t invalid{0};
};

validate_summary validate_stage(const fs::path &in, const fs::path &out,
    std::optional<injection_context> context);

waf_target make_target(const target_settings &t, const std::optional<fs::path> &ruleset);

struct test_summary {
    std::size_t blocked{0};
    std::size_t bypassed{0};
    std::size_t indeterminate{0};
    std::size_t skipped{0};
    std::size_t benign_blocked{0};
    std::size_t benign_passed{0};
};

test_summary test_stage(const fs::path &in, const fs::path &out, const waf_target &target,
    const std::optional<fs::path> &benign_in, const std::optional<fs::path> &benign_out);

struct cluster_file {
    clustering_result result;
    std::vector<std::string> payload_ids;
    std::vector<std::string> samples;
};

std::string cluster_file_json(const cluster_file &c);
cluster_file read_cluster_file(const fs::path &path);

/// Clusters the bypassing payloads of a results corpus.
cluster_file cluster_stage(const fs::path &results, const fs::path &out, const clustering_settings &s);

std::string rules_stage(const fs::path &clusters, const fs::path &out, const llm_call &llm);

struct refine_outputs {
    refine_state state;
    std::vector<fs::path> files;
};

/// Writes `<out_dir>/refine/iter-<n>/...`, `<out_dir>/refine.json` and
/// `<out_dir>/final.conf`.
refine_outputs refine_stage(const fs::path &results, const fs::path &clusters, const fs::path &benign,
    const fs::path &out_dir, const refine_settings &s, const llm_call &llm, std::ostream &err);

struct report_inputs {
    fs::path corpus;
    std::optional<fs::path> benign_results;
    std::optional<fs::path> clusters;
    std::optional<fs::path> refine;
};

struct report_output {
    std::string text;
    std::string json;
};

report_output report_stage(const report_inputs &in);

std::string format_metrics_text(const confusion_matrix &cm, const metric_values &m);

} // namespace genxss::cli
