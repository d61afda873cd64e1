// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genxss/clusterer.hpp"
#include "genxss/harness.hpp"
#include "genxss/llm.hpp"

namespace genxss::cli {

enum exit_code : int { ok = 0, runtime_failure = 1, usage = 2, configuration = 3 };

class usage_error : public error {
public:
    using error::error;
};

struct target_settings {
    std::string kind{"embedded"}; // embedded | remote
    std::string url;
    std::set<int> blocked_statuses{403, 406};
    std::string marker;
    std::size_t concurrency{8};
    double timeout_seconds{10.0};
};

struct clustering_settings {
    cluster_method method{cluster_method::tfidf_hac};
    double threshold{1.8};
    double eps{0.1};
    std::size_t min_samples{2};
};

struct refine_settings {
    std::size_t max_iterations{5};
    double target_recall{0.85};
    std::size_t max_fp{0};
    std::optional<std::filesystem::path> annotations;
};

/// Everything a pipeline run needs. Relative paths in the file are resolved
/// against the file's directory.
struct pipeline_config {
    provider_config provider;
    std::filesystem::path examples;
    std::filesystem::path benign;
    std::filesystem::path ruleset;
    std::optional<std::filesystem::path> routes;
    std::size_t reflected_count{0};
    std::size_t dom_count{0};
    target_settings target;
    clustering_settings clustering;
    refine_settings refine;

    /// Throws config_error on malformed JSON, unknown keys or bad values.
    static pipeline_config parse(const std::string &json_text, const std::filesystem::path &base_dir);
    static pipeline_config load(const std::filesystem::path &path);

    /// Canonical JSON, used to detect configuration changes between runs.
    [[nodiscard]] std::string canonical() const;
};

/// Runs one invocation with `args[0]` as the program name. Never throws;
/// errors are written to `err` and mapped to an exit_code.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

int run_cli(int argc, char **argv);

} // namespace genxss::cli
