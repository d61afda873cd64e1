// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace genxss {

/// Lowercased tokens: `%XX` / `%uXXXX` escapes, `[a-z0-9]+` words, and any
/// other non-space character on its own.
std::vector<std::string> tokenize(std::string_view raw);

struct tfidf_matrix {
    std::vector<std::string> vocabulary; // sorted
    std::vector<double> idf;             // parallel to vocabulary
    std::vector<std::vector<double>> rows;
};

/// tf = raw count, idf = ln((1+N)/(1+df)) + 1, rows L2-normalized.
tfidf_matrix build_tfidf(const std::vector<std::string> &corpus);

using distance_matrix = std::vector<std::vector<double>>;

distance_matrix euclidean_distances(const std::vector<std::vector<double>> &rows);

/// Ratcliff-Obershelp similarity 2M/(|a|+|b|). Arguments are put in a
/// canonical order first, so the result is symmetric.
double ro_ratio(std::string_view a, std::string_view b);

/// d(i,j) = 1 - ro_ratio(corpus[i], corpus[j]).
distance_matrix sequence_distance_matrix(const std::vector<std::string> &corpus);

enum class cluster_method { tfidf_hac, seq_dbscan };

std::string_view to_string(cluster_method m) noexcept;
std::optional<cluster_method> parse_cluster_method(std::string_view s) noexcept;

struct cluster_assignment {
    std::vector<int> labels; // -1 = noise
    cluster_method method{cluster_method::tfidf_hac};
    double threshold{1.8};
    double eps{0.1};
    std::size_t min_samples{2};

    [[nodiscard]] int cluster_count() const;
};

/// Ward agglomeration over Euclidean distances of `rows`. Pairs merge while
/// their Ward distance is at most `distance_threshold`; exact ties go to the
/// lowest index pair. Labels are numbered by first member.
cluster_assignment hac_ward(const std::vector<std::vector<double>> &rows,
    double distance_threshold = 1.8);

/// DBSCAN over a precomputed distance matrix. Neighbourhoods are inclusive
/// (`d <= eps`) and count the point itself.
cluster_assignment dbscan(const distance_matrix &dm, double eps = 0.1, std::size_t min_samples = 2);

/// Mean silhouette over non-noise points; nullopt with fewer than two
/// non-noise clusters.
std::optional<double> silhouette(const distance_matrix &dm, const std::vector<int> &labels);

struct cluster_summary {
    int id{0}; // -1 for the noise group
    std::size_t size{0};
    std::vector<std::size_t> members;
    std::vector<std::size_t> representatives; // up to 3 medoids
    std::vector<std::string> shared_tokens;   // sorted
};

/// One summary per cluster in label order, followed by a noise summary when
/// any point is noise. Medoids minimize the summed distance to the other
/// members; ties go to the lower index.
std::vector<cluster_summary> summarize_clusters(const std::vector<std::string> &corpus,
    const std::vector<int> &labels, const distance_matrix &dm);

struct clustering_result {
    cluster_assignment assignment;
    std::optional<double> silhouette;
    std::vector<cluster_summary> summaries;
};

/// Runs the selected pipeline end to end on raw payload strings.
clustering_result cluster_corpus(const std::vector<std::string> &corpus, cluster_method method,
    double threshold = 1.8, double eps = 0.1, std::size_t min_samples = 2);

} // namespace genxss
