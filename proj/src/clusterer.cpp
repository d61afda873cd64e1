// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/clusterer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

namespace genxss {

namespace {

constexpr double tie_epsilon = 1e-12;

bool is_hex(char c) noexcept
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_word(char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

char lower(char c) noexcept
{
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

struct match_block {
    std::size_t a;
    std::size_t b;
    std::size_t size;
};

// Longest common block in a[alo,ahi) x b[blo,bhi); earliest in a, then b.
match_block longest_match(std::string_view a, std::string_view b, std::size_t alo, std::size_t ahi,
    std::size_t blo, std::size_t bhi)
{
    match_block best{alo, blo, 0};
    std::vector<std::size_t> prev(bhi - blo + 1, 0);
    std::vector<std::size_t> cur(bhi - blo + 1, 0);
    for (std::size_t i = alo; i < ahi; ++i) {
        for (std::size_t j = blo; j < bhi; ++j) {
            const std::size_t k = j - blo + 1;
            cur[k] = a[i] == b[j] ? prev[k - 1] + 1 : 0;
            if (cur[k] > best.size) {
                best = {i + 1 - cur[k], j + 1 - cur[k], cur[k]};
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

std::size_t matching_characters(std::string_view a, std::string_view b)
{
    std::size_t total = 0;
    std::vector<std::array<std::size_t, 4>> stack{{0, a.size(), 0, b.size()}};
    while (!stack.empty()) {
        const auto [alo, ahi, blo, bhi] = stack.back();
        stack.pop_back();
        if (alo >= ahi || blo >= bhi) {
            continue;
        }
        const auto m = longest_match(a, b, alo, ahi, blo, bhi);
        if (m.size == 0) {
            continue;
        }
        total += m.size;
        stack.push_back({alo, m.a, blo, m.b});
        stack.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
    }
    return total;
}

std::vector<int> relabel_by_first_member(const std::vector<int> &raw)
{
    std::map<int, int> mapping;
    std::vector<int> out(raw.size(), -1);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] < 0) {
            continue;
        }
        auto [it, inserted] = mapping.emplace(raw[i], static_cast<int>(mapping.size()));
        out[i] = it->second;
    }
    return out;
}

} // namespace

std::vector<std::string> tokenize(std::string_view raw)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < raw.size()) {
        const char c = lower(raw[i]);
        if (c == '%') {
            if (i + 5 < raw.size() && lower(raw[i + 1]) == 'u' && is_hex(raw[i + 2]) &&
                is_hex(raw[i + 3]) && is_hex(raw[i + 4]) && is_hex(raw[i + 5])) {
                std::string t(raw.substr(i, 6));
                std::transform(t.begin(), t.end(), t.begin(), lower);
                out.push_back(std::move(t));
                i += 6;
                continue;
            }
            if (i + 2 < raw.size() && is_hex(raw[i + 1]) && is_hex(raw[i + 2])) {
                std::string t(raw.substr(i, 3));
                std::transform(t.begin(), t.end(), t.begin(), lower);
                out.push_back(std::move(t));
                i += 3;
                continue;
            }
        }
        if (is_word(c)) {
            std::string t;
            while (i < raw.size() && is_word(lower(raw[i]))) {
                t += lower(raw[i]);
                ++i;
            }
            out.push_back(std::move(t));
            continue;
        }
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v') {
            out.emplace_back(1, c);
        }
        ++i;
    }
    return out;
}

tfidf_matrix build_tfidf(const std::vector<std::string> &corpus)
{
    if (corpus.empty()) {
        throw std::invalid_argument("build_tfidf: empty corpus");
    }
    std::vector<std::map<std::string, std::size_t>> counts;
    std::map<std::string, std::size_t> df;
    for (const auto &doc : corpus) {
        auto &c = counts.emplace_back();
        for (auto &t : tokenize(doc)) {
            ++c[t];
        }
        for (const auto &[t, n] : c) {
            ++df[t];
        }
    }
    tfidf_matrix m;
    std::map<std::string, std::size_t> column;
    const double n_docs = static_cast<double>(corpus.size());
    for (const auto &[t, d] : df) {
        column.emplace(t, m.vocabulary.size());
        m.vocabulary.push_back(t);
        m.idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(d))) + 1.0);
    }
    for (const auto &c : counts) {
        std::vector<double> row(m.vocabulary.size(), 0.0);
        double norm = 0.0;
        for (const auto &[t, n] : c) {
            const auto j = column.at(t);
            row[j] = static_cast<double>(n) * m.idf[j];
            norm += row[j] * row[j];
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (auto &v : row) {
                v /= norm;
            }
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

distance_matrix euclidean_distances(const std::vector<std::vector<double>> &rows)
{
    const auto n = rows.size();
    distance_matrix d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < rows[i].size(); ++k) {
                const double diff = rows[i][k] - rows[j][k];
                s += diff * diff;
            }
            d[i][j] = d[j][i] = std::sqrt(s);
        }
    }
    return d;
}

double ro_ratio(std::string_view a, std::string_view b)
{
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    if (b < a) {
        std::swap(a, b);
    }
    const auto m = matching_characters(a, b);
    return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

distance_matrix sequence_distance_matrix(const std::vector<std::string> &corpus)
{
    const auto n = corpus.size();
    distance_matrix d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d[i][j] = d[j][i] = 1.0 - ro_ratio(corpus[i], corpus[j]);
        }
    }
    return d;
}

std::string_view to_string(cluster_method m) noexcept
{
    return m == cluster_method::tfidf_hac ? "tfidf_hac" : "seq_dbscan";
}

std::optional<cluster_method> parse_cluster_method(std::string_view s) noexcept
{
    if (s == "tfidf_hac") {
        return cluster_method::tfidf_hac;
    }
    if (s == "seq_dbscan") {
        return cluster_method::seq_dbscan;
    }
    return std::nullopt;
}

int cluster_assignment::cluster_count() const
{
    int k = 0;
    for (int l : labels) {
        k = std::max(k, l + 1);
    }
    return k;
}

cluster_assignment hac_ward(const std::vector<std::vector<double>> &rows, double distance_threshold)
{
    if (rows.empty()) {
        throw std::invalid_argument("hac_ward: no rows");
    }
    if (!(distance_threshold > 0.0)) {
        throw std::invalid_argument("hac_ward: threshold must be positive");
    }
    const auto n = rows.size();
    auto d = euclidean_distances(rows);
    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);
    std::vector<int> slot_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        slot_of[i] = static_cast<int>(i);
    }

    for (std::size_t remaining = n; remaining > 1; --remaining) {
        std::size_t bi = 0;
        std::size_t bj = 0;
        double best = 0.0;
        bool found = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) {
                continue;
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && (!found || d[i][j] < best - tie_epsilon)) {
                    best = d[i][j];
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }
        if (best > distance_threshold) {
            break;
        }
        const double ni = static_cast<double>(size[bi]);
        const double nj = static_cast<double>(size[bj]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) {
                continue;
            }
            const double nk = static_cast<double>(size[k]);
            const double v = ((nk + ni) * d[k][bi] * d[k][bi] + (nk + nj) * d[k][bj] * d[k][bj] -
                                 nk * best * best) /
                             (nk + ni + nj);
            d[k][bi] = d[bi][k] = std::sqrt(std::max(v, 0.0));
        }
        size[bi] += size[bj];
        active[bj] = false;
        for (auto &s : slot_of) {
            if (s == static_cast<int>(bj)) {
                s = static_cast<int>(bi);
            }
        }
    }

    cluster_assignment out;
    out.method = cluster_method::tfidf_hac;
    out.threshold = distance_threshold;
    out.labels = relabel_by_first_member(slot_of);
    return out;
}

cluster_assignment dbscan(const distance_matrix &dm, double eps, std::size_t min_samples)
{
    if (!(eps > 0.0) || min_samples < 1) {
        throw std::invalid_argument("dbscan: eps must be positive and min_samples at least 1");
    }
    const auto n = dm.size();
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (dm[i][j] <= eps) {
                neighbours[i].push_back(j);
            }
        }
    }
    auto is_core = [&](std::size_t i) { return neighbours[i].size() >= min_samples; };

    std::vector<int> labels(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != -1 || !is_core(i)) {
            continue;
        }
        const int label = next++;
        labels[i] = label;
        std::deque<std::size_t> queue{i};
        while (!queue.empty()) {
            const auto p = queue.front();
            queue.pop_front();
            for (auto q : neighbours[p]) {
                if (labels[q] != -1) {
                    continue;
                }
                labels[q] = label;
                if (is_core(q)) {
                    queue.push_back(q);
                }
            }
        }
    }

    cluster_assignment out;
    out.method = cluster_method::seq_dbscan;
    out.eps = eps;
    out.min_samples = min_samples;
    out.labels = std::move(labels);
    return out;
}

std::optional<double> silhouette(const distance_matrix &dm, const std::vector<int> &labels)
{
    std::map<int, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) {
            clusters[labels[i]].push_back(i);
        }
    }
    if (clusters.size() < 2) {
        return std::nullopt;
    }
    double total = 0.0;
    std::size_t count = 0;
    for (const auto &[label, members] : clusters) {
        for (auto i : members) {
            ++count;
            if (members.size() == 1) {
                continue;
            }
            double a = 0.0;
            for (auto j : members) {
                a += dm[i][j];
            }
            a /= static_cast<double>(members.size() - 1);
            double b = 0.0;
            bool first = true;
            for (const auto &[other, others] : clusters) {
                if (other == label) {
                    continue;
                }
                double mean = 0.0;
                for (auto j : others) {
                    mean += dm[i][j];
                }
                mean /= static_cast<double>(others.size());
                if (first || mean < b) {
                    b = mean;
                    first = false;
                }
            }
            const double denom = std::max(a, b);
            if (denom > 0.0) {
                total += (b - a) / denom;
            }
        }
    }
    return total / static_cast<double>(count);
}

std::vector<cluster_summary> summarize_clusters(const std::vector<std::string> &corpus,
    const std::vector<int> &labels, const distance_matrix &dm)
{
    if (labels.size() != corpus.size() || dm.size() != corpus.size()) {
        throw std::invalid_argument("summarize_clusters: sizes differ");
    }
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        groups[labels[i]].push_back(i);
    }
    std::vector<cluster_summary> out;
    auto summarize = [&](int id, const std::vector<std::size_t> &members) {
        cluster_summary s;
        s.id = id;
        s.size = members.size();
        s.members = members;

        std::vector<std::pair<double, std::size_t>> cost;
        for (auto i : members) {
            double sum = 0.0;
            for (auto j : members) {
                sum += dm[i][j];
            }
            cost.emplace_back(sum, i);
        }
        std::sort(cost.begin(), cost.end());
        for (std::size_t k = 0; k < cost.size() && k < 3; ++k) {
            s.representatives.push_back(cost[k].second);
        }

        std::map<std::string, std::size_t> freq;
        for (auto i : members) {
            auto toks = tokenize(corpus[i]);
            for (const auto &t : std::set<std::string>(toks.begin(), toks.end())) {
                ++freq[t];
            }
        }
        for (const auto &[t, c] : freq) {
            if (c * 5 >= members.size() * 4) {
                s.shared_tokens.push_back(t);
            }
        }
        out.push_back(std::move(s));
    };
    for (const auto &[id, members] : groups) {
        if (id >= 0) {
            summarize(id, members);
        }
    }
    if (const auto noise = groups.find(-1); noise != groups.end()) {
        summarize(-1, noise->second);
    }
    return out;
}

clustering_result cluster_corpus(const std::vector<std::string> &corpus, cluster_method method,
    double threshold, double eps, std::size_t min_samples)
{
    clustering_result r;
    distance_matrix dm;
    if (method == cluster_method::tfidf_hac) {
        const auto m = build_tfidf(corpus);
        r.assignment = hac_ward(m.rows, threshold);
        dm = euclidean_distances(m.rows);
    } else {
        if (corpus.empty()) {
            throw std::invalid_argument("cluster_corpus: empty corpus");
        }
        dm = sequence_distance_matrix(corpus);
        r.assignment = dbscan(dm, eps, min_samples);
    }
    r.silhouette = silhouette(dm, r.assignment.labels);
    r.summaries = summarize_clusters(corpus, r.assignment.labels, dm);
    return r;
}

} // namespace genxss
