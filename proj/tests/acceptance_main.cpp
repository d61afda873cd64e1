// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "genxss/cli.hpp"
#include "genxss/clusterer.hpp"
#include "genxss/engine.hpp"
#include "genxss/harness.hpp"
#include "genxss/normalizer.hpp"
#include "genxss/payload.hpp"
#include "genxss/secrule.hpp"
#include "genxss/validator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace genxss;
namespace gt = genxss::testing;
using clock_type = std::chrono::steady_clock;

namespace {

constexpr double metric_tolerance = 1e-4;
constexpr double silhouette_tolerance = 1e-9;
constexpr double metrics_budget_ms = 1.0;
constexpr double oracle_budget_s = 30.0;
constexpr double clustering_budget_s = 10.0;
constexpr double pipeline_budget_s = 120.0;
constexpr double property_budget_s = 60.0;
constexpr int oracle_cases = 500;
constexpr std::size_t max_cluster_instance = 8;

struct outcome {
    bool pass{false};
    std::string detail;
};

double seconds_since(clock_type::time_point start)
{
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(const char *format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

outcome metrics_fidelity()
{
    const confusion_matrix cm{150, 0, 800, 24};
    const auto start = clock_type::now();
    const auto m = metrics(cm);
    const double ms = seconds_since(start) * 1000.0;
    const struct {
        const char *name;
        std::optional<double> got;
        double want;
    } rows[] = {{"accuracy", m.accuracy, 0.9753}, {"precision", m.precision, 1.0}, {"recall", m.recall, 0.8621},
        {"f1", m.f1, 0.9259}};
    outcome o{ms < metrics_budget_ms, ""};
    for (const auto &r : rows) {
        const bool ok = r.got && std::abs(*r.got - r.want) <= metric_tolerance;
        o.pass = o.pass && ok;
        o.detail += std::string(r.name) + " " + (r.got ? fmt("%.5f", *r.got) : "n/a") + " ";
    }
    o.detail += fmt("(%.4f ms)", ms);
    return o;
}

outcome payload_discrimination()
{
    const std::string unicode_payload = R"(\";\u0061\u006c\u0065\u0072\u0074(1);//)";
    const std::string mixed_payload = R"(\";\u0061l\x65rt(1);//)";
    const auto first = analyze_payload(unicode_payload, injection_context::js_string_dq);
    const auto second = analyze_payload(mixed_payload, injection_context::js_string_dq);
    const auto decoded = full_decode(unicode_payload).value;
    const bool contains = decoded.find("alert(1)") != std::string::npos;
    outcome o;
    o.pass = first.valid() && !second.valid() && second.reason == reason::mixed_encoding_identifier && contains;
    o.detail = "unicode " + std::string(first.valid() ? "valid" : "invalid(" + first.reason + ")") + ", mixed " +
               (second.valid() ? "valid" : "invalid(" + second.reason + ")") + ", decoded \"" + decoded + "\"";
    return o;
}

outcome secrule_oracle()
{
    std::mt19937_64 rng(20240611);
    const auto start = clock_type::now();
    int agree = 0;
    for (int i = 0; i < oracle_cases; ++i) {
        const auto c = gt::generate_case(rng);
        const auto got = evaluate(gt::to_http_request(c.request), parse_ruleset(gt::render_rules(c.rules)));
        const auto want = gt::naive_evaluate(c.request, c.rules);
        agree += got.blocked() == want.blocked && got.matched_rule_ids == want.matched;
    }
    const double s = seconds_since(start);
    return {agree == oracle_cases && s < oracle_budget_s,
        std::to_string(agree) + "/" + std::to_string(oracle_cases) + " agree " + fmt("(%.2f s)", s)};
}

outcome clustering_oracle()
{
    const auto corpus = load_corpus(gt::fixture("bypass_174.jsonl"));
    std::vector<std::string> raws;
    for (const auto &p : corpus.payloads()) {
        raws.push_back(p.raw);
    }
    const auto start = clock_type::now();
    std::size_t instances = 0;
    std::size_t checks = 0;
    std::size_t mismatches = 0;
    double worst_silhouette = 0.0;
    auto check_silhouette = [&](const distance_matrix &dm, const std::vector<int> &labels) {
        const auto got = silhouette(dm, labels);
        const auto want = gt::naive_silhouette(dm, labels);
        ++checks;
        if (got.has_value() != want.has_value()) {
            ++mismatches;
        } else if (got) {
            worst_silhouette = std::max(worst_silhouette, std::abs(*got - *want));
        }
    };
    // Every window of consecutive fixture payloads with 1..8 members.
    for (std::size_t n = 1; n <= max_cluster_instance; ++n) {
        for (std::size_t begin = 0; begin + n <= raws.size(); ++begin) {
            const std::vector<std::string> docs(raws.begin() + static_cast<long>(begin),
                raws.begin() + static_cast<long>(begin + n));
            ++instances;
            const auto rows = build_tfidf(docs).rows;
            const auto euclid = euclidean_distances(rows);
            for (double t : {0.5, 1.8, 3.0}) {
                const auto labels = hac_ward(rows, t).labels;
                ++checks;
                mismatches += !gt::same_partition(labels, gt::brute_ward(rows, t));
                check_silhouette(euclid, labels);
            }
            const auto seq = sequence_distance_matrix(docs);
            for (double eps : {0.05, 0.1, 0.3}) {
                for (std::size_t min_samples : {1, 2, 3}) {
                    const auto labels = dbscan(seq, eps, min_samples).labels;
                    ++checks;
                    mismatches += !gt::same_partition(labels, gt::brute_dbscan(seq, eps, min_samples));
                    check_silhouette(seq, labels);
                }
            }
        }
    }
    const double s = seconds_since(start);
    outcome o;
    o.pass = mismatches == 0 && worst_silhouette <= silhouette_tolerance && s < clustering_budget_s;
    o.detail = std::to_string(instances) + " instances, " + std::to_string(checks) + " checks, " +
               std::to_string(mismatches) + " mismatches, max silhouette error " + fmt("%.1e", worst_silhouette) +
               " " + fmt("(%.2f s)", s);
    return o;
}

outcome ro_spot_values()
{
    const double shifted = ro_ratio("abcd", "bcde");
    const double same = ro_ratio("payload", "payload");
    const double disjoint = ro_ratio("abc", "xyz");
    outcome o;
    o.pass = shifted == 0.75 && same == 1.0 && disjoint == 0.0;
    o.detail = "abcd/bcde " + fmt("%.17g", shifted) + ", identity " + fmt("%.17g", same) + ", disjoint " +
               fmt("%.17g", disjoint);
    return o;
}

outcome offline_pipeline()
{
    const auto start = clock_type::now();
    gt::temp_dir dir;
    const auto config = gt::fixture("pipeline/config.json").string();
    std::string reports[2];
    std::vector<std::size_t> blocked;
    for (int run = 0; run < 2; ++run) {
        const auto out_dir = dir / ("run-" + std::to_string(run));
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run_cli({"genxss", "pipeline", "--config", config, "--out-dir", out_dir.string()}, out, err);
        if (code != cli::ok) {
            return {false, "pipeline exited " + std::to_string(code) + ": " + err.str()};
        }
        reports[run] = gt::slurp(out_dir / "report.txt");
        if (run == 0) {
            const auto doc = nlohmann::json::parse(gt::slurp(out_dir / "refine.json"));
            for (const auto &h : doc["history"]) {
                blocked.push_back(h["tp"].get<std::size_t>());
            }
        }
    }
    const double s = seconds_since(start);
    bool improving = blocked.size() >= 2;
    std::string series;
    for (std::size_t i = 0; i < blocked.size(); ++i) {
        series += (i ? " " : "") + std::to_string(blocked[i]);
        if (i > 0 && blocked[i] <= blocked[i - 1]) {
            improving = false;
        }
    }
    const bool identical = !reports[0].empty() && reports[0] == reports[1];
    outcome o;
    o.pass = identical && improving && s < pipeline_budget_s;
    o.detail = "blocked per iteration " + series + ", reports " + (identical ? "byte-identical" : "differ") + " " +
               fmt("(%.2f s)", s);
    return o;
}

outcome property_suites()
{
    const auto start = clock_type::now();
    const std::string cmd = std::string("\"") + GENXSS_PROPERTY_TESTS + "\" --gtest_brief=1 > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const double s = seconds_since(start);
    const bool ok = status == 0;
    return {ok && s < property_budget_s,
        std::string(ok ? "all property tests passed" : "property tests failed (status " + std::to_string(status) + ")") +
            " " + fmt("(%.2f s)", s)};
}

} // namespace

int main()
{
    const struct {
        int number;
        const char *name;
        std::function<outcome()> run;
    } criteria[] = {
        {1, "metrics fidelity", metrics_fidelity},
        {2, "payload discrimination", payload_discrimination},
        {3, "secrule oracle equivalence", secrule_oracle},
        {4, "clustering oracle equivalence", clustering_oracle},
        {5, "ratcliff-obershelp spot values", ro_spot_values},
        {6, "offline end-to-end pipeline", offline_pipeline},
        {8, "property suites", property_suites},
    };
    int failed = 0;
    for (const auto &c : criteria) {
        outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.number << ". " << c.name << ": " << o.detail << "\n";
        if (c.number == 6) {
            std::cout << "N/A   7. headline rates: NOT REPRODUCIBLE here. The published payload validity, bypass and "
                         "block rates and absolute counts came from live hosted model calls and a full production "
                         "core ruleset behind a real web server. The remote provider and remote target paths can "
                         "run them, but they are not checked. The fixtures only mirror their magnitudes.\n";
        }
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
    return failed == 0 ? 0 : 1;
}
