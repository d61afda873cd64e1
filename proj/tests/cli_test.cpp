// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "genxss/cli.hpp"
#include "test_util.hpp"

using namespace genxss;
using genxss::testing::fixture;
using genxss::testing::slurp;
using genxss::testing::spit;
using genxss::testing::temp_dir;
namespace fs = std::filesystem;

namespace {

struct cli_result {
    int code{0};
    std::string out;
    std::string err;
};

cli_result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "genxss");
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string f(const char *name)
{
    return fixture(name).string();
}

/// Whitespace-separated fields of the first line starting with `prefix`.
std::vector<std::string> row(const std::string &text, const std::string &prefix)
{
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (line.rfind(prefix + " ", 0) == 0) {
            std::istringstream fields(line);
            std::vector<std::string> out;
            for (std::string x; fields >> x;) {
                out.push_back(x);
            }
            return out;
        }
    }
    return {};
}

std::map<std::string, std::string> tree(const fs::path &root)
{
    std::map<std::string, std::string> out;
    for (const auto &e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
        }
    }
    return out;
}

} // namespace

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run({}).code, cli::usage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::usage);
    const auto r = run({"generate", "--examples", "/nonexistent/examples.jsonl", "--out", "/tmp/x.jsonl"});
    EXPECT_EQ(r.code, cli::usage);
    EXPECT_EQ(run({"metrics", "--tp", "1"}).code, cli::usage);
    EXPECT_EQ(run({"cluster", "--in", f("bypass_174.jsonl"), "--out", "/tmp/c.json", "--method", "kmeans"}).code,
        cli::usage);
}

TEST(Cli, HelpAndVersion)
{
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, cli::ok);
    EXPECT_NE(help.out.find("pipeline"), std::string::npos);
    const auto v = run({"--version"});
    EXPECT_EQ(v.code, cli::ok);
    EXPECT_NE(v.out.find("genxss"), std::string::npos);
}

TEST(Cli, RemoteProviderWithoutKeyIsAConfigurationError)
{
    ::unsetenv("GENXSS_LLM_API_KEY");
    temp_dir dir;
    const auto r = run({"generate", "--provider", "openai", "--endpoint", "http://127.0.0.1:1/v1/chat/completions",
        "--examples", f("pipeline/examples.jsonl"), "--out", (dir / "g.jsonl").string()});
    EXPECT_EQ(r.code, cli::configuration);
    EXPECT_NE(r.err.find("GENXSS_LLM_API_KEY"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "g.jsonl"));
}

TEST(Cli, BadConfigIsAConfigurationError)
{
    temp_dir dir;
    spit(dir / "bad.json", R"({"provider":{"kind":"mock","mock_dir":"m"},"examples":"e.jsonl","benign":"b.jsonl","ruleset":"r.conf","colour":"red"})");
    spit(dir / "broken.json", "{");
    spit(dir / "range.json", R"({"provider":{"kind":"mock","mock_dir":"m","temperature":3},"examples":"e","benign":"b","ruleset":"r"})");
    for (const char *name : {"bad.json", "broken.json", "range.json"}) {
        const auto r = run({"pipeline", "--config", (dir / name).string(), "--out-dir", (dir / "out").string()});
        EXPECT_EQ(r.code, cli::configuration) << name << ": " << r.err;
    }
}

TEST(Cli, MetricsFromCounts)
{
    const auto r = run({"metrics", "--tp", "150", "--fp", "0", "--tn", "800", "--fn", "24"});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("tp 150  fp 0  tn 800  fn 24"), std::string::npos);
    EXPECT_EQ(row(r.out, "accuracy").at(1), "0.9754");
    EXPECT_EQ(row(r.out, "precision").at(1), "1.0000");
    EXPECT_EQ(row(r.out, "recall").at(1), "0.8621");
    EXPECT_EQ(row(r.out, "f1").at(1), "0.9259");

    const auto exact = run({"metrics", "--tp", "150", "--fp", "0", "--tn", "800", "--fn", "24", "--json"});
    ASSERT_EQ(exact.code, cli::ok) << exact.err;
    const auto values = nlohmann::json::parse(exact.out);
    EXPECT_NEAR(values["accuracy"].get<double>(), 0.9753, 1e-4);
    EXPECT_NEAR(values["precision"].get<double>(), 1.0, 1e-4);
    EXPECT_NEAR(values["recall"].get<double>(), 0.8621, 1e-4);
    EXPECT_NEAR(values["f1"].get<double>(), 0.9259, 1e-4);

    const auto j = run({"metrics", "--tp", "0", "--fp", "0", "--tn", "10", "--fn", "0", "--json"});
    ASSERT_EQ(j.code, cli::ok);
    const auto doc = nlohmann::json::parse(j.out);
    EXPECT_EQ(doc["accuracy"], 1.0);
    EXPECT_TRUE(doc["precision"].is_null());
    EXPECT_EQ(run({"metrics", "--tp", "0", "--fp", "0", "--tn", "0", "--fn", "0"}).code, cli::runtime_failure);
}

TEST(Cli, GenerateWithMockProvider)
{
    temp_dir dir;
    const auto examples = load_corpus(fixture("pipeline/examples.jsonl"));
    std::vector<payload> shots;
    for (const auto &p : examples.payloads()) {
        if (p.type == attack_type::reflected) {
            shots.push_back(p);
        }
    }
    const auto prompt = build_attack_prompt(shots, attack_type::reflected, 10, default_obfuscation_techniques());
    std::string reply = "```\n";
    for (int i = 0; i < 10; ++i) {
        reply += "\";alert(" + std::to_string(i) + ");//\n";
    }
    reply += "\";alert(0);//\n```\n";
    fs::create_directories(dir / "mock");
    spit(dir / "mock" / (prompt.hash() + ".txt"), reply);

    const auto out = dir / "gen.jsonl";
    const auto r = run({"generate", "--provider", "mock", "--mock-dir", (dir / "mock").string(), "--examples",
        f("pipeline/examples.jsonl"), "--count", "10", "--out", out.string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("received 10 payloads, added 10"), std::string::npos) << r.out;
    const auto c = load_corpus(out);
    ASSERT_EQ(c.size(), 10u);
    EXPECT_EQ(c.payloads()[0].source.kind, source_kind::llm_generated);
    EXPECT_EQ(c.payloads()[0].source.prompt_id, prompt.hash());

    // Appending the same reply adds nothing new.
    const auto again = run({"generate", "--provider", "mock", "--mock-dir", (dir / "mock").string(), "--examples",
        f("pipeline/examples.jsonl"), "--count", "10", "--out", out.string()});
    EXPECT_NE(again.out.find("added 0"), std::string::npos);

    const auto missing = run({"generate", "--provider", "mock", "--mock-dir", (dir / "mock").string(), "--examples",
        f("pipeline/examples.jsonl"), "--count", "11", "--out", out.string()});
    EXPECT_EQ(missing.code, cli::runtime_failure);
    EXPECT_NE(missing.err.find("no mock response"), std::string::npos);
}

TEST(Cli, ValidateTestClusterLint)
{
    temp_dir dir;
    auto r = run({"validate", "--in", f("generated_264.jsonl"), "--out", (dir / "v.jsonl").string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("264 valid, 0 invalid"), std::string::npos) << r.out;

    r = run({"test", "--in", f("validated_220.jsonl"), "--out", (dir / "r.jsonl").string(), "--ruleset",
        f("mini-crs.conf")});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("46 blocked, 174 bypassed, 0 indeterminate"), std::string::npos) << r.out;

    r = run({"cluster", "--in", (dir / "r.jsonl").string(), "--out", (dir / "c.json").string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("174 payloads"), std::string::npos) << r.out;

    r = run({"lint", f("generated-15.conf")});
    EXPECT_EQ(r.code, cli::ok);
    EXPECT_EQ(r.out, "15 rules, 0 warnings\n");
    spit(dir / "dup.conf", "SecRule ARGS \"@rx a\" \"id:1,deny,status:403\"\nSecRule ARGS \"@rx b\" \"id:1,deny,status:403\"\n");
    r = run({"lint", (dir / "dup.conf").string()});
    EXPECT_NE(r.out.find("duplicate_id"), std::string::npos);
    spit(dir / "broken.conf", "SecRule ARGS \"@rx a\" \"deny\"\n");
    EXPECT_EQ(run({"lint", (dir / "broken.conf").string()}).code, cli::runtime_failure);
}

TEST(Cli, ReportOnFixtureResults)
{
    temp_dir dir;
    const auto results = (dir / "results.jsonl").string();
    const auto benign = (dir / "benign.jsonl").string();
    auto r = run({"test", "--in", f("bypass_174.jsonl"), "--out", results, "--ruleset", f("generated-15.conf"),
        "--benign", f("benign_800.jsonl"), "--benign-out", benign});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("benign: 0 blocked, 800 passed"), std::string::npos) << r.out;

    r = run({"report", "--results", results, "--benign-results", benign, "--json-out", (dir / "r.json").string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    const auto waf = row(r.out, "waf");
    ASSERT_EQ(waf.size(), 9u) << r.out;
    EXPECT_EQ(waf[1], "150");
    EXPECT_EQ(waf[2], "0");
    EXPECT_EQ(waf[3], "800");
    EXPECT_EQ(waf[4], "24");
    EXPECT_EQ(waf[5], "0.9754");
    EXPECT_EQ(waf[8], "0.9259");
    const auto doc = nlohmann::json::parse(slurp(dir / "r.json"));
    const auto &m = doc["metrics"][0];
    EXPECT_EQ(m["name"], "waf");
    EXPECT_NEAR(m["accuracy"].get<double>(), 0.9753, 1e-4);
    EXPECT_NEAR(m["precision"].get<double>(), 1.0, 1e-4);
    EXPECT_NEAR(m["recall"].get<double>(), 0.8621, 1e-4);
    EXPECT_NEAR(m["f1"].get<double>(), 0.9259, 1e-4);
    EXPECT_EQ(doc["total"]["blocked"], 150);

    r = run({"metrics", "--attacks", results, "--benign", benign});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_NE(r.out.find("tp 150  fp 0  tn 800  fn 24"), std::string::npos);
}

TEST(Cli, ReportOnEmptyResults)
{
    temp_dir dir;
    spit(dir / "empty.jsonl", "");
    const auto r = run({"report", "--results", (dir / "empty.jsonl").string()});
    ASSERT_EQ(r.code, cli::ok) << r.err;
    EXPECT_EQ(row(r.out, "reflected"), (std::vector<std::string>{"reflected", "0", "0", "0", "0"}));
    EXPECT_EQ(row(r.out, "dom_based"), (std::vector<std::string>{"dom_based", "0", "0", "0", "0"}));
    EXPECT_EQ(row(r.out, "total"), (std::vector<std::string>{"total", "0", "0", "0", "0"}));
    EXPECT_EQ(row(r.out, "waf").at(1), "0");
}

TEST(Cli, PipelineIsDeterministicAndResumable)
{
    temp_dir a;
    temp_dir b;
    const auto config = f("pipeline/config.json");
    const auto ra = run({"pipeline", "--config", config, "--out-dir", (a / "run").string()});
    ASSERT_EQ(ra.code, cli::ok) << ra.err;
    const auto rb = run({"pipeline", "--config", config, "--out-dir", (b / "run").string()});
    ASSERT_EQ(rb.code, cli::ok) << rb.err;

    const auto report = slurp(a / "run" / "report.txt");
    EXPECT_EQ(report, slurp(b / "run" / "report.txt"));
    EXPECT_EQ(tree(a / "run"), tree(b / "run"));
    EXPECT_NE(report.find("stop TargetsMet"), std::string::npos) << report;
    EXPECT_NE(report.find("blocked per iteration: 5 7 13"), std::string::npos) << report;
    for (const char *artifact : {"generated.jsonl", "validated.jsonl", "results.jsonl", "benign_results.jsonl",
             "clusters.json", "refine.json", "final.conf", "report.json", "stages.json",
             "refine/iter-0/ruleset.conf", "refine/iter-0/metrics.json", "refine/iter-0/feedback.json"}) {
        EXPECT_TRUE(fs::exists(a / "run" / artifact)) << artifact;
    }

    const auto again = run({"pipeline", "--config", config, "--out-dir", (a / "run").string()});
    ASSERT_EQ(again.code, cli::ok) << again.err;
    EXPECT_EQ(again.out.rfind("all stages up to date\n", 0), 0u) << again.out;

    const auto forced = run({"pipeline", "--config", config, "--out-dir", (a / "run").string(), "--force"});
    ASSERT_EQ(forced.code, cli::ok);
    EXPECT_NE(forced.out.find("generate: reflected"), std::string::npos);
    EXPECT_EQ(slurp(a / "run" / "report.txt"), report);
}

TEST(Cli, PipelineHaltsOnModifiedArtifact)
{
    temp_dir dir;
    const auto config = f("pipeline/config.json");
    ASSERT_EQ(run({"pipeline", "--config", config, "--out-dir", (dir / "run").string()}).code, cli::ok);
    spit(dir / "run" / "results.jsonl", slurp(dir / "run" / "results.jsonl") + "garbage\n");
    const auto r = run({"pipeline", "--config", config, "--out-dir", (dir / "run").string()});
    EXPECT_EQ(r.code, cli::runtime_failure);
    EXPECT_NE(r.err.find("pipeline halted at stage 'test'"), std::string::npos) << r.err;

    fs::remove(dir / "run" / "clusters.json");
    const auto again = run({"pipeline", "--config", config, "--out-dir", (dir / "run").string()});
    EXPECT_EQ(again.code, cli::runtime_failure);
}

TEST(Cli, PipelineMissingMockIsReported)
{
    temp_dir dir;
    fs::create_directories(dir / "mock");
    const auto cfg = nlohmann::json{{"provider", {{"kind", "mock"}, {"mock_dir", (dir / "mock").string()}}},
        {"examples", f("pipeline/examples.jsonl")}, {"benign", f("benign_80.jsonl")}, {"ruleset", f("mini-crs.conf")},
        {"generation", {{"reflected", 3}}}};
    spit(dir / "config.json", cfg.dump());
    const auto r = run({"pipeline", "--config", (dir / "config.json").string(), "--out-dir", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::runtime_failure);
    EXPECT_NE(r.err.find("pipeline halted at stage 'generate'"), std::string::npos) << r.err;
}

TEST(PipelineConfig, ParsesAndResolvesPaths)
{
    const auto cfg = cli::pipeline_config::load(fixture("pipeline/config.json"));
    EXPECT_EQ(cfg.provider.kind, provider_kind::mock);
    EXPECT_EQ(cfg.reflected_count, 16u);
    EXPECT_EQ(cfg.dom_count, 4u);
    EXPECT_EQ(cfg.examples, fixture("pipeline/examples.jsonl"));
    EXPECT_EQ(cfg.clustering.method, cluster_method::tfidf_hac);
    EXPECT_DOUBLE_EQ(cfg.clustering.threshold, 1.8);
    EXPECT_EQ(cfg.refine.max_iterations, 5u);
    EXPECT_EQ(cfg.canonical(), cli::pipeline_config::load(fixture("pipeline/config.json")).canonical());
    EXPECT_THROW(cli::pipeline_config::parse(R"({"examples":"e","benign":"b"})", "."), config_error);
    EXPECT_THROW(cli::pipeline_config::parse(
                     R"({"examples":"e","benign":"b","ruleset":"r","clustering":{"method":"kmeans"}})", "."),
        config_error);
    EXPECT_THROW(cli::pipeline_config::parse(
                     R"({"examples":"e","benign":"b","ruleset":"r","refine":{"target_recall":1.5}})", "."),
        config_error);
}
