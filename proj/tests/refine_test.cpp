// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdio>

#include "genxss/refine.hpp"
#include "test_util.hpp"

using namespace genxss;
using genxss::testing::attack;
using genxss::testing::benign;
using genxss::testing::fixture;
using genxss::testing::slurp;
using genxss::testing::spit;
using genxss::testing::temp_dir;

namespace {

std::vector<payload> synthetic_144()
{
    std::vector<payload> out;
    for (int i = 0; i < 144; ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "x%03d", i);
        out.push_back(attack(id, id));
    }
    return out;
}

std::vector<payload> small_benign()
{
    return {benign("b1", "shoes"), benign("b2", "red+shirt"), benign("b3", "size%3D10")};
}

std::string fenced_rule(const std::string &pattern, std::uint32_t id = 500001)
{
    return "Here is the rule.\n```\n# synthetic ids\nSecRule ARGS \"@rx " + pattern + "\" \"id:" +
           std::to_string(id) + ",phase:2,deny,status:403\"\n```\n";
}

/// Replies from a fixed list, repeating the last entry; records every prompt.
struct scripted_gateway {
    std::vector<std::string> replies;
    std::vector<prompt_spec> prompts;

    llm_call call()
    {
        return [this](const prompt_spec &p) {
            prompts.push_back(p);
            const auto &text = replies[std::min(prompts.size() - 1, replies.size() - 1)];
            return llm_response{text, "scripted", p.hash(), std::nullopt, std::nullopt};
        };
    }
};

std::vector<cluster_summary> one_summary(std::size_t n)
{
    cluster_summary s;
    s.id = 0;
    s.size = n;
    for (std::size_t i = 0; i < n; ++i) {
        s.members.push_back(i);
    }
    s.representatives = {0};
    s.shared_tokens = {"x"};
    return {s};
}

std::vector<std::string> raws(const std::vector<payload> &ps)
{
    std::vector<std::string> out;
    for (const auto &p : ps) {
        out.push_back(p.raw);
    }
    return out;
}

} // namespace

TEST(RunRefinement, ReachesTargetOnSecondIteration)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("^x(?:0[0-9][0-9]|1[01][0-9])$"), fenced_rule("^x(?:0[0-9][0-9]|1[01][0-9]|12[0-3])$")}};
    const auto st = run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), {});
    ASSERT_EQ(st.history.size(), 2u);
    EXPECT_EQ(st.iteration, 2u);
    EXPECT_EQ(st.history[0].cm.tp, 120u);
    EXPECT_EQ(st.history[1].cm.tp, 124u);
    EXPECT_EQ(st.history[1].cm.fp, 0u);
    EXPECT_EQ(st.stop, stop_reason::targets_met);
    EXPECT_GE(*st.history[1].values.recall, 0.85);
    EXPECT_LT(*st.history[0].values.recall, 0.85);
    EXPECT_EQ(st.best_cm.tp, 124u);
    // The first prompt asks for rules; the second carries the feedback.
    ASSERT_EQ(g.prompts.size(), 2u);
    EXPECT_EQ(g.prompts[0].sections[1].title, "Cluster Characteristics");
    EXPECT_EQ(g.prompts[1].sections[1].title, "Previous Rules");
    EXPECT_NE(g.prompts[1].user_message().find("[x120] x120"), std::string::npos);
    EXPECT_EQ(st.history[0].feedback.false_negatives.size(), 20u);
}

TEST(RunRefinement, UnparseableRepliesRunToTheCap)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{"I am unable to write firewall rules."}};
    const auto st = run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), {});
    EXPECT_EQ(st.stop, stop_reason::max_iterations);
    ASSERT_EQ(st.history.size(), 5u);
    for (const auto &rec : st.history) {
        EXPECT_FALSE(rec.parsed);
        EXPECT_FALSE(rec.feedback.parse_errors.empty());
    }
    const auto counts = rule_count_report(st);
    EXPECT_EQ(counts.num_rules, 0u);
    EXPECT_EQ(counts.num_blocked, 0u);
    EXPECT_EQ(counts.num_bypassing, 144u);
    EXPECT_NE(g.prompts[1].user_message().find("Parse errors:"), std::string::npos);
}

TEST(RunRefinement, FirstReplyMeetingTargetsStops)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("^x[0-9]+$")}};
    const auto st = run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), {});
    EXPECT_EQ(st.history.size(), 1u);
    EXPECT_EQ(st.stop, stop_reason::targets_met);
}

TEST(RunRefinement, FalsePositivesBlockTheTarget)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("."), fenced_rule("^x[0-9]+$", 500002)}};
    const auto st = run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), {});
    ASSERT_EQ(st.history.size(), 2u);
    EXPECT_EQ(st.history[0].cm.fp, 3u);
    EXPECT_EQ(st.history[0].feedback.false_positives.size(), 3u);
    EXPECT_EQ(st.stop, stop_reason::targets_met);
    EXPECT_EQ(st.best_cm.fp, 0u);
}

TEST(RunRefinement, NoProgressStops)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("^x0")}};
    const auto st = run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), {});
    EXPECT_EQ(st.stop, stop_reason::no_progress);
    EXPECT_EQ(st.history.size(), 3u);
    EXPECT_EQ(st.best_cm.tp, 100u);
}

TEST(RunRefinement, RegressionKeepsBestRuleset)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("^x0"), fenced_rule("^x00"), fenced_rule("^x1", 500003)}};
    refine_config cfg;
    cfg.max_iterations = 2;
    const auto st = run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), cfg);
    EXPECT_EQ(st.stop, stop_reason::max_iterations);
    EXPECT_EQ(st.history[1].cm.tp, 10u);
    EXPECT_EQ(st.best_cm.tp, 100u);
    EXPECT_NE(st.best_ruleset_text.find("^x0\""), std::string::npos);
}

TEST(RunRefinement, HumanNotesReachTheNextPrompt)
{
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("^x0"), fenced_rule("^x[0-9]+$")}};
    refine_config cfg;
    cfg.human_notes = {{"x120", "the tail ids share a prefix"}, {"500001", "too narrow"}};
    run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), cfg);
    ASSERT_EQ(g.prompts.size(), 2u);
    const auto msg = g.prompts[1].user_message();
    EXPECT_NE(msg.find("- x120: the tail ids share a prefix"), std::string::npos);
    EXPECT_NE(msg.find("- 500001: too narrow"), std::string::npos);
}

TEST(RunRefinement, CheckpointsEveryIteration)
{
    temp_dir dir;
    const auto corpus = synthetic_144();
    scripted_gateway g{{fenced_rule("^x(?:0[0-9][0-9]|1[01][0-9])$"), fenced_rule("^x(?:0[0-9][0-9]|1[01][0-9]|12[0-3])$")}};
    refine_config cfg;
    cfg.checkpoint_dir = dir / "refine";
    run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), g.call(), cfg);
    for (int i = 0; i < 2; ++i) {
        const auto it = dir / "refine" / ("iter-" + std::to_string(i));
        for (const char *f : {"ruleset.conf", "metrics.json", "feedback.json"}) {
            EXPECT_TRUE(std::filesystem::exists(it / f)) << it / f;
        }
    }
    EXPECT_NE(slurp(dir / "refine" / "iter-1" / "metrics.json").find("\"tp\": 124"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "refine" / "iter-2"));
}

TEST(RunRefinement, GatewayFailureKeepsFinishedCheckpoints)
{
    temp_dir dir;
    const auto corpus = synthetic_144();
    int calls = 0;
    const llm_call failing = [&](const prompt_spec &p) -> llm_response {
        if (calls++ > 0) {
            throw llm_error(llm_error_kind::retries_exhausted, "HTTP 503");
        }
        return {fenced_rule("^x0"), "scripted", p.hash(), std::nullopt, std::nullopt};
    };
    refine_config cfg;
    cfg.checkpoint_dir = dir.path();
    EXPECT_THROW(run_refinement(corpus, small_benign(), one_summary(corpus.size()), raws(corpus), failing, cfg),
        llm_error);
    EXPECT_TRUE(std::filesystem::exists(dir / "iter-0" / "ruleset.conf"));
}

TEST(RunRefinement, Preconditions)
{
    scripted_gateway g{{fenced_rule("x")}};
    EXPECT_THROW(run_refinement({}, small_benign(), one_summary(1), {"x"}, g.call(), {}), std::invalid_argument);
    refine_config zero;
    zero.max_iterations = 0;
    const auto corpus = synthetic_144();
    EXPECT_THROW(run_refinement(corpus, {}, one_summary(1), raws(corpus), g.call(), zero), std::invalid_argument);
}

TEST(IngestAnnotations, ReadsNotes)
{
    temp_dir dir;
    spit(dir / "annotations.json",
        R"([{"target_id":"x001","note":"tab in scheme"},{"target_id":"999","note":"unknown rule"}])");
    std::vector<std::string> warnings;
    const auto notes = ingest_annotations(dir / "annotations.json", {"x001"}, &warnings);
    ASSERT_EQ(notes.size(), 2u);
    EXPECT_EQ(notes[0], (human_note{"x001", "tab in scheme"}));
    EXPECT_EQ(notes[1].target_id, "999");
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("'999'"), std::string::npos);
}

TEST(IngestAnnotations, MissingFileAndMalformed)
{
    temp_dir dir;
    EXPECT_TRUE(ingest_annotations(dir / "absent.json", {}).empty());
    spit(dir / "bad.json", R"({"target_id":"x"})");
    EXPECT_THROW(ingest_annotations(dir / "bad.json", {}), parse_error);
    spit(dir / "extra.json", R"([{"target_id":"x","note":"n","score":1}])");
    EXPECT_THROW(ingest_annotations(dir / "extra.json", {}), parse_error);
    spit(dir / "broken.json", "[");
    EXPECT_THROW(ingest_annotations(dir / "broken.json", {}), parse_error);
}

TEST(RuleCountReport, FixtureEndState)
{
    const auto bypass = load_corpus(fixture("bypass_174.jsonl")).payloads();
    const auto benign_800 = benign_corpus_load(fixture("benign_800.jsonl"));
    const auto conf = slurp(fixture("generated-15.conf"));
    scripted_gateway g{{"```\n" + conf + "```\n"}};
    const auto st = run_refinement(bypass, benign_800, one_summary(bypass.size()), raws(bypass), g.call(), {});
    EXPECT_EQ(st.stop, stop_reason::targets_met);
    const auto counts = rule_count_report(st);
    EXPECT_EQ(counts.num_rules, 15u);
    EXPECT_EQ(counts.num_blocked, 150u);
    EXPECT_EQ(counts.num_bypassing, 24u);
    EXPECT_EQ(st.best_cm.fp, 0u);
    EXPECT_EQ(st.best_cm.tn, 800u);
}

TEST(RuleCountReport, CatchAllRule)
{
    const std::vector<payload> tiny{attack("t1", "<svg onload=alert(1)>"), attack("t2", "\";alert(1);//"),
        attack("t3", "java%09script:alert(1)", attack_type::dom_based)};
    scripted_gateway g{{fenced_rule(".")}};
    const auto st = run_refinement(tiny, {}, one_summary(tiny.size()), raws(tiny), g.call(), {});
    const auto counts = rule_count_report(st);
    EXPECT_EQ(counts.num_rules, 1u);
    EXPECT_EQ(counts.num_blocked, 3u);
    EXPECT_EQ(counts.num_bypassing, 0u);
}

TEST(RuleCountReport, NeedsAnIteration)
{
    EXPECT_THROW(rule_count_report(refine_state{}), std::invalid_argument);
}

TEST(MetricsJson, NullForUndefined)
{
    const confusion_matrix cm{0, 0, 10, 0};
    const auto text = metrics_to_json(cm, metrics(cm));
    EXPECT_NE(text.find("\"precision\": null"), std::string::npos);
    EXPECT_NE(text.find("\"accuracy\": 1.0"), std::string::npos);
}

TEST(StopReason, Names)
{
    EXPECT_EQ(to_string(stop_reason::targets_met), "TargetsMet");
    EXPECT_EQ(to_string(stop_reason::max_iterations), "MaxIterations");
    EXPECT_EQ(to_string(stop_reason::no_progress), "NoProgress");
}
