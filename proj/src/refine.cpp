// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/refine.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace genxss {

namespace {

using ordered_json = nlohmann::ordered_json;

struct evaluation {
    confusion_matrix cm;
    std::vector<payload> false_negatives;
    std::vector<payload> false_positives;
};

evaluation evaluate_rules(const ruleset &rules, const std::vector<payload> &attacks,
    const std::vector<payload> &benign)
{
    const embedded_target target{rules, "/gym", "p16"};
    const auto a = test_payloads(attacks, target);
    const auto b = test_payloads(benign, target);
    evaluation ev;
    ev.cm = compute_confusion(a, b);
    for (const auto &p : a) {
        if (p.outcome.status == waf_status::bypassed) {
            ev.false_negatives.push_back(p);
        }
    }
    for (const auto &p : b) {
        if (p.outcome.status == waf_status::blocked) {
            ev.false_positives.push_back(p);
        }
    }
    return ev;
}

// Larger is better.
auto rank(const confusion_matrix &cm, std::size_t num_rules)
{
    return std::make_tuple(cm.tp, -static_cast<long long>(cm.fp), -static_cast<long long>(num_rules));
}

auto progress_key(const confusion_matrix &cm)
{
    return std::make_pair(cm.tp, -static_cast<long long>(cm.fp));
}

bool targets_met(const confusion_matrix &cm, const refine_config &cfg)
{
    const auto attacks = cm.tp + cm.fn;
    const double recall = attacks == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(attacks);
    return recall >= cfg.target_recall && cm.fp <= cfg.max_fp;
}

void write_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
}

void checkpoint(const std::filesystem::path &dir, const iteration_record &rec)
{
    const auto iter_dir = dir / ("iter-" + std::to_string(rec.iteration));
    std::error_code ec;
    std::filesystem::create_directories(iter_dir, ec);
    if (ec) {
        throw io_error("cannot create " + iter_dir.string() + ": " + ec.message());
    }
    write_file(iter_dir / "ruleset.conf", rec.ruleset_text);
    auto m = ordered_json::parse(metrics_to_json(rec.cm, rec.values));
    ordered_json doc;
    doc["iteration"] = rec.iteration;
    doc["prompt_hash"] = rec.prompt_hash;
    doc["parsed"] = rec.parsed;
    doc["num_rules"] = rec.num_rules;
    for (auto &[k, v] : m.items()) {
        doc[k] = v;
    }
    write_file(iter_dir / "metrics.json", doc.dump(2) + "\n");
    write_file(iter_dir / "feedback.json", feedback_to_json(rec.feedback));
}

} // namespace

std::string_view to_string(stop_reason r) noexcept
{
    switch (r) {
    case stop_reason::targets_met:
        return "TargetsMet";
    case stop_reason::max_iterations:
        return "MaxIterations";
    case stop_reason::no_progress:
        return "NoProgress";
    }
    return "";
}

std::string metrics_to_json(const confusion_matrix &cm, const metric_values &m)
{
    auto opt = [](const std::optional<double> &v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    ordered_json doc;
    doc["tp"] = cm.tp;
    doc["fp"] = cm.fp;
    doc["tn"] = cm.tn;
    doc["fn"] = cm.fn;
    doc["accuracy"] = opt(m.accuracy);
    doc["precision"] = opt(m.precision);
    doc["recall"] = opt(m.recall);
    doc["f1"] = opt(m.f1);
    return doc.dump(2) + "\n";
}

refine_state run_refinement(const std::vector<payload> &bypass_corpus,
    const std::vector<payload> &benign_corpus, const std::vector<cluster_summary> &summaries,
    const std::vector<std::string> &samples, const llm_call &gateway, const refine_config &config)
{
    if (bypass_corpus.empty()) {
        throw std::invalid_argument("refinement needs at least one bypassing payload");
    }
    if (config.max_iterations == 0) {
        throw std::invalid_argument("max_iterations must be positive");
    }
    if (!(config.target_recall >= 0.0 && config.target_recall <= 1.0)) {
        throw std::invalid_argument("target_recall must be within [0, 1]");
    }

    refine_state state;
    state.best_cm = evaluate_rules(state.best_rules, bypass_corpus, benign_corpus).cm;
    std::size_t stalled = 0;
    std::optional<iteration_record> previous;

    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        const auto prompt = it == 0 ? build_rule_prompt(summaries, samples)
                                    : build_refine_prompt(previous->ruleset_text, previous->feedback);
        const auto reply = gateway(prompt);

        iteration_record rec;
        rec.iteration = it;
        rec.prompt_hash = prompt.hash();
        rec.feedback.iteration = it;
        ruleset candidate;
        try {
            auto extracted = parse_ruleset_block(reply.text);
            rec.parsed = true;
            rec.ruleset_text = std::move(extracted.text);
            candidate = std::move(extracted.rules);
        } catch (const extraction_error &e) {
            rec.ruleset_text = reply.text;
            rec.feedback.parse_errors.emplace_back(e.what());
        }
        rec.num_rules = candidate.rules.size();

        auto ev = evaluate_rules(candidate, bypass_corpus, benign_corpus);
        rec.cm = ev.cm;
        rec.values = metrics(ev.cm);
        if (ev.false_negatives.size() > config.fn_cap) {
            ev.false_negatives.resize(config.fn_cap);
        }
        rec.feedback.false_negatives = std::move(ev.false_negatives);
        rec.feedback.false_positives = std::move(ev.false_positives);
        for (const auto &w : lint_ruleset(candidate)) {
            rec.feedback.lint_warnings.push_back(to_string(w));
        }
        if (it == 0) {
            rec.feedback.human_notes = config.human_notes;
        }

        if (rec.parsed) {
            const bool progressed = progress_key(rec.cm) > progress_key(state.best_cm);
            if (rank(rec.cm, rec.num_rules) > rank(state.best_cm, state.best_rules.rules.size())) {
                state.best_cm = rec.cm;
                state.best_rules = candidate;
                state.best_ruleset_text = rec.ruleset_text;
            }
            stalled = progressed ? 0 : stalled + 1;
        }

        if (config.checkpoint_dir) {
            checkpoint(*config.checkpoint_dir, rec);
        }
        state.history.push_back(rec);
        state.iteration = it + 1;

        if (targets_met(state.best_cm, config)) {
            state.stop = stop_reason::targets_met;
            break;
        }
        if (stalled >= config.no_progress_limit) {
            state.stop = stop_reason::no_progress;
            break;
        }
        previous = std::move(rec);
    }
    if (!state.stop) {
        state.stop = stop_reason::max_iterations;
    }
    return state;
}

std::vector<human_note> ingest_annotations(const std::filesystem::path &path,
    const std::set<std::string> &known_targets, std::vector<std::string> *warnings)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!std::filesystem::exists(path)) {
            return {};
        }
        throw io_error("cannot read annotations " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw parse_error(std::string("annotations: ") + e.what());
    }
    if (!doc.is_array()) {
        throw parse_error("annotations: expected a list");
    }
    std::vector<human_note> notes;
    for (const auto &item : doc) {
        if (!item.is_object() || item.size() != 2 || !item.contains("target_id") ||
            !item.contains("note") || !item["target_id"].is_string() || !item["note"].is_string()) {
            throw parse_error("annotations: each entry needs string fields target_id and note");
        }
        human_note n{item["target_id"].get<std::string>(), item["note"].get<std::string>()};
        if (!known_targets.contains(n.target_id) && warnings != nullptr) {
            warnings->push_back("annotation for unknown target '" + n.target_id + "'");
        }
        notes.push_back(std::move(n));
    }
    return notes;
}

rule_count rule_count_report(const refine_state &state)
{
    if (state.history.empty()) {
        throw std::invalid_argument("no completed iteration");
    }
    return {state.best_rules.rules.size(), state.best_cm.tp, state.best_cm.fn};
}

} // namespace genxss
