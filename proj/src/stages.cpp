// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "stages.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace genxss::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string id_prefix(attack_type t)
{
    return t == attack_type::reflected ? "ref-" : "dom-";
}

std::string padded(std::size_t n)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", n);
    return buf;
}

std::string fixed4(const std::optional<double> &v)
{
    if (!v) {
        return "n/a";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

ordered_json opt_json(const std::optional<double> &v)
{
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json metrics_json(const confusion_matrix &cm)
{
    ordered_json doc;
    doc["tp"] = cm.tp;
    doc["fp"] = cm.fp;
    doc["tn"] = cm.tn;
    doc["fn"] = cm.fn;
    metric_values m;
    if (cm.total() > 0) {
        m = metrics(cm);
    }
    doc["accuracy"] = opt_json(m.accuracy);
    doc["precision"] = opt_json(m.precision);
    doc["recall"] = opt_json(m.recall);
    doc["f1"] = opt_json(m.f1);
    return doc;
}

std::vector<payload> attacks_with(const corpus &c, waf_status status)
{
    std::vector<payload> out;
    for (const auto &p : c.payloads()) {
        if (!p.is_benign() && p.outcome.status == status) {
            out.push_back(p);
        }
    }
    return out;
}

template <class T>
T field(const json &doc, const char *key, const fs::path &path)
{
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception &e) {
        throw parse_error(path.string() + ": field '" + key + "': " + e.what());
    }
}

json parse_json_file(const fs::path &path)
{
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error &e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

} // namespace

std::string read_text(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path &path, const std::string &text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw io_error("cannot write " + path.string());
    }
}

llm_call make_llm_call(const provider_config &cfg, const std::optional<fs::path> &dump_dir)
{
    return [cfg, dump_dir](const prompt_spec &prompt) {
        if (dump_dir) {
            write_text(*dump_dir / (prompt.hash() + ".prompt.txt"),
                "# system\n" + prompt.system_role + "\n# user\n" + prompt.user_message());
        }
        return complete(prompt, cfg);
    };
}

generate_summary generate_stage(const fs::path &examples, attack_type type, std::size_t count,
    const fs::path &out_path, const llm_call &llm, const std::string &provider_id)
{
    if (count == 0) {
        throw usage_error("--count must be positive");
    }
    const auto ex = load_corpus(examples);
    std::vector<payload> shots;
    for (const auto &p : ex.payloads()) {
        if (p.type == type && p.validation.status == validation_status::valid) {
            shots.push_back(p);
        }
    }
    if (shots.empty()) {
        throw usage_error("examples file " + examples.string() + " has no valid " +
                          std::string(to_string(type)) + " examples");
    }
    const auto prompt = build_attack_prompt(shots, type, count, default_obfuscation_techniques());
    const auto reply = llm(prompt);
    auto raws = parse_payload_list(reply.text);
    if (raws.size() > count) {
        raws.resize(count);
    }

    corpus out = fs::exists(out_path) ? load_corpus(out_path) : corpus{};
    std::size_t next = 1;
    for (const auto &p : out.payloads()) {
        if (p.id.starts_with(id_prefix(type))) {
            try {
                next = std::max(next, static_cast<std::size_t>(std::stoul(p.id.substr(4))) + 1);
            } catch (const std::exception &) {
            }
        }
    }
    generate_summary s;
    s.received = raws.size();
    for (const auto &raw : raws) {
        const bool known = std::any_of(out.payloads().begin(), out.payloads().end(),
            [&](const payload &p) { return p.raw == raw; });
        if (known) {
            continue;
        }
        payload p;
        p.id = id_prefix(type) + padded(next++);
        p.raw = raw;
        p.type = type;
        p.source = payload_source::llm(provider_id, prompt.hash());
        out.add(std::move(p));
        ++s.added;
    }
    save_corpus(out, out_path);
    return s;
}

validate_summary validate_stage(const fs::path &in, const fs::path &out,
    std::optional<injection_context> context)
{
    const auto c = load_corpus(in);
    corpus result;
    result.metadata = c.metadata;
    validate_summary s;
    for (auto p : c.payloads()) {
        if (!p.is_benign()) {
            const auto ctx = context.value_or(default_context(*p.type));
            p.validation = analyze_payload(p.raw, ctx).to_state();
            p.outcome = waf_outcome::untested();
            (p.validation.status == validation_status::valid ? s.valid : s.invalid)++;
        }
        result.add(std::move(p));
    }
    save_corpus(result, out);
    return s;
}

waf_target make_target(const target_settings &t, const std::optional<fs::path> &ruleset)
{
    if (t.kind == "embedded") {
        if (!ruleset) {
            throw usage_error("the embedded target needs a ruleset");
        }
        return embedded_target{parse_ruleset(read_text(*ruleset)), "/gym", "p16"};
    }
    if (t.kind == "remote") {
        if (t.url.empty()) {
            throw usage_error("the remote target needs a URL");
        }
        remote_target r;
        r.base_url = t.url;
        r.blocked_statuses = t.blocked_statuses;
        r.marker = t.marker;
        r.concurrency = t.concurrency;
        r.timeout = std::chrono::milliseconds(static_cast<long long>(t.timeout_seconds * 1000.0));
        return r;
    }
    throw usage_error("unknown target kind '" + t.kind + "'");
}

test_summary test_stage(const fs::path &in, const fs::path &out, const waf_target &target,
    const std::optional<fs::path> &benign_in, const std::optional<fs::path> &benign_out)
{
    const auto c = load_corpus(in);
    std::vector<payload> testable;
    corpus result;
    result.metadata = c.metadata;
    test_summary s;
    for (const auto &p : c.payloads()) {
        if (!p.is_benign() && p.validation.status == validation_status::valid) {
            testable.push_back(p);
        } else {
            auto copy = p;
            if (!copy.is_benign()) {
                copy.outcome = waf_outcome::untested();
            }
            ++s.skipped;
            result.add(std::move(copy));
        }
    }
    for (auto &p : test_payloads(std::move(testable), target)) {
        switch (p.outcome.status) {
        case waf_status::blocked:
            ++s.blocked;
            break;
        case waf_status::bypassed:
            ++s.bypassed;
            break;
        default:
            ++s.indeterminate;
        }
        result.add(std::move(p));
    }
    save_corpus(result, out);

    if (benign_in) {
        if (!benign_out) {
            throw usage_error("--benign needs --benign-out");
        }
        corpus benign_result;
        for (auto &p : test_payloads(benign_corpus_load(*benign_in), target)) {
            (p.outcome.status == waf_status::blocked ? s.benign_blocked : s.benign_passed)++;
            benign_result.add(std::move(p));
        }
        save_corpus(benign_result, *benign_out);
    }
    return s;
}

std::string cluster_file_json(const cluster_file &c)
{
    const auto &a = c.result.assignment;
    ordered_json doc;
    doc["method"] = std::string(to_string(a.method));
    if (a.method == cluster_method::tfidf_hac) {
        doc["params"] = {{"threshold", a.threshold}};
    } else {
        doc["params"] = {{"eps", a.eps}, {"min_samples", a.min_samples}};
    }
    doc["payload_ids"] = c.payload_ids;
    doc["samples"] = c.samples;
    doc["labels"] = a.labels;
    doc["silhouette"] = opt_json(c.result.silhouette);
    doc["summaries"] = ordered_json::array();
    for (const auto &s : c.result.summaries) {
        doc["summaries"].push_back({{"id", s.id}, {"size", s.size}, {"members", s.members},
            {"representatives", s.representatives}, {"shared_tokens", s.shared_tokens}});
    }
    return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

cluster_file read_cluster_file(const fs::path &path)
{
    const auto doc = parse_json_file(path);
    cluster_file c;
    const auto method = parse_cluster_method(field<std::string>(doc, "method", path));
    if (!method) {
        throw parse_error(path.string() + ": unknown clustering method");
    }
    auto &a = c.result.assignment;
    a.method = *method;
    const auto params = field<json>(doc, "params", path);
    if (a.method == cluster_method::tfidf_hac) {
        a.threshold = field<double>(params, "threshold", path);
    } else {
        a.eps = field<double>(params, "eps", path);
        a.min_samples = field<std::size_t>(params, "min_samples", path);
    }
    c.payload_ids = field<std::vector<std::string>>(doc, "payload_ids", path);
    c.samples = field<std::vector<std::string>>(doc, "samples", path);
    a.labels = field<std::vector<int>>(doc, "labels", path);
    if (!doc.at("silhouette").is_null()) {
        c.result.silhouette = field<double>(doc, "silhouette", path);
    }
    for (const auto &s : field<json>(doc, "summaries", path)) {
        cluster_summary cs;
        cs.id = field<int>(s, "id", path);
        cs.size = field<std::size_t>(s, "size", path);
        cs.members = field<std::vector<std::size_t>>(s, "members", path);
        cs.representatives = field<std::vector<std::size_t>>(s, "representatives", path);
        cs.shared_tokens = field<std::vector<std::string>>(s, "shared_tokens", path);
        for (auto i : cs.representatives) {
            if (i >= c.samples.size()) {
                throw parse_error(path.string() + ": representative index out of range");
            }
        }
        c.result.summaries.push_back(std::move(cs));
    }
    if (c.samples.size() != a.labels.size() || c.payload_ids.size() != a.labels.size()) {
        throw parse_error(path.string() + ": labels, samples and payload_ids differ in length");
    }
    return c;
}

cluster_file cluster_stage(const fs::path &results, const fs::path &out, const clustering_settings &s)
{
    const auto c = load_corpus(results);
    cluster_file f;
    for (const auto &p : attacks_with(c, waf_status::bypassed)) {
        f.payload_ids.push_back(p.id);
        f.samples.push_back(p.raw);
    }
    if (f.samples.empty()) {
        throw error("no bypassing payloads to cluster in " + results.string());
    }
    f.result = cluster_corpus(f.samples, s.method, s.threshold, s.eps, s.min_samples);
    write_text(out, cluster_file_json(f));
    return f;
}

std::string rules_stage(const fs::path &clusters, const fs::path &out, const llm_call &llm)
{
    const auto c = read_cluster_file(clusters);
    const auto reply = llm(build_rule_prompt(c.result.summaries, c.samples));
    auto extracted = parse_ruleset_block(reply.text);
    write_text(out, extracted.text);
    return extracted.text;
}

refine_outputs refine_stage(const fs::path &results, const fs::path &clusters, const fs::path &benign,
    const fs::path &out_dir, const refine_settings &s, const llm_call &llm, std::ostream &err)
{
    const auto c = load_corpus(results);
    const auto cf = read_cluster_file(clusters);
    const auto bypass = attacks_with(c, waf_status::bypassed);
    const auto benign_samples = benign_corpus_load(benign);

    refine_config cfg;
    cfg.max_iterations = s.max_iterations;
    cfg.target_recall = s.target_recall;
    cfg.max_fp = s.max_fp;
    cfg.checkpoint_dir = out_dir / "refine";
    if (s.annotations) {
        std::set<std::string> known;
        for (const auto &p : bypass) {
            known.insert(p.id);
        }
        std::vector<std::string> warnings;
        cfg.human_notes = ingest_annotations(*s.annotations, known, &warnings);
        for (const auto &w : warnings) {
            err << "warning: " << w << "\n";
        }
    }

    refine_outputs r;
    r.state = run_refinement(bypass, benign_samples, cf.result.summaries, cf.samples, llm, cfg);

    ordered_json doc;
    doc["iterations"] = r.state.iteration;
    doc["stop_reason"] = std::string(to_string(*r.state.stop));
    doc["history"] = ordered_json::array();
    for (const auto &h : r.state.history) {
        auto entry = metrics_json(h.cm);
        entry["iteration"] = h.iteration;
        entry["parsed"] = h.parsed;
        entry["num_rules"] = h.num_rules;
        entry["prompt_hash"] = h.prompt_hash;
        doc["history"].push_back(entry);
    }
    const auto counts = rule_count_report(r.state);
    auto best = metrics_json(r.state.best_cm);
    best["num_rules"] = counts.num_rules;
    best["num_blocked"] = counts.num_blocked;
    best["num_bypassing"] = counts.num_bypassing;
    doc["best"] = best;

    write_text(out_dir / "refine.json", doc.dump(2) + "\n");
    write_text(out_dir / "final.conf", r.state.best_ruleset_text);
    r.files.push_back(out_dir / "refine.json");
    r.files.push_back(out_dir / "final.conf");
    for (const auto &h : r.state.history) {
        const auto dir = out_dir / "refine" / ("iter-" + std::to_string(h.iteration));
        for (const char *name : {"ruleset.conf", "metrics.json", "feedback.json"}) {
            r.files.push_back(dir / name);
        }
    }
    return r;
}

std::string format_metrics_text(const confusion_matrix &cm, const metric_values &m)
{
    std::ostringstream out;
    out << "tp " << cm.tp << "  fp " << cm.fp << "  tn " << cm.tn << "  fn " << cm.fn << "\n";
    out << "accuracy   " << fixed4(m.accuracy) << "\n";
    out << "precision  " << fixed4(m.precision) << "\n";
    out << "recall     " << fixed4(m.recall) << "\n";
    out << "f1         " << fixed4(m.f1) << "\n";
    return out.str();
}

report_output report_stage(const report_inputs &in)
{
    const auto c = load_corpus(in.corpus);
    ordered_json doc;

    struct row {
        std::size_t generated{0}, valid{0}, blocked{0}, bypassed{0};
    };
    std::map<attack_type, row> rows{{attack_type::reflected, {}}, {attack_type::dom_based, {}}};
    row total;
    confusion_matrix waf_cm;
    for (const auto &p : c.payloads()) {
        if (p.is_benign()) {
            continue;
        }
        auto &r = rows[*p.type];
        for (auto *x : {&r, &total}) {
            ++x->generated;
            x->valid += p.validation.status == validation_status::valid;
            x->blocked += p.outcome.status == waf_status::blocked;
            x->bypassed += p.outcome.status == waf_status::bypassed;
        }
    }
    waf_cm.tp = total.blocked;
    waf_cm.fn = total.bypassed;
    if (in.benign_results) {
        const auto benign = load_corpus(*in.benign_results, attack_type_field::forbidden);
        for (const auto &p : benign.payloads()) {
            waf_cm.fp += p.outcome.status == waf_status::blocked;
            waf_cm.tn += p.outcome.status == waf_status::bypassed;
        }
    }

    std::ostringstream text;
    char line[160];
    text << "GenXSS report\n\n";
    std::snprintf(line, sizeof line, "%-12s %9s %7s %8s %9s\n", "attack type", "generated", "valid",
        "blocked", "bypassed");
    text << line;
    doc["attack_types"] = ordered_json::array();
    auto emit_row = [&](const std::string &name, const row &r) {
        std::snprintf(line, sizeof line, "%-12s %9zu %7zu %8zu %9zu\n", name.c_str(), r.generated, r.valid,
            r.blocked, r.bypassed);
        text << line;
    };
    for (const auto &[t, r] : rows) {
        emit_row(std::string(to_string(t)), r);
        doc["attack_types"].push_back({{"type", std::string(to_string(t))}, {"generated", r.generated},
            {"valid", r.valid}, {"blocked", r.blocked}, {"bypassed", r.bypassed}});
    }
    emit_row("total", total);
    doc["total"] = {{"generated", total.generated}, {"valid", total.valid}, {"blocked", total.blocked},
        {"bypassed", total.bypassed}};

    doc["clustering"] = nullptr;
    if (in.clusters) {
        const auto cf = read_cluster_file(*in.clusters);
        const auto &a = cf.result.assignment;
        const auto noise = static_cast<std::size_t>(std::count(a.labels.begin(), a.labels.end(), -1));
        text << "\nclustering: " << to_string(a.method) << ", " << cf.samples.size() << " payloads, "
             << a.cluster_count() << " clusters, " << noise << " noise, silhouette "
             << fixed4(cf.result.silhouette) << "\n";
        doc["clustering"] = {{"method", std::string(to_string(a.method))}, {"payloads", cf.samples.size()},
            {"clusters", a.cluster_count()}, {"noise", noise}, {"silhouette", opt_json(cf.result.silhouette)}};
    }

    std::vector<std::pair<std::string, confusion_matrix>> metric_rows{{"waf", waf_cm}};
    doc["refinement"] = nullptr;
    if (in.refine) {
        const auto r = parse_json_file(*in.refine);
        const auto best = field<json>(r, "best", *in.refine);
        confusion_matrix cm;
        cm.tp = field<std::size_t>(best, "tp", *in.refine);
        cm.fp = field<std::size_t>(best, "fp", *in.refine);
        cm.tn = field<std::size_t>(best, "tn", *in.refine);
        cm.fn = field<std::size_t>(best, "fn", *in.refine);
        const auto iterations = field<std::size_t>(r, "iterations", *in.refine);
        const auto stop = field<std::string>(r, "stop_reason", *in.refine);
        const auto num_rules = field<std::size_t>(best, "num_rules", *in.refine);
        text << "refinement: " << iterations << " iterations, stop " << stop << ", " << num_rules
             << " rules, " << cm.tp << " blocked, " << cm.fn << " bypassing\n";
        std::vector<std::size_t> blocked_per_iteration;
        for (const auto &h : field<json>(r, "history", *in.refine)) {
            blocked_per_iteration.push_back(field<std::size_t>(h, "tp", *in.refine));
        }
        text << "blocked per iteration:";
        for (auto b : blocked_per_iteration) {
            text << " " << b;
        }
        text << "\n";
        doc["refinement"] = {{"iterations", iterations}, {"stop_reason", stop}, {"num_rules", num_rules},
            {"num_blocked", cm.tp}, {"num_bypassing", cm.fn}, {"blocked_per_iteration", blocked_per_iteration}};
        metric_rows.emplace_back("refined", cm);
    }

    text << "\n";
    std::snprintf(line, sizeof line, "%-8s %5s %5s %5s %5s %9s %10s %7s %7s\n", "rules", "tp", "fp", "tn",
        "fn", "accuracy", "precision", "recall", "f1");
    text << line;
    doc["metrics"] = ordered_json::array();
    for (const auto &[name, cm] : metric_rows) {
        metric_values m;
        if (cm.total() > 0) {
            m = metrics(cm);
        }
        std::snprintf(line, sizeof line, "%-8s %5zu %5zu %5zu %5zu %9s %10s %7s %7s\n", name.c_str(), cm.tp,
            cm.fp, cm.tn, cm.fn, fixed4(m.accuracy).c_str(), fixed4(m.precision).c_str(),
            fixed4(m.recall).c_str(), fixed4(m.f1).c_str());
        text << line;
        auto entry = metrics_json(cm);
        entry["name"] = name;
        doc["metrics"].push_back(entry);
    }
    return {text.str(), doc.dump(2) + "\n"};
}

} // namespace genxss::cli
