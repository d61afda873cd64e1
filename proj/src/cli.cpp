// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/cli.hpp"

#include <atomic>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "genxss/vuln_app.hpp"
#include "stages.hpp"

namespace genxss::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void check_keys(const json &obj, std::initializer_list<std::string_view> allowed, const std::string &where)
{
    if (!obj.is_object()) {
        throw config_error(where + ": expected an object");
    }
    for (const auto &[key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw config_error(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
void read_opt(const json &obj, const char *key, T &dst, const std::string &where)
{
    if (!obj.contains(key)) {
        return;
    }
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception &) {
        throw config_error(where + "." + key + ": wrong type");
    }
}

fs::path resolve(const fs::path &base, const std::string &p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

provider_config parse_provider(const json &obj, const fs::path &base)
{
    check_keys(obj, {"kind", "endpoint", "model", "temperature", "api_key_env", "timeout_seconds",
                        "max_retries", "mock_dir"},
        "provider");
    provider_config p;
    std::string kind = "mock";
    read_opt(obj, "kind", kind, "provider");
    const auto k = parse_provider_kind(kind);
    if (!k) {
        throw config_error("provider.kind: unknown provider '" + kind + "'");
    }
    p.kind = *k;
    if (p.kind == provider_kind::gemini) {
        p.model = "gemini-pro";
        p.temperature = 1.0;
    }
    read_opt(obj, "endpoint", p.endpoint, "provider");
    read_opt(obj, "model", p.model, "provider");
    read_opt(obj, "temperature", p.temperature, "provider");
    read_opt(obj, "api_key_env", p.api_key_env, "provider");
    double timeout = 60.0;
    read_opt(obj, "timeout_seconds", timeout, "provider");
    p.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
    read_opt(obj, "max_retries", p.max_retries, "provider");
    std::string mock_dir;
    read_opt(obj, "mock_dir", mock_dir, "provider");
    if (!mock_dir.empty()) {
        p.mock_dir = resolve(base, mock_dir);
    }
    p.check();
    return p;
}

// --- signal handling for serve-app ---------------------------------------

std::atomic<bool> stop_requested{false};

extern "C" void on_signal(int)
{
    stop_requested = true;
}

// --- pipeline ---------------------------------------------------------------

struct stage_record {
    std::string name;
    std::map<std::string, std::string> outputs; // relative path -> sha256
};

struct manifest {
    std::string config_hash;
    std::vector<stage_record> stages;

    [[nodiscard]] const stage_record *find(const std::string &name) const
    {
        for (const auto &s : stages) {
            if (s.name == name) {
                return &s;
            }
        }
        return nullptr;
    }
};

manifest load_manifest(const fs::path &path)
{
    manifest m;
    if (!fs::exists(path)) {
        return m;
    }
    try {
        const auto doc = json::parse(read_text(path));
        m.config_hash = doc.at("config_hash").get<std::string>();
        for (const auto &s : doc.at("stages")) {
            m.stages.push_back({s.at("name").get<std::string>(),
                s.at("outputs").get<std::map<std::string, std::string>>()});
        }
    } catch (const json::exception &e) {
        throw error("stage manifest " + path.string() + " is corrupt: " + e.what());
    }
    return m;
}

void save_manifest(const manifest &m, const fs::path &path)
{
    ordered_json doc;
    doc["config_hash"] = m.config_hash;
    doc["stages"] = ordered_json::array();
    for (const auto &s : m.stages) {
        doc["stages"].push_back({{"name", s.name}, {"outputs", s.outputs}});
    }
    write_text(path, doc.dump(2) + "\n");
}

class stage_failure : public error {
public:
    stage_failure(const std::string &stage, const std::string &what, int code)
        : error("pipeline halted at stage '" + stage + "': " + what), code_(code)
    {}

    [[nodiscard]] int code() const noexcept { return code_; }

private:
    int code_;
};

std::string file_hash(const fs::path &p)
{
    return sha256_hex(read_text(p));
}

std::string input_fingerprint(const pipeline_config &cfg)
{
    std::string s = cfg.canonical();
    for (const auto &p : {cfg.examples, cfg.benign, cfg.ruleset}) {
        s += "\n" + p.string() + " " + (fs::exists(p) ? file_hash(p) : std::string("missing"));
    }
    if (cfg.refine.annotations && fs::exists(*cfg.refine.annotations)) {
        s += "\nannotations " + file_hash(*cfg.refine.annotations);
    }
    return sha256_hex(s);
}

int run_pipeline(const pipeline_config &cfg, const fs::path &out_dir, bool force,
    const std::optional<fs::path> &dump_prompts, std::ostream &out, std::ostream &err)
{
    fs::create_directories(out_dir);
    const auto manifest_path = out_dir / "stages.json";
    auto m = load_manifest(manifest_path);
    const auto fingerprint = input_fingerprint(cfg);
    if (force || m.config_hash != fingerprint) {
        m.stages.clear();
        m.config_hash = fingerprint;
    }

    const auto llm = make_llm_call(cfg.provider, dump_prompts);
    const auto provider_id = cfg.provider.provider_id();
    const auto generated = out_dir / "generated.jsonl";
    const auto validated = out_dir / "validated.jsonl";
    const auto results = out_dir / "results.jsonl";
    const auto benign_results = out_dir / "benign_results.jsonl";
    const auto clusters = out_dir / "clusters.json";
    const auto refine_json = out_dir / "refine.json";

    using stage_fn = std::function<std::vector<fs::path>()>;
    const std::vector<std::pair<std::string, stage_fn>> stages{
        {"generate",
            [&] {
                fs::remove(generated);
                fs::remove(fs::path(generated.string() + ".meta.json"));
                for (auto [type, count] : {std::pair{attack_type::reflected, cfg.reflected_count},
                         std::pair{attack_type::dom_based, cfg.dom_count}}) {
                    if (count == 0) {
                        continue;
                    }
                    const auto s = generate_stage(cfg.examples, type, count, generated, llm, provider_id);
                    out << "generate: " << to_string(type) << " received " << s.received << ", added "
                        << s.added << "\n";
                }
                if (!fs::exists(generated)) {
                    throw usage_error("generation counts are both zero");
                }
                return std::vector<fs::path>{generated};
            }},
        {"validate",
            [&] {
                const auto s = validate_stage(generated, validated, std::nullopt);
                out << "validate: " << s.valid << " valid, " << s.invalid << " invalid\n";
                return std::vector<fs::path>{validated};
            }},
        {"test",
            [&] {
                const auto target = make_target(cfg.target, cfg.ruleset);
                const auto s = test_stage(validated, results, target, cfg.benign, benign_results);
                out << "test: " << s.blocked << " blocked, " << s.bypassed << " bypassed, "
                    << s.indeterminate << " indeterminate; benign " << s.benign_blocked << " blocked, "
                    << s.benign_passed << " passed\n";
                return std::vector<fs::path>{results, benign_results};
            }},
        {"cluster",
            [&] {
                const auto f = cluster_stage(results, clusters, cfg.clustering);
                out << "cluster: " << f.samples.size() << " payloads in "
                    << f.result.assignment.cluster_count() << " clusters\n";
                return std::vector<fs::path>{clusters};
            }},
        {"refine",
            [&] {
                auto r = refine_stage(results, clusters, cfg.benign, out_dir, cfg.refine, llm, err);
                out << "refine: " << r.state.iteration << " iterations, stop "
                    << to_string(*r.state.stop) << "\n";
                return r.files;
            }},
        {"report",
            [&] {
                const auto rep = report_stage({results, benign_results, clusters, refine_json});
                write_text(out_dir / "report.txt", rep.text);
                write_text(out_dir / "report.json", rep.json);
                return std::vector<fs::path>{out_dir / "report.txt", out_dir / "report.json"};
            }},
    };

    bool ran_any = false;
    for (const auto &[name, fn] : stages) {
        const auto *rec = ran_any ? nullptr : m.find(name);
        if (rec != nullptr) {
            for (const auto &[rel, hash] : rec->outputs) {
                const auto p = out_dir / rel;
                if (!fs::exists(p)) {
                    throw stage_failure(name, "artifact " + rel + " is missing", exit_code::runtime_failure);
                }
                if (file_hash(p) != hash) {
                    throw stage_failure(name, "artifact " + rel + " was modified after the stage ran",
                        exit_code::runtime_failure);
                }
            }
            continue;
        }
        if (!ran_any) {
            // Everything from here on is recomputed.
            const auto it = std::find_if(m.stages.begin(), m.stages.end(),
                [&](const stage_record &s) { return s.name == name; });
            m.stages.erase(it, m.stages.end());
        }
        ran_any = true;
        std::vector<fs::path> files;
        try {
            files = fn();
        } catch (const usage_error &e) {
            throw stage_failure(name, e.what(), exit_code::usage);
        } catch (const config_error &e) {
            throw stage_failure(name, e.what(), exit_code::configuration);
        } catch (const llm_error &e) {
            throw stage_failure(name, e.what(),
                e.kind() == llm_error_kind::config ? exit_code::configuration : exit_code::runtime_failure);
        } catch (const std::exception &e) {
            throw stage_failure(name, e.what(), exit_code::runtime_failure);
        }
        stage_record rec_new{name, {}};
        for (const auto &f : files) {
            rec_new.outputs[fs::relative(f, out_dir).generic_string()] = file_hash(f);
        }
        m.stages.push_back(std::move(rec_new));
        save_manifest(m, manifest_path);
    }
    if (!ran_any) {
        out << "all stages up to date\n";
    }
    out << read_text(out_dir / "report.txt");
    return exit_code::ok;
}

// --- argument plumbing --------------------------------------------------------

struct provider_flags {
    std::string config;
    std::string kind;
    std::string mock_dir;
    std::string model;
    std::string endpoint;
    std::optional<double> temperature;
    std::string dump_prompts;

    void add_to(CLI::App *cmd)
    {
        cmd->add_option("--config", config, "Pipeline config file (JSON)")->check(CLI::ExistingFile);
        cmd->add_option("--provider", kind, "LLM provider: openai, gemini or mock");
        cmd->add_option("--mock-dir", mock_dir, "Directory of <prompt-hash>.txt mock responses");
        cmd->add_option("--model", model, "Model name");
        cmd->add_option("--endpoint", endpoint, "Provider endpoint URL");
        cmd->add_option("--temperature", temperature, "Sampling temperature in [0, 2]");
        cmd->add_option("--dump-prompts", dump_prompts, "Write each prompt to <dir>/<hash>.prompt.txt");
    }

    [[nodiscard]] provider_config resolve() const
    {
        provider_config p;
        if (!config.empty()) {
            p = pipeline_config::load(config).provider;
        }
        if (!kind.empty()) {
            const auto k = parse_provider_kind(kind);
            if (!k) {
                throw usage_error("unknown provider '" + kind + "'");
            }
            p.kind = *k;
        }
        if (!mock_dir.empty()) {
            p.mock_dir = mock_dir;
        }
        if (!model.empty()) {
            p.model = model;
        }
        if (!endpoint.empty()) {
            p.endpoint = endpoint;
        }
        if (temperature) {
            p.temperature = *temperature;
        }
        p.check();
        return p;
    }

    [[nodiscard]] std::optional<fs::path> dump_dir() const
    {
        return dump_prompts.empty() ? std::nullopt : std::optional<fs::path>(dump_prompts);
    }
};

attack_type parse_type_flag(const std::string &s)
{
    if (s == "reflected") {
        return attack_type::reflected;
    }
    if (s == "dom_based" || s == "dom") {
        return attack_type::dom_based;
    }
    throw usage_error("unknown attack type '" + s + "'");
}

std::optional<fs::path> opt_path(const std::string &s)
{
    return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Generate, validate and test XSS payloads against SecRule WAFs, and write rules that block them."};
    app.name("genxss");
    app.require_subcommand(1);
    app.set_version_flag("--version", "genxss 1.0.0");

    // generate
    auto *gen = app.add_subcommand("generate", "Ask the LLM for new payloads and append them to a corpus");
    provider_flags gen_p;
    gen_p.add_to(gen);
    std::string gen_examples, gen_type = "reflected", gen_out;
    std::size_t gen_count = 10;
    gen->add_option("--examples", gen_examples, "JSONL file of valid example payloads")
        ->required()
        ->check(CLI::ExistingFile);
    gen->add_option("--attack-type", gen_type, "reflected or dom_based");
    gen->add_option("--count", gen_count, "Number of payloads to request");
    gen->add_option("--out", gen_out, "Corpus to append to")->required();

    // validate
    auto *val = app.add_subcommand("validate", "Statically check payloads for executability");
    std::string val_in, val_out, val_ctx;
    val->add_option("--in", val_in, "Input corpus")->required()->check(CLI::ExistingFile);
    val->add_option("--out", val_out, "Output corpus")->required();
    val->add_option("--context", val_ctx,
        "Injection context for every payload (js_string_dq, js_string_sq, html_attribute, html_body, url_param)");

    // serve-app
    auto *serve = app.add_subcommand("serve-app", "Serve the deliberately vulnerable test app");
    std::string serve_routes, serve_host = "127.0.0.1";
    int serve_port = 8080;
    serve->add_option("--routes", serve_routes, "Route config (JSON)")->required()->check(CLI::ExistingFile);
    serve->add_option("--host", serve_host, "Bind address");
    serve->add_option("--port", serve_port, "Port, 0 for any free port");

    // test
    auto *tst = app.add_subcommand("test", "Send valid payloads to a WAF target and record outcomes");
    std::string tst_in, tst_out, tst_rules, tst_benign, tst_benign_out, tst_config;
    target_settings tst_target;
    std::vector<int> tst_blocked;
    tst->add_option("--config", tst_config, "Pipeline config file (JSON)")->check(CLI::ExistingFile);
    tst->add_option("--in", tst_in, "Validated corpus")->required()->check(CLI::ExistingFile);
    tst->add_option("--out", tst_out, "Results corpus")->required();
    tst->add_option("--target", tst_target.kind, "embedded or remote");
    tst->add_option("--ruleset", tst_rules, "SecRule file for the embedded target")->check(CLI::ExistingFile);
    tst->add_option("--url", tst_target.url, "Base URL for the remote target");
    tst->add_option("--concurrency", tst_target.concurrency, "Parallel requests for the remote target");
    tst->add_option("--blocked-status", tst_blocked, "Status codes that mean blocked (remote)");
    tst->add_option("--marker", tst_target.marker, "Reflection marker (remote); default is the payload");
    tst->add_option("--benign", tst_benign, "Benign corpus to test as well")->check(CLI::ExistingFile);
    tst->add_option("--benign-out", tst_benign_out, "Benign results corpus");

    // cluster
    auto *clu = app.add_subcommand("cluster", "Cluster the bypassing payloads of a results corpus");
    std::string clu_in, clu_out, clu_method = "tfidf_hac";
    clustering_settings clu_s;
    clu->add_option("--in", clu_in, "Results corpus")->required()->check(CLI::ExistingFile);
    clu->add_option("--out", clu_out, "Cluster file (JSON)")->required();
    clu->add_option("--method", clu_method, "tfidf_hac or seq_dbscan");
    clu->add_option("--threshold", clu_s.threshold, "Ward distance threshold");
    clu->add_option("--eps", clu_s.eps, "DBSCAN neighbourhood radius");
    clu->add_option("--min-samples", clu_s.min_samples, "DBSCAN core threshold");

    // rules
    auto *rul = app.add_subcommand("rules", "Ask the LLM for SecRules covering a cluster file");
    provider_flags rul_p;
    rul_p.add_to(rul);
    std::string rul_clusters, rul_out;
    rul->add_option("--clusters", rul_clusters, "Cluster file")->required()->check(CLI::ExistingFile);
    rul->add_option("--out", rul_out, "Ruleset file to write")->required();

    // refine
    auto *ref = app.add_subcommand("refine", "Run the rule refinement loop");
    provider_flags ref_p;
    ref_p.add_to(ref);
    std::string ref_results, ref_clusters, ref_benign, ref_out, ref_annotations;
    refine_settings ref_s;
    ref->add_option("--results", ref_results, "Results corpus")->required()->check(CLI::ExistingFile);
    ref->add_option("--clusters", ref_clusters, "Cluster file")->required()->check(CLI::ExistingFile);
    ref->add_option("--benign", ref_benign, "Benign corpus")->required()->check(CLI::ExistingFile);
    ref->add_option("--out-dir", ref_out, "Output directory")->required();
    ref->add_option("--annotations", ref_annotations, "Reviewer annotations (JSON list)");
    ref->add_option("--max-iterations", ref_s.max_iterations, "Iteration cap");
    ref->add_option("--target-recall", ref_s.target_recall, "Recall target");
    ref->add_option("--max-fp", ref_s.max_fp, "Allowed false positives");

    // metrics
    auto *met = app.add_subcommand("metrics", "Accuracy, precision, recall and F1");
    std::optional<std::size_t> m_tp, m_fp, m_tn, m_fn;
    std::string met_attacks, met_benign;
    bool met_json = false;
    met->add_option("--tp", m_tp, "True positives");
    met->add_option("--fp", m_fp, "False positives");
    met->add_option("--tn", m_tn, "True negatives");
    met->add_option("--fn", m_fn, "False negatives");
    met->add_option("--attacks", met_attacks, "Attack results corpus")->check(CLI::ExistingFile);
    met->add_option("--benign", met_benign, "Benign results corpus")->check(CLI::ExistingFile);
    met->add_flag("--json", met_json, "Print JSON");

    // report
    auto *rep = app.add_subcommand("report", "Summarize a run");
    report_inputs rep_in;
    std::string rep_corpus, rep_benign, rep_clusters, rep_refine, rep_json;
    rep->add_option("--results", rep_corpus, "Results corpus")->required()->check(CLI::ExistingFile);
    rep->add_option("--benign-results", rep_benign, "Benign results corpus")->check(CLI::ExistingFile);
    rep->add_option("--clusters", rep_clusters, "Cluster file")->check(CLI::ExistingFile);
    rep->add_option("--refine", rep_refine, "refine.json")->check(CLI::ExistingFile);
    rep->add_option("--json-out", rep_json, "Also write the JSON summary here");

    // lint
    auto *lnt = app.add_subcommand("lint", "Parse a ruleset and report lint warnings");
    std::string lnt_file;
    lnt->add_option("ruleset", lnt_file, "SecRule file")->required()->check(CLI::ExistingFile);

    // pipeline
    auto *pip = app.add_subcommand("pipeline", "Run every stage in order, skipping finished ones");
    std::string pip_config, pip_out, pip_dump;
    bool pip_force = false;
    pip->add_option("--config", pip_config, "Pipeline config file (JSON)")->required()->check(CLI::ExistingFile);
    pip->add_option("--out-dir", pip_out, "Artifact directory")->required();
    pip->add_flag("--force", pip_force, "Rerun every stage");
    pip->add_option("--dump-prompts", pip_dump, "Write each prompt to <dir>/<hash>.prompt.txt");

    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        return exit_code::usage;
    }

    if (gen->parsed()) {
        const auto provider = gen_p.resolve();
        const auto s = generate_stage(gen_examples, parse_type_flag(gen_type), gen_count, gen_out,
            make_llm_call(provider, gen_p.dump_dir()), provider.provider_id());
        out << "received " << s.received << " payloads, added " << s.added << " to " << gen_out << "\n";
        return exit_code::ok;
    }
    if (val->parsed()) {
        std::optional<injection_context> ctx;
        if (!val_ctx.empty()) {
            ctx = parse_injection_context(val_ctx);
            if (!ctx) {
                throw usage_error("unknown context '" + val_ctx + "'");
            }
        }
        const auto s = validate_stage(val_in, val_out, ctx);
        out << s.valid << " valid, " << s.invalid << " invalid\n";
        return exit_code::ok;
    }
    if (serve->parsed()) {
        vuln_app_server server(route_config::load(serve_routes), serve_host, serve_port);
        out << "listening on " << server.base_url() << std::endl;
        stop_requested = false;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!stop_requested) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
        return exit_code::ok;
    }
    if (tst->parsed()) {
        std::optional<fs::path> ruleset = opt_path(tst_rules);
        if (!tst_config.empty()) {
            const auto cfg = pipeline_config::load(tst_config);
            if (!ruleset) {
                ruleset = cfg.ruleset;
            }
            if (tst->count("--target") == 0) {
                tst_target = cfg.target;
            }
        }
        if (!tst_blocked.empty()) {
            tst_target.blocked_statuses = std::set<int>(tst_blocked.begin(), tst_blocked.end());
        }
        const auto s = test_stage(tst_in, tst_out, make_target(tst_target, ruleset), opt_path(tst_benign),
            opt_path(tst_benign_out));
        out << s.blocked << " blocked, " << s.bypassed << " bypassed, " << s.indeterminate
            << " indeterminate, " << s.skipped << " not tested\n";
        if (!tst_benign.empty()) {
            out << "benign: " << s.benign_blocked << " blocked, " << s.benign_passed << " passed\n";
        }
        return exit_code::ok;
    }
    if (clu->parsed()) {
        const auto method = parse_cluster_method(clu_method);
        if (!method) {
            throw usage_error("unknown clustering method '" + clu_method + "'");
        }
        clu_s.method = *method;
        const auto f = cluster_stage(clu_in, clu_out, clu_s);
        out << f.samples.size() << " payloads, " << f.result.assignment.cluster_count() << " clusters\n";
        return exit_code::ok;
    }
    if (rul->parsed()) {
        const auto provider = rul_p.resolve();
        const auto text = rules_stage(rul_clusters, rul_out, make_llm_call(provider, rul_p.dump_dir()));
        out << parse_ruleset(text).rules.size() << " rules written to " << rul_out << "\n";
        return exit_code::ok;
    }
    if (ref->parsed()) {
        const auto provider = ref_p.resolve();
        ref_s.annotations = opt_path(ref_annotations);
        const auto r = refine_stage(ref_results, ref_clusters, ref_benign, ref_out, ref_s,
            make_llm_call(provider, ref_p.dump_dir()), err);
        const auto counts = rule_count_report(r.state);
        out << r.state.iteration << " iterations, stop " << to_string(*r.state.stop) << ", "
            << counts.num_rules << " rules, " << counts.num_blocked << " blocked, " << counts.num_bypassing
            << " bypassing\n";
        return exit_code::ok;
    }
    if (met->parsed()) {
        confusion_matrix cm;
        if (!met_attacks.empty()) {
            const auto attacks = load_corpus(met_attacks).payloads();
            const auto benign = met_benign.empty()
                                    ? std::vector<payload>{}
                                    : load_corpus(met_benign, attack_type_field::forbidden).payloads();
            std::vector<payload> tested;
            for (const auto &p : attacks) {
                if (p.outcome.status != waf_status::untested) {
                    tested.push_back(p);
                }
            }
            cm = compute_confusion(tested, benign);
        } else {
            if (!m_tp || !m_fp || !m_tn || !m_fn) {
                throw usage_error("give --tp, --fp, --tn and --fn, or --attacks");
            }
            cm = {*m_tp, *m_fp, *m_tn, *m_fn};
        }
        const auto m = metrics(cm);
        if (met_json) {
            out << metrics_to_json(cm, m);
        } else {
            out << format_metrics_text(cm, m);
        }
        return exit_code::ok;
    }
    if (rep->parsed()) {
        rep_in.corpus = rep_corpus;
        rep_in.benign_results = opt_path(rep_benign);
        rep_in.clusters = opt_path(rep_clusters);
        rep_in.refine = opt_path(rep_refine);
        const auto r = report_stage(rep_in);
        out << r.text;
        if (!rep_json.empty()) {
            write_text(rep_json, r.json);
        }
        return exit_code::ok;
    }
    if (lnt->parsed()) {
        const auto rules = parse_ruleset(read_text(lnt_file));
        const auto warnings = lint_ruleset(rules);
        for (const auto &w : warnings) {
            out << to_string(w) << "\n";
        }
        out << rules.rules.size() << " rules, " << warnings.size() << " warnings\n";
        return exit_code::ok;
    }
    if (pip->parsed()) {
        pipeline_config cfg;
        try {
            cfg = pipeline_config::load(pip_config);
        } catch (const config_error &) {
            throw;
        } catch (const error &e) {
            throw config_error(e.what());
        }
        return run_pipeline(cfg, pip_out, pip_force, opt_path(pip_dump), out, err);
    }
    return exit_code::usage;
}

} // namespace

pipeline_config pipeline_config::parse(const std::string &json_text, const fs::path &base_dir)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw config_error(std::string("config: ") + e.what());
    }
    check_keys(doc, {"provider", "examples", "benign", "ruleset", "routes", "generation", "target",
                        "clustering", "refine"},
        "config");
    pipeline_config cfg;
    cfg.provider = parse_provider(doc.value("provider", json::object()), base_dir);

    auto path_field = [&](const char *key, bool required) -> std::optional<fs::path> {
        if (!doc.contains(key)) {
            if (required) {
                throw config_error(std::string("config: missing '") + key + "'");
            }
            return std::nullopt;
        }
        if (!doc[key].is_string()) {
            throw config_error(std::string("config.") + key + ": expected a path string");
        }
        return resolve(base_dir, doc[key].get<std::string>());
    };
    cfg.examples = *path_field("examples", true);
    cfg.benign = *path_field("benign", true);
    cfg.ruleset = path_field("ruleset", false).value_or(fs::path());
    cfg.routes = path_field("routes", false);

    if (doc.contains("generation")) {
        const auto &g = doc["generation"];
        check_keys(g, {"reflected", "dom_based"}, "generation");
        read_opt(g, "reflected", cfg.reflected_count, "generation");
        read_opt(g, "dom_based", cfg.dom_count, "generation");
    }
    if (doc.contains("target")) {
        const auto &t = doc["target"];
        check_keys(t, {"kind", "url", "blocked_statuses", "marker", "concurrency", "timeout_seconds"}, "target");
        read_opt(t, "kind", cfg.target.kind, "target");
        read_opt(t, "url", cfg.target.url, "target");
        read_opt(t, "blocked_statuses", cfg.target.blocked_statuses, "target");
        read_opt(t, "marker", cfg.target.marker, "target");
        read_opt(t, "concurrency", cfg.target.concurrency, "target");
        read_opt(t, "timeout_seconds", cfg.target.timeout_seconds, "target");
        if (cfg.target.kind != "embedded" && cfg.target.kind != "remote") {
            throw config_error("target.kind: expected embedded or remote");
        }
        if (cfg.target.blocked_statuses.empty()) {
            throw config_error("target.blocked_statuses: must not be empty");
        }
        if (cfg.target.concurrency == 0 || !(cfg.target.timeout_seconds > 0.0)) {
            throw config_error("target: concurrency and timeout must be positive");
        }
    }
    if (cfg.target.kind == "embedded" && cfg.ruleset.empty()) {
        throw config_error("config: the embedded target needs 'ruleset'");
    }
    if (doc.contains("clustering")) {
        const auto &c = doc["clustering"];
        check_keys(c, {"method", "threshold", "eps", "min_samples"}, "clustering");
        std::string method = "tfidf_hac";
        read_opt(c, "method", method, "clustering");
        const auto m = parse_cluster_method(method);
        if (!m) {
            throw config_error("clustering.method: unknown method '" + method + "'");
        }
        cfg.clustering.method = *m;
        read_opt(c, "threshold", cfg.clustering.threshold, "clustering");
        read_opt(c, "eps", cfg.clustering.eps, "clustering");
        read_opt(c, "min_samples", cfg.clustering.min_samples, "clustering");
        if (!(cfg.clustering.threshold > 0.0) || !(cfg.clustering.eps > 0.0) || cfg.clustering.min_samples == 0) {
            throw config_error("clustering: threshold, eps and min_samples must be positive");
        }
    }
    if (doc.contains("refine")) {
        const auto &r = doc["refine"];
        check_keys(r, {"max_iterations", "target_recall", "max_fp", "annotations"}, "refine");
        read_opt(r, "max_iterations", cfg.refine.max_iterations, "refine");
        read_opt(r, "target_recall", cfg.refine.target_recall, "refine");
        read_opt(r, "max_fp", cfg.refine.max_fp, "refine");
        if (r.contains("annotations")) {
            std::string a;
            read_opt(r, "annotations", a, "refine");
            cfg.refine.annotations = resolve(base_dir, a);
        }
        if (cfg.refine.max_iterations == 0 ||
            !(cfg.refine.target_recall >= 0.0 && cfg.refine.target_recall <= 1.0)) {
            throw config_error("refine: max_iterations must be positive and target_recall within [0, 1]");
        }
    }
    return cfg;
}

pipeline_config pipeline_config::load(const fs::path &path)
{
    std::string text;
    try {
        text = read_text(path);
    } catch (const io_error &e) {
        throw config_error(e.what());
    }
    return parse(text, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::string pipeline_config::canonical() const
{
    ordered_json doc;
    doc["provider"] = {{"kind", std::string(to_string(provider.kind))}, {"endpoint", provider.endpoint},
        {"model", provider.model}, {"temperature", provider.temperature}, {"api_key_env", provider.api_key_env},
        {"timeout_ms", provider.timeout.count()}, {"max_retries", provider.max_retries},
        {"mock_dir", provider.mock_dir.generic_string()}};
    doc["examples"] = examples.generic_string();
    doc["benign"] = benign.generic_string();
    doc["ruleset"] = ruleset.generic_string();
    doc["routes"] = routes ? routes->generic_string() : "";
    doc["generation"] = {{"reflected", reflected_count}, {"dom_based", dom_count}};
    doc["target"] = {{"kind", target.kind}, {"url", target.url}, {"blocked_statuses", target.blocked_statuses},
        {"marker", target.marker}, {"concurrency", target.concurrency},
        {"timeout_seconds", target.timeout_seconds}};
    doc["clustering"] = {{"method", std::string(to_string(clustering.method))},
        {"threshold", clustering.threshold}, {"eps", clustering.eps}, {"min_samples", clustering.min_samples}};
    doc["refine"] = {{"max_iterations", refine.max_iterations}, {"target_recall", refine.target_recall},
        {"max_fp", refine.max_fp},
        {"annotations", refine.annotations ? refine.annotations->generic_string() : ""}};
    return doc.dump();
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    try {
        return dispatch(args, out, err);
    } catch (const stage_failure &e) {
        err << "error: " << e.what() << "\n";
        return e.code();
    } catch (const usage_error &e) {
        err << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const config_error &e) {
        err << "configuration error: " << e.what() << "\n";
        return exit_code::configuration;
    } catch (const llm_error &e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == llm_error_kind::config ? exit_code::configuration : exit_code::runtime_failure;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return exit_code::runtime_failure;
    }
}

int run_cli(int argc, char **argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace genxss::cli
