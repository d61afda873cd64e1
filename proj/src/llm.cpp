// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/llm.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include "http_util.hpp"

namespace genxss {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view openai_default_endpoint = "https://api.openai.com/v1/chat/completions";
constexpr std::string_view gemini_default_base = "https://generativelanguage.googleapis.com/v1beta/models/";

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.push_back(line);
        if (end == text.size()) {
            break;
        }
        start = end + 1;
    }
    return out;
}

std::string_view trim_left(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    return s;
}

std::string_view trim(std::string_view s)
{
    s = trim_left(s);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_fence(std::string_view line)
{
    return trim_left(line).starts_with("```");
}

// Strips a list marker (`12.`, `3)`, `-`, `*`) plus one following blank.
std::optional<std::string_view> strip_list_marker(std::string_view line)
{
    auto s = trim_left(line);
    std::size_t i = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
        ++i;
    }
    if (i > 0) {
        if (i + 1 < s.size() && (s[i] == '.' || s[i] == ')') && (s[i + 1] == ' ' || s[i + 1] == '\t')) {
            return s.substr(i + 2);
        }
        return std::nullopt;
    }
    if (s.size() >= 2 && (s[0] == '-' || s[0] == '*') && (s[1] == ' ' || s[1] == '\t')) {
        return s.substr(2);
    }
    return std::nullopt;
}

bool looks_like_payload(std::string_view line)
{
    const auto t = trim(line);
    if (t.empty() || t.back() == ':') {
        return false;
    }
    return t.find_first_of("<>()%`=\\;") != std::string_view::npos;
}

std::string numbered(const std::vector<std::string> &items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += std::to_string(i + 1) + ". " + items[i] + "\n";
    }
    return out;
}

std::string read_env(const char *name)
{
    const char *v = std::getenv(name);
    return v == nullptr ? std::string() : std::string(v);
}

std::string resolve_endpoint(const provider_config &cfg)
{
    if (!cfg.endpoint.empty()) {
        return cfg.endpoint;
    }
    if (auto env = read_env("GENXSS_LLM_ENDPOINT"); !env.empty()) {
        return env;
    }
    if (cfg.kind == provider_kind::gemini) {
        return std::string(gemini_default_base) + cfg.model + ":generateContent";
    }
    return std::string(openai_default_endpoint);
}

struct wire_request {
    httplib::Headers headers;
    std::string body;
};

wire_request openai_request(const prompt_spec &prompt, const provider_config &cfg, const std::string &key)
{
    ordered_json body;
    body["model"] = cfg.model;
    body["temperature"] = cfg.temperature;
    body["messages"] = ordered_json::array({
        {{"role", "system"}, {"content", prompt.system_role}},
        {{"role", "user"}, {"content", prompt.user_message()}},
    });
    return {{{"Authorization", "Bearer " + key}}, body.dump()};
}

wire_request gemini_request(const prompt_spec &prompt, const provider_config &cfg, const std::string &key)
{
    ordered_json body;
    body["systemInstruction"] = {{"parts", ordered_json::array({{{"text", prompt.system_role}}})}};
    body["contents"] = ordered_json::array(
        {{{"role", "user"}, {"parts", ordered_json::array({{{"text", prompt.user_message()}}})}}});
    body["generationConfig"] = {{"temperature", cfg.temperature}};
    return {{{"x-goog-api-key", key}}, body.dump()};
}

llm_response parse_reply(const std::string &text, const provider_config &cfg)
{
    llm_response r;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (cfg.kind == provider_kind::gemini) {
            r.text = doc.at("candidates").at(0).at("content").at("parts").at(0).at("text").get<std::string>();
            if (const auto u = doc.find("usageMetadata"); u != doc.end()) {
                r.prompt_tokens = u->value("promptTokenCount", std::size_t{0});
                r.completion_tokens = u->value("candidatesTokenCount", std::size_t{0});
            }
        } else {
            r.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            if (const auto u = doc.find("usage"); u != doc.end()) {
                r.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
                r.completion_tokens = u->value("completion_tokens", std::size_t{0});
            }
        }
    } catch (const nlohmann::json::exception &e) {
        throw llm_error(llm_error_kind::bad_response, e.what());
    }
    return r;
}

llm_response complete_mock(const prompt_spec &prompt, const provider_config &cfg)
{
    const auto h = prompt.hash();
    const auto path = cfg.mock_dir / (h + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw llm_error(llm_error_kind::missing_fixture,
            "no mock response for prompt " + h + " in " + cfg.mock_dir.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return {ss.str(), cfg.provider_id(), h, std::nullopt, std::nullopt};
}

llm_response complete_remote(const prompt_spec &prompt, const provider_config &cfg)
{
    const auto key = read_env(cfg.api_key_env.c_str());
    if (key.empty()) {
        throw llm_error(llm_error_kind::config, "environment variable " + cfg.api_key_env + " is not set");
    }
    detail::url_parts url;
    try {
        url = detail::split_url(resolve_endpoint(cfg));
    } catch (const config_error &e) {
        throw llm_error(llm_error_kind::config, e.what());
    }
    const auto req = cfg.kind == provider_kind::gemini ? gemini_request(prompt, cfg, key)
                                                       : openai_request(prompt, cfg, key);
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg.timeout);
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);

    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(url.path, req.headers, req.body, "application/json");
        if (!res) {
            const auto err = res.error();
            const auto what = httplib::to_string(err);
            if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
                throw llm_error(llm_error_kind::timeout, what);
            }
            throw llm_error(llm_error_kind::network, what);
        }
        const int status = res->status;
        if (status >= 200 && status < 300) {
            auto r = parse_reply(res->body, cfg);
            r.provider = cfg.provider_id();
            r.prompt_hash = prompt.hash();
            return r;
        }
        const bool retryable = status == 429 || status >= 500;
        if (!retryable) {
            throw llm_error(llm_error_kind::client_error, "HTTP " + std::to_string(status));
        }
        if (attempt >= cfg.max_retries) {
            throw llm_error(llm_error_kind::retries_exhausted,
                "HTTP " + std::to_string(status) + " after " + std::to_string(attempt + 1) + " attempts");
        }
        std::this_thread::sleep_for(cfg.backoff_base * (1LL << std::min(attempt, 20)));
    }
}

} // namespace

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string prompt_spec::serialize() const
{
    ordered_json doc;
    doc["system_role"] = system_role;
    doc["sections"] = ordered_json::array();
    for (const auto &s : sections) {
        doc["sections"].push_back({{"title", s.title}, {"body", s.body}});
    }
    doc["examples"] = examples;
    doc["requested_count"] = requested_count;
    return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string prompt_spec::hash() const
{
    return sha256_hex(serialize());
}

std::string prompt_spec::user_message() const
{
    std::string out;
    for (const auto &s : sections) {
        if (!out.empty()) {
            out += "\n";
        }
        out += "## " + s.title + "\n" + s.body;
        if (!s.body.empty() && s.body.back() != '\n') {
            out += "\n";
        }
    }
    return out;
}

std::vector<std::string> default_obfuscation_techniques()
{
    return {
        "Percent-encode characters, including double encoding such as %253C.",
        "Use %uXXXX Unicode escapes for single characters.",
        "Insert JavaScript comments such as /**/ between tokens.",
        "Insert encoded line breaks and whitespace such as %0a, %0d and %09.",
        "Write identifiers with \\uXXXX escape sequences.",
        "Use HTML character references such as &#40; or &lpar;.",
        "Mix upper and lower case in tag, attribute and function names.",
        "Invoke functions indirectly, for example with template literals.",
    };
}

prompt_spec build_attack_prompt(const std::vector<payload> &examples, attack_type type,
    std::size_t count, const std::vector<std::string> &obfuscation_techniques)
{
    if (examples.empty()) {
        throw std::invalid_argument("attack prompt needs at least one example");
    }
    if (count == 0) {
        throw std::invalid_argument("attack prompt needs a positive count");
    }
    for (const auto &e : examples) {
        if (e.validation.status != validation_status::valid) {
            throw std::invalid_argument("example " + e.id + " is not a valid attack");
        }
    }
    const bool reflected = type == attack_type::reflected;
    const std::string kind = reflected ? "reflected" : "DOM-based";
    const std::string sink = reflected
                                 ? "The value is reflected inside a double-quoted JavaScript string in a script block."
                                 : "The value is read from the URL by client-side code and written into the href of a link.";

    prompt_spec p;
    p.system_role = "You are a penetration tester assessing a web application firewall in an "
                    "authorized test environment.";
    std::vector<std::string> raws;
    for (const auto &e : examples) {
        raws.push_back(e.raw);
    }
    p.examples = raws;
    p.requested_count = count;

    p.sections.push_back({"Problem description",
        "We need " + kind + " cross-site scripting payloads for a query parameter. " + sink +
            " Each example below is a working payload that a browser executes:\n" + numbered(raws)});

    std::string techniques = "Study the examples and produce new payloads that keep them working "
                             "while obscuring them from signature matching. Apply these techniques, "
                             "alone or combined:\n";
    for (const auto &t : obfuscation_techniques) {
        techniques += "- " + t + "\n";
    }
    p.sections.push_back({"Instructions for in-context learning", techniques});

    p.sections.push_back({"Tasks",
        "Generate exactly " + std::to_string(count) + " new " + kind +
            " payloads. Each payload must be a single line, URL-encoded as it would be sent. "
            "Return them inside one code block, one payload per line, with no numbering and no "
            "commentary.\n"});
    return p;
}

prompt_spec build_rule_prompt(const std::vector<cluster_summary> &summaries,
    const std::vector<std::string> &samples)
{
    if (summaries.empty()) {
        throw std::invalid_argument("rule prompt needs at least one cluster summary");
    }
    prompt_spec p;
    p.system_role = "You are a security expert who writes ModSecurity rules.";
    p.sections.push_back({"System Role",
        "Act as a web application firewall engineer. You analyse groups of cross-site scripting "
        "payloads that currently bypass the firewall and write SecRules that block them.\n"});

    std::string clusters;
    for (const auto &s : summaries) {
        if (!clusters.empty()) {
            clusters += "\n";
        }
        clusters += s.id < 0 ? "Unclustered payloads" : "Cluster " + std::to_string(s.id);
        clusters += " (" + std::to_string(s.size) + " payloads)\n";
        clusters += "Shared tokens:";
        for (const auto &t : s.shared_tokens) {
            clusters += " " + t;
        }
        clusters += "\nRepresentative payloads:\n";
        for (auto idx : s.representatives) {
            if (idx >= samples.size()) {
                throw std::invalid_argument("summary member outside the sample list");
            }
            clusters += "    " + samples[idx] + "\n";
        }
    }
    p.sections.push_back({"Cluster Characteristics", clusters});

    p.sections.push_back({"Task Definition",
        "Write SecRules that block every payload family described above while letting ordinary "
        "query strings through. Aim for a high true-positive rate and minimal false positives. "
        "Use phase:2, deny and status:403, give every rule a unique numeric id, and use only the "
        "variables ARGS, ARGS_NAMES, QUERY_STRING, REQUEST_URI and REQUEST_HEADERS with the "
        "operators @rx, @contains, @pm, @beginsWith and @endsWith. Normalize input with "
        "t:urlDecodeUni, t:jsDecode, t:htmlEntityDecode, t:lowercase, t:removeComments or "
        "t:removeWhitespace where needed. Every rule must be syntactically correct. Return all "
        "rules as a continuous block in one code block, with a comment line before each rule "
        "explaining what it catches.\n"});
    return p;
}

std::string feedback_to_json(const feedback_report &f)
{
    ordered_json doc;
    doc["iteration"] = f.iteration;
    auto list = [](const std::vector<payload> &ps) {
        auto arr = ordered_json::array();
        for (const auto &p : ps) {
            arr.push_back({{"id", p.id}, {"raw", p.raw}});
        }
        return arr;
    };
    doc["false_negatives"] = list(f.false_negatives);
    doc["false_positives"] = list(f.false_positives);
    doc["lint_warnings"] = f.lint_warnings;
    doc["parse_errors"] = f.parse_errors;
    doc["human_notes"] = ordered_json::array();
    for (const auto &n : f.human_notes) {
        doc["human_notes"].push_back({{"target_id", n.target_id}, {"note", n.note}});
    }
    return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

prompt_spec build_refine_prompt(std::string_view previous_rules, const feedback_report &feedback)
{
    if (feedback.empty()) {
        throw std::invalid_argument("nothing to refine");
    }
    prompt_spec p;
    p.system_role = "You are a security expert who writes ModSecurity rules.";
    p.sections.push_back({"System Role",
        "Act as a web application firewall engineer revising your own SecRules after they were "
        "tested against attack and benign traffic.\n"});
    std::string rules(previous_rules);
    if (rules.empty()) {
        rules = "(no rules could be parsed from the previous answer)\n";
    } else if (rules.back() != '\n') {
        rules += "\n";
    }
    p.sections.push_back({"Previous Rules", rules});

    std::string fb = "Iteration " + std::to_string(feedback.iteration) + " results.\n";
    if (!feedback.false_negatives.empty()) {
        fb += "\nPayloads that still bypass the rules:\n";
        for (const auto &x : feedback.false_negatives) {
            fb += "    [" + x.id + "] " + x.raw + "\n";
        }
    }
    if (!feedback.false_positives.empty()) {
        fb += "\nBenign requests that were blocked:\n";
        for (const auto &x : feedback.false_positives) {
            fb += "    [" + x.id + "] " + x.raw + "\n";
        }
    }
    if (!feedback.lint_warnings.empty()) {
        fb += "\nLint warnings:\n";
        for (const auto &w : feedback.lint_warnings) {
            fb += "- " + w + "\n";
        }
    }
    if (!feedback.parse_errors.empty()) {
        fb += "\nParse errors:\n";
        for (const auto &e : feedback.parse_errors) {
            fb += "- " + e + "\n";
        }
    }
    if (!feedback.human_notes.empty()) {
        fb += "\nReviewer notes:\n";
        for (const auto &n : feedback.human_notes) {
            fb += "- " + n.target_id + ": " + n.note + "\n";
        }
    }
    p.sections.push_back({"Feedback", fb});

    p.sections.push_back({"Task Definition",
        "Correct the rules so the bypassing payloads are blocked and the benign requests pass. "
        "Do not lose any payload the previous rules already blocked. Fix every lint warning and "
        "parse error. Return the complete revised rule set as a continuous block in one code "
        "block, with a comment line before each rule.\n"});
    return p;
}

std::string_view to_string(provider_kind k) noexcept
{
    switch (k) {
    case provider_kind::openai:
        return "openai";
    case provider_kind::gemini:
        return "gemini";
    case provider_kind::mock:
        return "mock";
    }
    return "";
}

std::optional<provider_kind> parse_provider_kind(std::string_view s) noexcept
{
    for (auto k : {provider_kind::openai, provider_kind::gemini, provider_kind::mock}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

void provider_config::check() const
{
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw config_error("temperature must be within [0, 2]");
    }
    if (max_retries < 0) {
        throw config_error("max_retries must not be negative");
    }
    if (timeout.count() <= 0) {
        throw config_error("timeout must be positive");
    }
    if (kind == provider_kind::mock && mock_dir.empty()) {
        throw config_error("mock provider needs a response directory");
    }
}

std::string provider_config::provider_id() const
{
    if (kind == provider_kind::mock) {
        return "mock";
    }
    return std::string(to_string(kind)) + ":" + model;
}

std::string_view to_string(llm_error_kind k) noexcept
{
    switch (k) {
    case llm_error_kind::config:
        return "configuration error";
    case llm_error_kind::timeout:
        return "timeout";
    case llm_error_kind::client_error:
        return "request rejected";
    case llm_error_kind::retries_exhausted:
        return "retries exhausted";
    case llm_error_kind::network:
        return "network error";
    case llm_error_kind::missing_fixture:
        return "missing mock response";
    case llm_error_kind::bad_response:
        return "malformed response";
    }
    return "";
}

llm_response complete(const prompt_spec &prompt, const provider_config &cfg)
{
    try {
        cfg.check();
    } catch (const config_error &e) {
        throw llm_error(llm_error_kind::config, e.what());
    }
    if (cfg.kind == provider_kind::mock) {
        return complete_mock(prompt, cfg);
    }
    return complete_remote(prompt, cfg);
}

std::vector<std::string> parse_payload_list(std::string_view text)
{
    const auto lines = split_lines(text);
    std::vector<std::string> out;

    bool has_fence = false;
    for (auto l : lines) {
        has_fence = has_fence || is_fence(l);
    }
    if (has_fence) {
        bool inside = false;
        for (auto l : lines) {
            if (is_fence(l)) {
                inside = !inside;
                continue;
            }
            if (!inside || trim(l).empty()) {
                continue;
            }
            const auto stripped = strip_list_marker(l);
            out.emplace_back(stripped ? *stripped : l);
        }
    } else {
        for (auto l : lines) {
            if (const auto stripped = strip_list_marker(l); stripped && !stripped->empty()) {
                out.emplace_back(*stripped);
            }
        }
        if (out.empty()) {
            for (auto l : lines) {
                if (looks_like_payload(l)) {
                    out.emplace_back(trim(l));
                }
            }
        }
    }
    std::erase_if(out, [](const std::string &s) { return s.empty(); });
    if (out.empty()) {
        throw extraction_error("no payloads in response");
    }
    return out;
}

std::string render_payload_list(const std::vector<std::string> &payloads)
{
    return numbered(payloads);
}

extracted_ruleset parse_ruleset_block(std::string_view text)
{
    std::string block;
    bool continuing = false;
    bool any_rule = false;
    for (auto l : split_lines(text)) {
        if (is_fence(l)) {
            continuing = false;
            continue;
        }
        const auto t = trim_left(l);
        const bool keep = continuing || t.starts_with("SecRule") || t.starts_with("#");
        if (!keep) {
            continue;
        }
        any_rule = any_rule || t.starts_with("SecRule");
        block += std::string(l) + "\n";
        continuing = !trim(l).empty() && trim(l).back() == '\\';
    }
    if (!any_rule) {
        throw extraction_error("no SecRule lines in response");
    }
    try {
        auto rules = parse_ruleset(block);
        return {std::move(block), std::move(rules)};
    } catch (const parse_error &e) {
        throw extraction_error(std::string("extracted rules do not parse: ") + e.what());
    }
}

} // namespace genxss
