// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/payload.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "genxss/normalizer.hpp"

namespace genxss {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view attack_types[] = {"reflected", "dom_based"};

bool id_less(const payload &a, const payload &b) { return a.id < b.id; }

ordered_json source_to_json(const payload_source &s)
{
    if (s.kind == source_kind::manual) {
        return "manual";
    }
    ordered_json inner = ordered_json::object();
    inner["provider"] = s.provider;
    inner["prompt_id"] = s.prompt_id;
    ordered_json out = ordered_json::object();
    out["llm_generated"] = std::move(inner);
    return out;
}

ordered_json validation_to_json(const validation_state &v)
{
    switch (v.status) {
    case validation_status::unchecked:
        return "unchecked";
    case validation_status::valid:
        return "valid";
    case validation_status::invalid: {
        ordered_json out = ordered_json::object();
        out["invalid"] = v.reason;
        return out;
    }
    }
    return nullptr;
}

ordered_json outcome_to_json(const waf_outcome &o)
{
    ordered_json out = ordered_json::object();
    switch (o.status) {
    case waf_status::untested:
        return "untested";
    case waf_status::bypassed:
        return "bypassed";
    case waf_status::blocked:
        out["blocked"] = o.rule_ids;
        return out;
    case waf_status::indeterminate:
        out["indeterminate"] = o.reason;
        return out;
    }
    return nullptr;
}

[[noreturn]] void fail(std::size_t line, const std::string &reason)
{
    throw parse_error(reason, line);
}

const ordered_json &single_key(const ordered_json &j, std::string_view key, std::size_t line,
    std::string_view field)
{
    if (!j.is_object() || j.size() != 1 || !j.contains(key)) {
        fail(line, "bad value for '" + std::string(field) + "'");
    }
    return j.at(std::string(key));
}

payload_source source_from_json(const ordered_json &j, std::size_t line)
{
    if (j.is_string() && j.get<std::string>() == "manual") {
        return payload_source::manual();
    }
    const auto &inner = single_key(j, "llm_generated", line, "source");
    if (!inner.is_object() || inner.size() != 2 || !inner.contains("provider") ||
        !inner.contains("prompt_id") || !inner["provider"].is_string() ||
        !inner["prompt_id"].is_string()) {
        fail(line, "bad value for 'source'");
    }
    return payload_source::llm(inner["provider"].get<std::string>(),
        inner["prompt_id"].get<std::string>());
}

validation_state validation_from_json(const ordered_json &j, std::size_t line)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "unchecked") {
            return validation_state::unchecked();
        }
        if (s == "valid") {
            return validation_state::valid();
        }
        fail(line, "bad value for 'validation'");
    }
    const auto &reason = single_key(j, "invalid", line, "validation");
    if (!reason.is_string()) {
        fail(line, "bad value for 'validation'");
    }
    return validation_state::invalid(reason.get<std::string>());
}

waf_outcome outcome_from_json(const ordered_json &j, std::size_t line)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "untested") {
            return waf_outcome::untested();
        }
        if (s == "bypassed") {
            return waf_outcome::bypassed();
        }
        fail(line, "bad value for 'waf_outcome'");
    }
    if (j.is_object() && j.contains("blocked")) {
        const auto &ids = single_key(j, "blocked", line, "waf_outcome");
        if (!ids.is_array()) {
            fail(line, "bad value for 'waf_outcome'");
        }
        std::vector<std::uint32_t> out;
        for (const auto &id : ids) {
            if (!id.is_number_unsigned()) {
                fail(line, "bad rule id in 'waf_outcome'");
            }
            out.push_back(id.get<std::uint32_t>());
        }
        return waf_outcome::blocked(std::move(out));
    }
    const auto &reason = single_key(j, "indeterminate", line, "waf_outcome");
    if (!reason.is_string()) {
        fail(line, "bad value for 'waf_outcome'");
    }
    return waf_outcome::indeterminate(reason.get<std::string>());
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::filesystem::path meta_path(const std::filesystem::path &path)
{
    auto p = path;
    p += ".meta.json";
    return p;
}

} // namespace

std::string_view to_string(attack_type t) noexcept
{
    return attack_types[static_cast<int>(t)];
}

std::optional<attack_type> parse_attack_type(std::string_view s) noexcept
{
    if (s == "reflected") {
        return attack_type::reflected;
    }
    if (s == "dom_based") {
        return attack_type::dom_based;
    }
    return std::nullopt;
}

std::string_view to_string(waf_status s) noexcept
{
    switch (s) {
    case waf_status::untested:
        return "untested";
    case waf_status::blocked:
        return "blocked";
    case waf_status::bypassed:
        return "bypassed";
    case waf_status::indeterminate:
        return "indeterminate";
    }
    return "";
}

void check_payload(const payload &p)
{
    if (p.id.empty()) {
        throw invariant_error("payload id is empty");
    }
    if (p.raw.empty()) {
        throw invariant_error("payload '" + p.id + "' has an empty raw string");
    }
    if (p.raw.find_first_of("\r\n") != std::string::npos) {
        throw invariant_error("payload '" + p.id + "' contains raw CR/LF bytes");
    }
    // Benign samples are tested without validation; the rule only binds attacks.
    if (!p.is_benign() && p.outcome.status != waf_status::untested &&
        p.validation.status != validation_status::valid) {
        throw invariant_error("payload '" + p.id + "' reached the WAF stage without validation");
    }
    if (p.validation.status == validation_status::invalid && p.validation.reason.empty()) {
        throw invariant_error("payload '" + p.id + "' is invalid without a reason");
    }
}

corpus::corpus(std::vector<payload> payloads)
{
    for (auto &p : payloads) {
        add(std::move(p));
    }
}

void corpus::add(payload p)
{
    check_payload(p);
    auto it = std::lower_bound(payloads_.begin(), payloads_.end(), p, id_less);
    if (it != payloads_.end() && it->id == p.id) {
        throw invariant_error("duplicate payload id '" + p.id + "'");
    }
    payloads_.insert(it, std::move(p));
}

const payload *corpus::find(std::string_view id) const
{
    auto it = std::lower_bound(payloads_.begin(), payloads_.end(), id,
        [](const payload &p, std::string_view key) { return p.id < key; });
    if (it == payloads_.end() || it->id != id) {
        return nullptr;
    }
    return &*it;
}

std::string serialize_payload(const payload &p)
{
    ordered_json j = ordered_json::object();
    j["id"] = p.id;
    j["raw"] = p.raw;
    if (p.type) {
        j["attack_type"] = std::string(to_string(*p.type));
    }
    j["source"] = source_to_json(p.source);
    j["validation"] = validation_to_json(p.validation);
    j["waf_outcome"] = outcome_to_json(p.outcome);
    try {
        return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    } catch (const nlohmann::json::exception &e) {
        throw invariant_error("payload '" + p.id + "' is not valid UTF-8");
    }
}

payload parse_payload_line(std::string_view line, std::size_t line_no, attack_type_field policy)
{
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
        fail(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        fail(line_no, "record is not a JSON object");
    }

    static const std::set<std::string> known{
        "id", "raw", "attack_type", "source", "validation", "waf_outcome"};
    for (const auto &item : j.items()) {
        if (known.count(item.key()) == 0) {
            fail(line_no, "unknown field '" + item.key() + "'");
        }
    }
    for (const char *field : {"id", "raw", "source", "validation", "waf_outcome"}) {
        if (!j.contains(field)) {
            fail(line_no, std::string("missing field '") + field + "'");
        }
    }
    if (!j["id"].is_string() || !j["raw"].is_string()) {
        fail(line_no, "'id' and 'raw' must be strings");
    }

    payload p;
    p.id = j["id"].get<std::string>();
    p.raw = j["raw"].get<std::string>();
    if (j.contains("attack_type")) {
        if (policy == attack_type_field::forbidden) {
            fail(line_no, "benign sample must not carry 'attack_type'");
        }
        const auto &at = j["attack_type"];
        std::optional<attack_type> t;
        if (at.is_string()) {
            t = parse_attack_type(at.get<std::string>());
        }
        if (!t) {
            fail(line_no, "bad value for 'attack_type'");
        }
        p.type = t;
    } else if (policy == attack_type_field::required) {
        fail(line_no, "missing field 'attack_type'");
    }
    p.source = source_from_json(j["source"], line_no);
    p.validation = validation_from_json(j["validation"], line_no);
    p.outcome = outcome_from_json(j["waf_outcome"], line_no);
    try {
        check_payload(p);
    } catch (const invariant_error &e) {
        fail(line_no, e.what());
    }
    return p;
}

corpus load_corpus(const std::filesystem::path &path, attack_type_field policy)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open corpus '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    corpus c;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        auto p = parse_payload_line(line, line_no, policy);
        if (c.find(p.id) != nullptr) {
            throw parse_error("duplicate id '" + p.id + "'", line_no);
        }
        c.add(std::move(p));
    }

    const auto meta = meta_path(path);
    if (std::filesystem::exists(meta)) {
        std::ifstream min(meta);
        try {
            auto j = nlohmann::json::parse(min);
            c.metadata = j.get<std::map<std::string, std::string>>();
        } catch (const nlohmann::json::exception &e) {
            throw parse_error("bad corpus metadata '" + meta.string() + "': " + e.what());
        }
    }
    return c;
}

void save_corpus(const corpus &c, const std::filesystem::path &path)
{
    std::string text;
    for (const auto &p : c.payloads()) {
        text += serialize_payload(p);
        text += '\n';
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot write corpus '" + path.string() + "'");
    }
    out << text;
    out.flush();
    if (!out) {
        throw io_error("write failed for corpus '" + path.string() + "'");
    }

    const auto meta = meta_path(path);
    if (c.metadata.empty()) {
        std::error_code ec;
        std::filesystem::remove(meta, ec);
        return;
    }
    std::ofstream mout(meta, std::ios::trunc);
    if (!mout) {
        throw io_error("cannot write corpus metadata '" + meta.string() + "'");
    }
    mout << nlohmann::json(c.metadata).dump(2) << '\n';
}

corpus dedup(const corpus &c)
{
    corpus out;
    out.metadata = c.metadata;
    std::unordered_set<std::string_view> seen;
    for (const auto &p : c.payloads()) {
        if (seen.insert(p.raw).second) {
            out.add(p);
        }
    }
    return out;
}

std::size_t count_semantic_distinct(const corpus &c)
{
    std::set<std::string> forms;
    for (const auto &p : c.payloads()) {
        forms.insert(full_decode(p.raw).value);
    }
    return forms.size();
}

} // namespace genxss
