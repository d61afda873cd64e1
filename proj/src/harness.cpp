// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/harness.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "genxss/vuln_app.hpp"
#include "http_util.hpp"

namespace genxss {

namespace {

void require_testable(const payload &p)
{
    if (!p.is_benign() && p.validation.status != validation_status::valid) {
        throw invariant_error("payload " + p.id + " is not a valid attack");
    }
}

waf_outcome probe_remote(httplib::Client &client, const std::string &path, const payload &p,
    const remote_target &t)
{
    const auto encoded = encode_query_value(p.raw);
    const auto res = client.Get(path + "?" + encode_query_value(t.param) + "=" + encoded);
    if (!res) {
        return waf_outcome::indeterminate("request failed: " + httplib::to_string(res.error()));
    }
    if (t.blocked_statuses.contains(res->status)) {
        return waf_outcome::blocked({});
    }
    if (res->status >= 200 && res->status < 300) {
        const auto marker = t.marker.empty() ? httplib::detail::decode_url(encoded, true) : t.marker;
        if (res->body.find(marker) != std::string::npos) {
            return waf_outcome::bypassed();
        }
        return waf_outcome::indeterminate("HTTP " + std::to_string(res->status) + " without reflection");
    }
    return waf_outcome::indeterminate("HTTP " + std::to_string(res->status));
}

void run_remote(std::vector<payload> &payloads, const remote_target &t)
{
    if (t.blocked_statuses.empty()) {
        throw config_error("remote target needs at least one blocking status");
    }
    const auto url = detail::split_url(t.base_url);
    const auto workers = std::max<std::size_t>(1, std::min(t.concurrency, payloads.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        httplib::Client client(url.origin);
        client.set_connection_timeout(t.timeout);
        client.set_read_timeout(t.timeout);
        client.set_write_timeout(t.timeout);
        client.set_url_encode(false); // the query is already encoded
        for (auto i = next++; i < payloads.size(); i = next++) {
            payloads[i].outcome = probe_remote(client, url.path, payloads[i], t);
        }
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(work);
    }
}

} // namespace

http_request embedded_request(const payload &p, const embedded_target &t)
{
    http_request req;
    req.path = t.path;
    req.query.emplace_back(t.param, p.raw);
    return req;
}

std::vector<payload> test_payloads(std::vector<payload> payloads, const waf_target &target)
{
    for (const auto &p : payloads) {
        require_testable(p);
    }
    std::sort(payloads.begin(), payloads.end(),
        [](const payload &a, const payload &b) { return a.id < b.id; });
    if (const auto *e = std::get_if<embedded_target>(&target)) {
        for (auto &p : payloads) {
            const auto r = evaluate(embedded_request(p, *e), e->rules);
            p.outcome = r.blocked() ? waf_outcome::blocked(r.blocking_rule_ids) : waf_outcome::bypassed();
        }
    } else if (!payloads.empty()) {
        run_remote(payloads, std::get<remote_target>(target));
    }
    return payloads;
}

confusion_matrix compute_confusion(const std::vector<payload> &attacks, const std::vector<payload> &benign)
{
    confusion_matrix cm;
    auto tally = [](const payload &p, std::size_t &blocked, std::size_t &passed) {
        switch (p.outcome.status) {
        case waf_status::blocked:
            ++blocked;
            break;
        case waf_status::bypassed:
            ++passed;
            break;
        default:
            throw invariant_error("payload " + p.id + " has outcome " +
                                  std::string(to_string(p.outcome.status)));
        }
    };
    for (const auto &p : attacks) {
        tally(p, cm.tp, cm.fn);
    }
    for (const auto &p : benign) {
        tally(p, cm.fp, cm.tn);
    }
    return cm;
}

metric_values metrics(const confusion_matrix &cm)
{
    if (cm.total() == 0) {
        throw std::invalid_argument("metrics of an empty confusion matrix");
    }
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) {
            return std::nullopt;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    metric_values m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

std::vector<payload> benign_corpus_load(const std::filesystem::path &path)
{
    return load_corpus(path, attack_type_field::forbidden).payloads();
}

} // namespace genxss
