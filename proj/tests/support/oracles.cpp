// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

namespace genxss::testing {

namespace {

int hex(char c)
{
    if (c >= '0' && c <= '9') {
        return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
    }
    if (c >= 'A' && c <= 'F') {
        return c - 'A' + 10;
    }
    return -1;
}

void put_utf8(std::string &out, unsigned cp)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool all_hex(const std::string &s, std::size_t from, std::size_t n)
{
    if (from + n > s.size()) {
        return false;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (hex(s[from + k]) < 0) {
            return false;
        }
    }
    return true;
}

unsigned hex_number(const std::string &s, std::size_t from, std::size_t n)
{
    unsigned v = 0;
    for (std::size_t k = 0; k < n; ++k) {
        v = v * 16 + static_cast<unsigned>(hex(s[from + k]));
    }
    return v;
}

std::string percent_decode(const std::string &s, bool uni)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && uni && i + 1 < s.size() && (s[i + 1] == 'u' || s[i + 1] == 'U') && all_hex(s, i + 2, 4)) {
            put_utf8(out, hex_number(s, i + 2, 4));
            i += 5;
        } else if (s[i] == '%' && all_hex(s, i + 1, 2)) {
            out += static_cast<char>(hex_number(s, i + 1, 2));
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

bool ws(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string form_decode(std::string s)
{
    for (auto &c : s) {
        if (c == '+') {
            c = ' ';
        }
    }
    return percent_decode(s, false);
}

bool op_matches(const oracle_condition &c, const std::string &value)
{
    if (c.op == "rx") {
        std::string pattern = c.argument;
        auto flags = std::regex::ECMAScript;
        if (pattern.rfind("(?i)", 0) == 0) {
            pattern = pattern.substr(4);
            flags |= std::regex::icase;
        }
        return std::regex_search(value, std::regex(pattern, flags));
    }
    if (c.op == "contains") {
        return value.find(c.argument) != std::string::npos;
    }
    if (c.op == "beginsWith") {
        return value.size() >= c.argument.size() && value.compare(0, c.argument.size(), c.argument) == 0;
    }
    if (c.op == "endsWith") {
        return value.size() >= c.argument.size() &&
               value.compare(value.size() - c.argument.size(), c.argument.size(), c.argument) == 0;
    }
    if (c.op == "pm") {
        std::string lower = naive_transform("lowercase", value);
        std::size_t start = 0;
        while (start < c.argument.size()) {
            auto end = c.argument.find(' ', start);
            if (end == std::string::npos) {
                end = c.argument.size();
            }
            const auto phrase = naive_transform("lowercase", c.argument.substr(start, end - start));
            if (!phrase.empty() && lower.find(phrase) != std::string::npos) {
                return true;
            }
            start = end + 1;
        }
        return false;
    }
    throw std::logic_error("unknown oracle operator " + c.op);
}

template <typename T>
const T &pick(std::mt19937_64 &rng, const std::vector<T> &v)
{
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool coin(std::mt19937_64 &rng, double p)
{
    return std::bernoulli_distribution(p)(rng);
}

} // namespace

std::string naive_transform(const std::string &name, const std::string &s)
{
    if (name == "urlDecode") {
        return percent_decode(s, false);
    }
    if (name == "urlDecodeUni") {
        return percent_decode(s, true);
    }
    if (name == "lowercase") {
        std::string out = s;
        for (auto &c : out) {
            if (c >= 'A' && c <= 'Z') {
                c = static_cast<char>(c + 32);
            }
        }
        return out;
    }
    if (name == "removeWhitespace") {
        std::string out;
        for (char c : s) {
            if (!ws(c)) {
                out += c;
            }
        }
        return out;
    }
    if (name == "compressWhitespace") {
        std::string out;
        for (char c : s) {
            const char d = ws(c) ? ' ' : c;
            if (!(d == ' ' && !out.empty() && out.back() == ' ')) {
                out += d;
            }
        }
        return out;
    }
    if (name == "removeComments") {
        std::string out;
        std::size_t i = 0;
        while (i < s.size()) {
            if (s.compare(i, 2, "/*") == 0) {
                const auto end = s.find("*/", i + 2);
                if (end == std::string::npos) {
                    return out;
                }
                i = end + 2;
            } else if (s.compare(i, 2, "//") == 0) {
                const auto nl = s.find('\n', i);
                if (nl == std::string::npos) {
                    return out;
                }
                i = nl;
            } else {
                out += s[i++];
            }
        }
        return out;
    }
    if (name == "jsDecode") {
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '\\' || i + 1 == s.size()) {
                out += s[i];
                continue;
            }
            const char e = s[i + 1];
            if (e == 'u' && all_hex(s, i + 2, 4)) {
                put_utf8(out, hex_number(s, i + 2, 4));
                i += 5;
            } else if (e == 'x' && all_hex(s, i + 2, 2)) {
                put_utf8(out, hex_number(s, i + 2, 2));
                i += 3;
            } else if (e == 'n') {
                out += '\n';
                ++i;
            } else if (e == 'u' || e == 'x') {
                out += s[i];
            } else {
                out += e;
                ++i;
            }
        }
        return out;
    }
    if (name == "htmlEntityDecode") {
        static const std::map<std::string, char> named{{"lt", '<'}, {"gt", '>'}, {"amp", '&'}, {"quot", '"'}};
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '&') {
                out += s[i];
                continue;
            }
            if (i + 1 < s.size() && s[i + 1] == '#') {
                std::size_t j = i + 2;
                const bool is_hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
                j += is_hex ? 1 : 0;
                unsigned v = 0;
                const std::size_t start = j;
                while (j < s.size() && (is_hex ? hex(s[j]) >= 0 : (s[j] >= '0' && s[j] <= '9'))) {
                    v = v * (is_hex ? 16 : 10) + static_cast<unsigned>(hex(s[j]));
                    ++j;
                }
                if (j == start || v == 0 || v > 0xFFFF) {
                    out += '&';
                    continue;
                }
                put_utf8(out, v);
                if (j < s.size() && s[j] == ';') {
                    ++j;
                }
                i = j - 1;
                continue;
            }
            bool done = false;
            for (const auto &[k, c] : named) {
                if (s.compare(i + 1, k.size() + 1, k + ";") == 0) {
                    out += c;
                    i += k.size() + 1;
                    done = true;
                    break;
                }
            }
            if (!done) {
                out += '&';
            }
        }
        return out;
    }
    if (name == "none") {
        return s;
    }
    throw std::logic_error("unknown oracle transformation " + name);
}

std::string render_rules(const std::vector<oracle_rule> &rules)
{
    std::string text = "# generated\n";
    for (const auto &r : rules) {
        for (std::size_t ci = 0; ci < r.conditions.size(); ++ci) {
            const auto &c = r.conditions[ci];
            std::string vars;
            for (const auto &v : c.variables) {
                vars += (vars.empty() ? "" : "|") + v;
            }
            std::string actions;
            auto add = [&](const std::string &a) { actions += (actions.empty() ? "" : ",") + a; };
            if (ci == 0) {
                add("id:" + std::to_string(r.id));
                add("phase:" + std::to_string(r.phase));
                add(r.deny ? "deny" : "pass");
                if (r.deny) {
                    add("status:403");
                }
            }
            for (const auto &t : c.transformations) {
                add("t:" + t);
            }
            if (ci + 1 < r.conditions.size()) {
                add("chain");
            }
            if (actions.empty()) {
                add("t:none");
            }
            text += "SecRule " + vars + " \"" + (c.negated ? "!" : "") + "@" + c.op + " " + c.argument + "\" \"" +
                    actions + "\"\n";
        }
    }
    return text;
}

http_request to_http_request(const oracle_request &r)
{
    http_request req;
    req.method = r.post ? http_method::post : http_method::get;
    req.path = r.path;
    req.query = r.query;
    for (const auto &[n, v] : r.body) {
        req.body += (req.body.empty() ? "" : "&") + n + "=" + v;
    }
    return req;
}

oracle_verdict naive_evaluate(const oracle_request &req, const std::vector<oracle_rule> &rules)
{
    std::string qs;
    for (const auto &[n, v] : req.query) {
        qs += (qs.empty() ? "" : "&") + n + "=" + v;
    }
    const std::string uri = req.query.empty() ? req.path : req.path + "?" + qs;

    oracle_verdict out;
    for (const auto &rule : rules) {
        bool all = true;
        for (const auto &c : rule.conditions) {
            std::vector<std::string> targets;
            for (const auto &v : c.variables) {
                std::vector<std::pair<std::string, std::string>> args = req.query;
                if (rule.phase == 2 && req.post) {
                    args.insert(args.end(), req.body.begin(), req.body.end());
                }
                if (v == "ARGS") {
                    for (const auto &a : args) {
                        targets.push_back(form_decode(a.second));
                    }
                } else if (v == "ARGS_NAMES") {
                    for (const auto &a : args) {
                        targets.push_back(form_decode(a.first));
                    }
                } else if (v == "QUERY_STRING") {
                    targets.push_back(qs);
                } else if (v == "REQUEST_URI") {
                    targets.push_back(uri);
                }
            }
            bool any = false;
            for (auto t : targets) {
                for (const auto &tr : c.transformations) {
                    t = naive_transform(tr, t);
                }
                if (op_matches(c, t) != c.negated) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                all = false;
                break;
            }
        }
        if (all) {
            out.matched.push_back(rule.id);
            out.blocked = out.blocked || rule.deny;
        }
    }
    return out;
}

generated_case generate_case(std::mt19937_64 &rng, bool allow_chains)
{
    static const std::vector<std::string> fragments{"alert", "ALERT", "(", ")", "1", "%61", "%41", "%u0061",
        "%u0041", "\\u0061", "\\x61", "/**/", "/*c*/", "//c", "+", "%20", "%09", "%0a", "&#97;", "&#x61;", "&lt;",
        "&gt;", "<", ">", "script", "SCRIPT", "on", "load", "=", "%3d", "'", "%22", ";", "x", "%2b", "confirm",
        "java", ":", "%3a", "a", "b", "aab", "42", "%2F%2A%2A%2F"};
    static const std::vector<std::string> names{"p16", "q", "id", "x", "on%6cy"};
    static const std::vector<std::string> patterns{"alert\\s*\\(", "(?:alert|confirm)\\(", "<script", "on[a-z]+=",
        "\\d+", "^alert", "\\)$", "[<>]", "a+b?", "al(?:e|3)rt", "\\bscript\\b", "x{2,3}", "[^a-z0-9]{2}",
        "java\\s*script", "%[0-9a-f]{2}", "\\\\u00[0-9a-f]{2}", "\\/\\*", "(?i)alert", "^[a-z]+$", "(a|b)*c",
        "\\S+\\s+\\S+", "[0-9]{2,}", "onload|onerror", "'\\s*;"};
    static const std::vector<std::string> words{"alert", "script", "(", "<", "%", "x", "on", "a", "1"};
    static const std::vector<std::string> phrase_lists{"alert confirm", "script on", "ALERT", "< >", "java x"};
    static const std::vector<std::string> transforms{"urlDecode", "urlDecodeUni", "jsDecode", "htmlEntityDecode",
        "lowercase", "removeComments", "removeWhitespace", "compressWhitespace"};
    static const std::vector<std::string> variables{"ARGS", "ARGS_NAMES", "QUERY_STRING", "REQUEST_URI"};

    auto value = [&]() {
        std::string v;
        const auto n = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int i = 0; i < n; ++i) {
            // Values are stored encoded; a bare '&' would start a new parameter.
            for (char ch : pick(rng, fragments)) {
                v += ch == '&' ? std::string("%26") : std::string(1, ch);
            }
        }
        return v;
    };

    generated_case c;
    c.request.post = coin(rng, 0.25);
    const auto nq = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int i = 0; i < nq; ++i) {
        c.request.query.emplace_back(pick(rng, names), value());
    }
    if (c.request.post) {
        const auto nb = std::uniform_int_distribution<int>(1, 2)(rng);
        for (int i = 0; i < nb; ++i) {
            c.request.body.emplace_back(pick(rng, names), value());
        }
    }

    auto condition = [&]() {
        oracle_condition cond;
        std::set<std::string> vs;
        const auto nv = std::uniform_int_distribution<int>(1, 2)(rng);
        for (int i = 0; i < nv; ++i) {
            vs.insert(pick(rng, variables));
        }
        cond.variables.assign(vs.begin(), vs.end());
        const auto kind = std::uniform_int_distribution<int>(0, 9)(rng);
        if (kind < 5) {
            cond.op = "rx";
            cond.argument = pick(rng, patterns);
        } else if (kind < 7) {
            cond.op = "contains";
            cond.argument = pick(rng, words);
        } else if (kind == 7) {
            cond.op = "pm";
            cond.argument = pick(rng, phrase_lists);
        } else if (kind == 8) {
            cond.op = "beginsWith";
            cond.argument = pick(rng, words);
        } else {
            cond.op = "endsWith";
            cond.argument = pick(rng, words);
        }
        cond.negated = coin(rng, 0.15);
        const auto nt = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int i = 0; i < nt; ++i) {
            cond.transformations.push_back(pick(rng, transforms));
        }
        return cond;
    };

    const auto nr = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < nr; ++i) {
        oracle_rule r;
        r.id = 1000 + static_cast<std::uint32_t>(i);
        r.phase = coin(rng, 0.3) ? 1 : 2;
        r.deny = coin(rng, 0.75);
        r.conditions.push_back(condition());
        if (allow_chains && coin(rng, 0.25)) {
            r.conditions.push_back(condition());
        }
        c.rules.push_back(std::move(r));
    }
    return c;
}

namespace {

double ward_height(const std::vector<std::vector<double>> &rows, const std::vector<std::size_t> &a,
    const std::vector<std::size_t> &b)
{
    const std::size_t dim = rows[0].size();
    std::vector<double> ca(dim, 0.0);
    std::vector<double> cb(dim, 0.0);
    for (auto i : a) {
        for (std::size_t k = 0; k < dim; ++k) {
            ca[k] += rows[i][k] / static_cast<double>(a.size());
        }
    }
    for (auto i : b) {
        for (std::size_t k = 0; k < dim; ++k) {
            cb[k] += rows[i][k] / static_cast<double>(b.size());
        }
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        sq += (ca[k] - cb[k]) * (ca[k] - cb[k]);
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    return std::sqrt(2.0 * na * nb / (na + nb)) * std::sqrt(sq);
}

} // namespace

std::vector<int> brute_ward(const std::vector<std::vector<double>> &rows, double threshold)
{
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        clusters.push_back({i});
    }
    while (clusters.size() > 1) {
        // Clusters stay ordered by their smallest member.
        double best = 0.0;
        std::size_t bi = 0;
        std::size_t bj = 0;
        bool found = false;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double d = ward_height(rows, clusters[i], clusters[j]);
                if (!found || d < best - 1e-12) {
                    best = d;
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }
        if (best > threshold) {
            break;
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    std::vector<int> labels(rows.size(), -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (auto m : clusters[c]) {
            labels[m] = static_cast<int>(c);
        }
    }
    return labels;
}

std::vector<int> brute_dbscan(const std::vector<std::vector<double>> &dm, double eps, std::size_t min_samples)
{
    const std::size_t n = dm.size();
    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            count += dm[i][j] <= eps ? 1 : 0;
        }
        core[i] = count >= min_samples;
    }
    // Components of the core graph, numbered by smallest core index.
    std::vector<int> comp(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || comp[i] >= 0) {
            continue;
        }
        comp[i] = next;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    if (comp[a] == next && core[b] && comp[b] < 0 && dm[a][b] <= eps) {
                        comp[b] = next;
                        changed = true;
                    }
                }
            }
        }
        ++next;
    }
    std::vector<int> labels(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            labels[i] = comp[i];
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (core[j] && dm[i][j] <= eps && (labels[i] < 0 || comp[j] < labels[i])) {
                labels[i] = comp[j];
            }
        }
    }
    return labels;
}

std::optional<double> naive_silhouette(const std::vector<std::vector<double>> &dm, const std::vector<int> &labels)
{
    std::set<int> ids;
    for (int l : labels) {
        if (l >= 0) {
            ids.insert(l);
        }
    }
    if (ids.size() < 2) {
        return std::nullopt;
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            continue;
        }
        ++count;
        std::map<int, std::pair<double, std::size_t>> per;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (j != i && labels[j] >= 0) {
                per[labels[j]].first += dm[i][j];
                per[labels[j]].second += 1;
            }
        }
        if (per.find(labels[i]) == per.end()) {
            continue; // singleton: score 0
        }
        const double a = per[labels[i]].first / static_cast<double>(per[labels[i]].second);
        double b = 1e300;
        for (const auto &[id, s] : per) {
            if (id != labels[i]) {
                b = std::min(b, s.first / static_cast<double>(s.second));
            }
        }
        const double m = std::max(a, b);
        sum += m > 0.0 ? (b - a) / m : 0.0;
    }
    return sum / static_cast<double>(count);
}

namespace {

std::size_t matched_chars(const std::string &a, std::size_t alo, std::size_t ahi, const std::string &b,
    std::size_t blo, std::size_t bhi)
{
    std::size_t best = 0;
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = alo; i < ahi; ++i) {
        for (std::size_t j = blo; j < bhi; ++j) {
            std::size_t k = 0;
            while (i + k < ahi && j + k < bhi && a[i + k] == b[j + k]) {
                ++k;
            }
            if (k > best) {
                best = k;
                bi = i;
                bj = j;
            }
        }
    }
    if (best == 0) {
        return 0;
    }
    return best + matched_chars(a, alo, bi, b, blo, bj) + matched_chars(a, bi + best, ahi, b, bj + best, bhi);
}

} // namespace

double brute_ro_ratio(std::string a, std::string b)
{
    if (b < a) {
        std::swap(a, b);
    }
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(matched_chars(a, 0, a.size(), b, 0, b.size())) /
           static_cast<double>(a.size() + b.size());
}

bool same_partition(const std::vector<int> &a, const std::vector<int> &b)
{
    if (a.size() != b.size()) {
        return false;
    }
    std::map<int, int> fwd;
    std::map<int, int> back;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [f, fi] = fwd.emplace(a[i], b[i]);
        auto [r, ri] = back.emplace(b[i], a[i]);
        if (f->second != b[i] || r->second != a[i]) {
            return false;
        }
    }
    return true;
}

} // namespace genxss::testing
