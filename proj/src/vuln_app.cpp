// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/vuln_app.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "genxss/engine.hpp"
#include "http_util.hpp"

namespace genxss {

namespace {

using json = nlohmann::json;

std::string html_escape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        case '\'':
            out += "&#39;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string render_segment(injection_context ctx, const std::string &value)
{
    switch (ctx) {
    case injection_context::html_body:
        return "<div class=\"p\">" + value + "</div>";
    case injection_context::html_attribute:
        return "<input type=\"text\" value=\"" + value + "\">";
    case injection_context::js_string_dq:
        return "<script>var p = \"" + value + "\";</script>";
    case injection_context::js_string_sq:
        return "<script>var p = '" + value + "';</script>";
    case injection_context::url_param:
        return "<a href=\"" + value + "\">link</a>";
    }
    return value;
}

sanitizer parse_sanitizer(const std::string &s)
{
    if (s == "none") {
        return sanitizer::none;
    }
    if (s == "html_escape") {
        return sanitizer::html_escape;
    }
    throw config_error("unknown sanitizer '" + s + "'");
}

std::vector<std::pair<std::string, std::string>> decoded_query(std::string_view target)
{
    std::vector<std::pair<std::string, std::string>> out;
    const auto q = target.find('?');
    if (q == std::string_view::npos) {
        return out;
    }
    for (const auto &[name, value] : split_query(target.substr(q + 1))) {
        out.emplace_back(httplib::detail::decode_url(name, true),
            httplib::detail::decode_url(value, true));
    }
    return out;
}

} // namespace

route_config route_config::parse(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw config_error(std::string("route config: ") + e.what());
    }
    if (!doc.is_object()) {
        throw config_error("route config: expected an object");
    }
    route_config cfg;
    for (const auto &[key, value] : doc.items()) {
        if (key == "path") {
            if (!value.is_string() || value.get<std::string>().empty() ||
                value.get<std::string>()[0] != '/') {
                throw config_error("route config: path must be a string starting with '/'");
            }
            cfg.path = value.get<std::string>();
        } else if (key == "params") {
            if (!value.is_object()) {
                throw config_error("route config: params must be an object");
            }
            for (const auto &[name, spec] : value.items()) {
                if (!spec.is_object()) {
                    throw config_error("route config: param '" + name + "' must be an object");
                }
                route_param p;
                for (const auto &[field, fv] : spec.items()) {
                    if (!fv.is_string()) {
                        throw config_error("route config: " + name + "." + field + " must be a string");
                    }
                    if (field == "context") {
                        const auto ctx = parse_injection_context(fv.get<std::string>());
                        if (!ctx) {
                            throw config_error("route config: unknown context '" +
                                               fv.get<std::string>() + "'");
                        }
                        p.context = *ctx;
                    } else if (field == "sanitize") {
                        p.sanitize = parse_sanitizer(fv.get<std::string>());
                    } else {
                        throw config_error("route config: unknown field '" + field + "'");
                    }
                }
                cfg.params.emplace(name, p);
            }
        } else {
            throw config_error("route config: unknown key '" + key + "'");
        }
    }
    if (cfg.params.empty()) {
        throw config_error("route config: no params");
    }
    return cfg;
}

route_config route_config::load(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot read route config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string reflection_open_marker(std::string_view param, injection_context ctx)
{
    return "<!--genxss:" + std::string(param) + ":" + std::string(to_string(ctx)) + "-->";
}

std::string reflection_close_marker(std::string_view param)
{
    return "<!--/genxss:" + std::string(param) + "-->";
}

render_result render_page(const route_config &config,
    const std::vector<std::pair<std::string, std::string>> &params)
{
    render_result r;
    if (params.empty()) {
        r.body = "<!doctype html>\n<html><body><h1>gym</h1><ul>\n";
        for (const auto &[name, p] : config.params) {
            r.body += "<li>" + name + " (" + std::string(to_string(p.context)) + ")</li>\n";
        }
        r.body += "</ul></body></html>\n";
        return r;
    }
    std::string segments;
    std::vector<std::string> seen;
    for (const auto &[name, value] : params) {
        const auto it = config.params.find(name);
        if (it == config.params.end()) {
            return {404, "unknown parameter\n"};
        }
        if (std::find(seen.begin(), seen.end(), name) != seen.end()) {
            continue;
        }
        seen.push_back(name);
        const auto &p = it->second;
        const auto v = p.sanitize == sanitizer::html_escape ? html_escape(value) : value;
        segments += reflection_open_marker(name, p.context) + render_segment(p.context, v) +
                    reflection_close_marker(name) + "\n";
    }
    r.body = "<!doctype html>\n<html><body>\n" + segments + "</body></html>\n";
    return r;
}

struct vuln_app_server::impl {
    route_config config;
    std::string host;
    int port{0};
    httplib::Server server;
    std::thread worker;
};

vuln_app_server::vuln_app_server(route_config config, std::string host, int port)
    : impl_(std::make_unique<impl>())
{
    impl_->config = std::move(config);
    impl_->host = std::move(host);
    auto *state = impl_.get();
    impl_->server.Get(impl_->config.path, [state](const httplib::Request &req, httplib::Response &res) {
        const auto page = render_page(state->config, decoded_query(req.target));
        res.status = page.status;
        res.set_content(page.body, "text/html; charset=utf-8");
    });
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->host);
        if (impl_->port <= 0) {
            throw bind_error("cannot bind " + impl_->host);
        }
    } else {
        if (!impl_->server.bind_to_port(impl_->host, port)) {
            throw bind_error("cannot bind " + impl_->host + ":" + std::to_string(port));
        }
        impl_->port = port;
    }
    impl_->worker = std::thread([state] { state->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

vuln_app_server::~vuln_app_server()
{
    stop();
}

int vuln_app_server::port() const noexcept
{
    return impl_->port;
}

std::string vuln_app_server::base_url() const
{
    return "http://" + impl_->host + ":" + std::to_string(impl_->port) + impl_->config.path;
}

void vuln_app_server::wait()
{
    while (impl_->server.is_running()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

void vuln_app_server::stop()
{
    impl_->server.stop();
    if (impl_->worker.joinable()) {
        impl_->worker.join();
    }
}

std::string encode_query_value(std::string_view raw)
{
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto c = static_cast<unsigned char>(raw[i]);
        const bool is_escape = c == '%' && i + 2 < raw.size() && std::isxdigit(raw[i + 1]) &&
                               std::isxdigit(raw[i + 2]);
        const bool is_uni = c == '%' && i + 5 < raw.size() && (raw[i + 1] == 'u' || raw[i + 1] == 'U') &&
                            std::isxdigit(raw[i + 2]) && std::isxdigit(raw[i + 3]) &&
                            std::isxdigit(raw[i + 4]) && std::isxdigit(raw[i + 5]);
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '+' || is_escape ||
            is_uni) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        }
    }
    return out;
}

reflection probe_reflection(const std::string &base_url, const payload &p, const std::string &param,
    std::chrono::milliseconds timeout)
{
    const auto parts = detail::split_url(base_url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_url_encode(false); // the query is already encoded
    const auto target = parts.path + "?" + encode_query_value(param) + "=" + encode_query_value(p.raw);
    const auto res = client.Get(target);
    if (!res) {
        throw network_error("request to " + base_url + " failed: " + httplib::to_string(res.error()));
    }
    reflection out;
    if (res->status != 200) {
        return out;
    }
    const auto open_prefix = "<!--genxss:" + param + ":";
    const auto open = res->body.find(open_prefix);
    if (open == std::string::npos) {
        return out;
    }
    const auto ctx_end = res->body.find("-->", open + open_prefix.size());
    if (ctx_end == std::string::npos) {
        return out;
    }
    const auto ctx = parse_injection_context(
        std::string_view(res->body).substr(open + open_prefix.size(), ctx_end - open - open_prefix.size()));
    const auto close = res->body.find(reflection_close_marker(param), ctx_end);
    if (!ctx || close == std::string::npos) {
        return out;
    }
    const auto segment = std::string_view(res->body).substr(ctx_end + 3, close - ctx_end - 3);
    const auto canary = httplib::detail::decode_url(encode_query_value(p.raw), true);
    out.context = *ctx;
    out.reflected = segment.find(canary) != std::string_view::npos;
    return out;
}

} // namespace genxss
