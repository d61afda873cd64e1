// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "genxss/error.hpp"
#include "genxss/payload.hpp"
#include "genxss/validator.hpp"

namespace genxss {

enum class sanitizer { none, html_escape };

struct route_param {
    injection_context context{injection_context::html_body};
    sanitizer sanitize{sanitizer::none};
};

/// Route table of the deliberately vulnerable app: one path, `pN` params,
/// each reflected into its own context.
struct route_config {
    std::string path{"/gym"};
    std::map<std::string, route_param> params;

    static route_config parse(std::string_view json_text);
    static route_config load(const std::filesystem::path &path);
};

struct render_result {
    int status{200};
    std::string body;
};

/// Builds the response for a decoded query, independent of any socket.
/// Unknown parameters give 404; no parameters give the static index page.
render_result render_page(const route_config &config,
    const std::vector<std::pair<std::string, std::string>> &params);

/// The marker pair wrapping each reflection: `<!--genxss:pN:context-->` ...
/// `<!--/genxss:pN-->`.
std::string reflection_open_marker(std::string_view param, injection_context ctx);
std::string reflection_close_marker(std::string_view param);

class bind_error : public error {
public:
    using error::error;
};

/// Serves the vulnerable app on a background thread until stopped or
/// destroyed. Request handling is stateless.
class vuln_app_server {
public:
    vuln_app_server(route_config config, std::string host = "127.0.0.1", int port = 0);
    ~vuln_app_server();

    vuln_app_server(const vuln_app_server &) = delete;
    vuln_app_server &operator=(const vuln_app_server &) = delete;

    [[nodiscard]] int port() const noexcept;
    [[nodiscard]] std::string base_url() const;
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();

private:
    struct impl;
    std::unique_ptr<impl> impl_;
};

class network_error : public error {
public:
    using error::error;
};

struct reflection {
    bool reflected{false};
    injection_context context{injection_context::html_body};
};

/// Percent-encodes the bytes that cannot travel verbatim in a query value.
/// Existing `%XX` escapes and `+` pass through untouched.
std::string encode_query_value(std::string_view raw);

/// Sends `payload.raw` as the value of `param` and reports whether the
/// server-decoded value comes back unmodified inside that parameter's
/// reflection segment. Throws network_error on connection failures.
reflection probe_reflection(const std::string &base_url, const payload &p, const std::string &param,
    std::chrono::milliseconds timeout = std::chrono::seconds(5));

} // namespace genxss
