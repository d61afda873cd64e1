// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include <httplib.h>

#include "genxss/error.hpp"

namespace genxss::detail {

struct url_parts {
    std::string origin; // scheme://host[:port]
    std::string path;   // begins with '/', may be just "/"
};

inline url_parts split_url(std::string_view url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw config_error("URL without scheme: '" + std::string(url) + "'");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw config_error("unsupported URL scheme '" + std::string(scheme) + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) {
        return {std::string(url), "/"};
    }
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

} // namespace genxss::detail
