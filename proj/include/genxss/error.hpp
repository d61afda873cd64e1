// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genxss {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input with an optional 1-based line number (0 = not line-oriented).
class parse_error : public error {
public:
    parse_error(const std::string &reason, std::size_t line = 0)
        : error(line == 0 ? reason : "line " + std::to_string(line) + ": " + reason),
          reason_(reason), line_(line)
    {}

    [[nodiscard]] const std::string &reason() const noexcept { return reason_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::string reason_;
    std::size_t line_;
};

class io_error : public error {
public:
    using error::error;
};

class config_error : public error {
public:
    using error::error;
};

class invariant_error : public error {
public:
    using error::error;
};

} // namespace genxss
