#pragma once

#include <string_view>

#include "aitlm/error.hpp"

namespace aitlm::cli {

inline constexpr std::string_view version = "0.1.0";

// Process exit statuses.
enum exit_status : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_input = 3,
    exit_remote = 4,
    exit_check_failed = 5,
};

int exit_code(errc code) noexcept;

// Entry point of the `aitlm` tool. Reports go to stdout or the configured
// file, log lines and errors ("error[<code>]: <message>") to stderr.
int run(int argc, const char* const* argv);

}  // namespace aitlm::cli
