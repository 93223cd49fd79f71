#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aitlm {

enum class errc {
    invalid_argument,
    empty_input,
    truncated,
    prefix_violation,
    alphabet_mismatch,
    model_mismatch,
    bad_format,
    io,
    config,
    transport,
    remote_protocol,
    multi_token_label,
    context_overflow,
    class_exhausted,
    enumeration_too_large,
};

std::string_view to_string(errc code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto a stable exit status.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace aitlm
