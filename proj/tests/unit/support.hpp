#pragma once

#include <doctest.h>

#include "aitlm/error.hpp"

// Runs fn and returns the code of the aitlm::error it throws.
template <class Fn>
aitlm::errc code_of(Fn&& fn) {
    try {
        fn();
    } catch (const aitlm::error& e) {
        return e.code();
    }
    FAIL("expected an aitlm::error");
    return aitlm::errc::io;
}
