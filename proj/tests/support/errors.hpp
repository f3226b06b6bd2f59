#pragma once

#include "hcodec/error.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace hcodec::test {

// Code of the Error thrown by `fn`, or nullopt if it returned normally.
template <class Fn>
std::optional<Errc> errc_of(Fn && fn) {
    try {
        std::forward<Fn>(fn)();
    } catch (const Error & e) {
        return e.code();
    }
    return std::nullopt;
}

// Byte offset carried by the Error thrown by `fn`.
template <class Fn>
std::optional<std::uint64_t> offset_of(Fn && fn) {
    try {
        std::forward<Fn>(fn)();
    } catch (const Error & e) {
        return e.offset();
    }
    return std::nullopt;
}

} // namespace hcodec::test
