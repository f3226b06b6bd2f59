#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hcodec {

enum class Errc {
    InputTooShort,
    ShapeMismatch,
    InvalidConfig,
    InsufficientData,
    CodeOutOfRange,
    EmptyInput,
    NotTrained,
    CodecMismatch,
    InvalidDelayLayout,
    ConditionMismatch,
    EmptyCondition,
    SilentInput,
    AssetMissing,
    NotATokenFile,
    CorruptFile,
    UnsupportedFormat,
    IoError,
};

std::string_view errc_name(Errc code);

// Single exception type for the library. Reader failures carry the byte
// offset at which the problem was detected.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string & what);
    Error(Errc code, const std::string & what, std::uint64_t offset);

    Errc code() const noexcept { return code_; }
    std::optional<std::uint64_t> offset() const noexcept { return offset_; }

private:
    Errc code_;
    std::optional<std::uint64_t> offset_;
};

} // namespace hcodec
