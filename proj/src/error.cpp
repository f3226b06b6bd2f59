#include "hcodec/error.hpp"

namespace hcodec {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::InputTooShort:      return "InputTooShort";
        case Errc::ShapeMismatch:      return "ShapeMismatch";
        case Errc::InvalidConfig:      return "InvalidConfig";
        case Errc::InsufficientData:   return "InsufficientData";
        case Errc::CodeOutOfRange:     return "CodeOutOfRange";
        case Errc::EmptyInput:         return "EmptyInput";
        case Errc::NotTrained:         return "NotTrained";
        case Errc::CodecMismatch:      return "CodecMismatch";
        case Errc::InvalidDelayLayout: return "InvalidDelayLayout";
        case Errc::ConditionMismatch:  return "ConditionMismatch";
        case Errc::EmptyCondition:     return "EmptyCondition";
        case Errc::SilentInput:        return "SilentInput";
        case Errc::AssetMissing:       return "AssetMissing";
        case Errc::NotATokenFile:      return "NotATokenFile";
        case Errc::CorruptFile:        return "CorruptFile";
        case Errc::UnsupportedFormat:  return "UnsupportedFormat";
        case Errc::IoError:            return "IoError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string & what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

Error::Error(Errc code, const std::string & what, std::uint64_t offset)
    : std::runtime_error(std::string(errc_name(code)) + " at byte " + std::to_string(offset) + ": " + what),
      code_(code),
      offset_(offset) {}

} // namespace hcodec
