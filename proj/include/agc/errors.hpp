#pragma once

#include <stdexcept>
#include <string>

namespace agc {

enum class Errc {
    // validation
    non_coprime,
    modulus_too_small,
    out_of_range,
    invalid_scale_factor,
    range_overflow,
    unrealizable_scale,
    modulus_mismatch,
    shape_mismatch,
    choice_out_of_range,
    // protocol / integrity
    auth_failure,
    phase_violation,
    version_mismatch,
    malformed_frame,
    transport_error,
    // io
    io_error,
    internal,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::non_coprime: return "NonCoprime";
        case Errc::modulus_too_small: return "ModulusTooSmall";
        case Errc::out_of_range: return "OutOfRange";
        case Errc::invalid_scale_factor: return "InvalidScaleFactor";
        case Errc::range_overflow: return "RangeOverflow";
        case Errc::unrealizable_scale: return "UnrealizableScale";
        case Errc::modulus_mismatch: return "ModulusMismatch";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::choice_out_of_range: return "ChoiceOutOfRange";
        case Errc::auth_failure: return "AuthFailure";
        case Errc::phase_violation: return "PhaseViolation";
        case Errc::version_mismatch: return "VersionMismatch";
        case Errc::malformed_frame: return "MalformedFrame";
        case Errc::transport_error: return "TransportError";
        case Errc::io_error: return "IoError";
        case Errc::internal: return "Internal";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

    bool is_validation() const noexcept {
        switch (code_) {
            case Errc::non_coprime:
            case Errc::modulus_too_small:
            case Errc::out_of_range:
            case Errc::invalid_scale_factor:
            case Errc::range_overflow:
            case Errc::unrealizable_scale:
            case Errc::modulus_mismatch:
            case Errc::shape_mismatch:
            case Errc::choice_out_of_range:
                return true;
            default:
                return false;
        }
    }

    bool is_protocol() const noexcept {
        switch (code_) {
            case Errc::auth_failure:
            case Errc::phase_violation:
            case Errc::version_mismatch:
            case Errc::malformed_frame:
            case Errc::transport_error:
                return true;
            default:
                return false;
        }
    }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace agc
