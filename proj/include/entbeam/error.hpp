#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entbeam {

enum class ErrorCode {
    ParameterDomain,
    ClosedChannel,
    ClosedExteriorChannel,
    InconsistentChannels,
    Resolution,
    InstabilityDetected,
    WindowTooShort,
    PerturbationInvalid,
    EmptyPostSelection,
    AboveThresholdInSpectrum,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code tells callers which
/// contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define ENTBEAM_REQUIRE(cond, code, msg)                                       \
    do {                                                                       \
        if (!(cond)) throw ::entbeam::Error((code), (msg));                    \
    } while (0)

}  // namespace entbeam
