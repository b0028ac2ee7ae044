#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tonalseg {

enum class ErrorCode {
    FileNotFound,
    DecodeError,
    UnsupportedDepth,
    IoError,
    InvalidArgument,
    DimensionMismatch,
    EmptyHistogram,
    EmptyList,
    FormatError,
    MissingPrediction,
    MissingMask,
    TooFewEntries,
    EmptySplit,
    BatchFailed,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type for every failure raised by the library. The code is
/// stable and printed by the CLI in its machine-readable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tonalseg
