#include "tonalseg/error.hpp"

namespace tonalseg {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyHistogram: return "EmptyHistogram";
        case ErrorCode::EmptyList: return "EmptyList";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::MissingPrediction: return "MissingPrediction";
        case ErrorCode::MissingMask: return "MissingMask";
        case ErrorCode::TooFewEntries: return "TooFewEntries";
        case ErrorCode::EmptySplit: return "EmptySplit";
        case ErrorCode::BatchFailed: return "BatchFailed";
    }
    return "Unknown";
}

}  // namespace tonalseg
