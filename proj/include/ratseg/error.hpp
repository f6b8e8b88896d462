#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ratseg {

enum class ErrorCode {
    InvalidArgument,
    EmptyMask,
    MultipleComponents,
    DegeneratePolygon,
    EmptySequence,
    DimensionMismatch,
    TooFewEndpoints,
    DisconnectedEndpoints,
    NoMarkers,
    MarkerOutsideDomain,
    ContourTooShort,
    PathTooShort,
    KeypointOutsideMask,
    SplineFitFailure,
    SingularSystem,
    OutOfBounds,
    TooFewInstances,
    PlacementFailure,
    NoVisibleKeypoints,
    NonPositiveArea,
    SchemaError,
    UnknownImageId,
    PoseInvalid,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure path carries one ErrorCode so
/// callers (the CLI in particular) can map errors to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ratseg
