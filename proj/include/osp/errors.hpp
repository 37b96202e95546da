#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace osp {

// Error codes for everything the pipeline can reject. Each code corresponds
// to one failure mode of one operation; `detail` carries the offending line
// number, frame index or count where that is meaningful.
enum class Errc {
    MissingFile,
    MalformedRow,
    NonContiguousIndex,
    UnnormalizedProbabilities,
    NotPgm,
    TooSmall,
    OrphanMask,
    MissingTruth,
    EvenWindow,
    InsufficientSweeps,
    EmptyRange,
    EmptyCounts,
    DimensionMismatch,
    EmptyMask,
    DegenerateInput,
    NotAnEllipse,
    EmptyList,
    NonPositiveHc,
    OutOfCurveRange,
    NoHeadFrames,
    InvalidCurve,
    TooFewSamples,
    LengthMismatch,
    BadFormat,
    IoFailure,
    InvalidArgument,
};

const char* errc_name(Errc c);

class OspError : public std::runtime_error {
public:
    OspError(Errc code, std::string message, std::int64_t detail = -1)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          detail_(detail) {}

    Errc code() const noexcept { return code_; }
    std::int64_t detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::int64_t detail_;
};

}  // namespace osp
