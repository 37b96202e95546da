#include "osp/errors.hpp"

namespace osp {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::MissingFile: return "MissingFile";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::NonContiguousIndex: return "NonContiguousIndex";
        case Errc::UnnormalizedProbabilities: return "UnnormalizedProbabilities";
        case Errc::NotPgm: return "NotPgm";
        case Errc::TooSmall: return "TooSmall";
        case Errc::OrphanMask: return "OrphanMask";
        case Errc::MissingTruth: return "MissingTruth";
        case Errc::EvenWindow: return "EvenWindow";
        case Errc::InsufficientSweeps: return "InsufficientSweeps";
        case Errc::EmptyRange: return "EmptyRange";
        case Errc::EmptyCounts: return "EmptyCounts";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::EmptyMask: return "EmptyMask";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::NotAnEllipse: return "NotAnEllipse";
        case Errc::EmptyList: return "EmptyList";
        case Errc::NonPositiveHc: return "NonPositiveHc";
        case Errc::OutOfCurveRange: return "OutOfCurveRange";
        case Errc::NoHeadFrames: return "NoHeadFrames";
        case Errc::InvalidCurve: return "InvalidCurve";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::BadFormat: return "BadFormat";
        case Errc::IoFailure: return "IoFailure";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

}  // namespace osp
