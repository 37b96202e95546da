#pragma once

#include <array>
#include <vector>

#include "osp/frame_types.hpp"

namespace osp::sweep {

using FrameLabelSequence = std::vector<FrameClass>;

// Half-open frame range [start, end) of one sweep.
struct SweepRange {
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool operator==(const SweepRange&) const = default;
};

inline constexpr int kSweepsPerCase = 6;
inline constexpr int kPositionsPerSweep = 100;
inline constexpr int kGridCells = kSweepsPerCase * kPositionsPerSweep;

// 6 sweeps x 100 positions of class probability vectors, the feature input
// to both classifiers. Cells are stored sweep-major.
struct SweepGrid {
    std::array<SweepRange, kSweepsPerCase> source_ranges{};
    std::array<ProbVector, kGridCells> cells{};
    std::array<int, kGridCells> source_indices{};

    const ProbVector& cell(int sweep, int position) const {
        return cells[sweep * kPositionsPerSweep + position];
    }
    int source_index(int sweep, int position) const {
        return source_indices[sweep * kPositionsPerSweep + position];
    }
};

struct SegmentationConfig {
    int smooth_window = 5;  // mode filter width, odd
    int min_run = 20;       // shortest frame run accepted as a sweep
};

// Per-frame argmax labels; ties go to the lowest class code.
FrameLabelSequence label_frames(const FrameProbabilitySequence& probs);

// Sliding mode filter. Edge windows are truncated; a tied mode keeps the
// center frame's original label when it is among the tied classes and takes
// the lowest tied class code otherwise.
FrameLabelSequence smooth_labels(const FrameLabelSequence& labels, int window);

// Maximal runs of consecutive non-Detached frames of length >= min_run, in
// temporal order. More than six qualifying runs: the six longest are kept
// (ties favor earlier runs). Fewer than six: InsufficientSweeps.
std::vector<SweepRange> segment_sweeps(const FrameLabelSequence& labels, int min_run);

// Source index for each resampled position: start + round(j*(N-1)/(target-1)),
// rounding half away from zero. Computed in integer arithmetic.
std::vector<int> resample_indices(const SweepRange& range, int target = kPositionsPerSweep);

std::vector<ProbVector> resample_sweep(const FrameProbabilitySequence& probs,
                                       const SweepRange& range,
                                       int target = kPositionsPerSweep);

// label -> smooth -> segment -> resample. The grid keeps probability
// vectors; hard labels stay derivable per cell.
SweepGrid build_sweep_grid(const FrameProbabilitySequence& probs,
                           const SegmentationConfig& config = {});

}  // namespace osp::sweep
