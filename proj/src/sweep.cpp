#include "osp/sweep.hpp"

#include <algorithm>
#include <array>

#include "osp/errors.hpp"

namespace osp::sweep {

FrameLabelSequence label_frames(const FrameProbabilitySequence& probs) {
    FrameLabelSequence labels;
    labels.reserve(probs.size());
    for (const auto& p : probs.frames) {
        int best = 0;
        for (int c = 1; c < kNumFrameClasses; ++c) {
            if (p[c] > p[best]) best = c;  // strict: ties keep the lower code
        }
        labels.push_back(static_cast<FrameClass>(best));
    }
    return labels;
}

FrameLabelSequence smooth_labels(const FrameLabelSequence& labels, int window) {
    if (window < 1 || window % 2 == 0) {
        throw OspError(Errc::EvenWindow, "window must be odd and >= 1, got " + std::to_string(window));
    }
    if (window == 1) return labels;

    const int n = static_cast<int>(labels.size());
    const int half = window / 2;
    FrameLabelSequence out(labels.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        std::array<int, kNumFrameClasses> counts{};
        for (int j = lo; j <= hi; ++j) counts[static_cast<int>(labels[j])]++;
        const int max_count = *std::max_element(counts.begin(), counts.end());
        const int center = static_cast<int>(labels[i]);
        if (counts[center] == max_count) {
            out[i] = labels[i];
        } else {
            for (int c = 0; c < kNumFrameClasses; ++c) {
                if (counts[c] == max_count) {
                    out[i] = static_cast<FrameClass>(c);
                    break;
                }
            }
        }
    }
    return out;
}

std::vector<SweepRange> segment_sweeps(const FrameLabelSequence& labels, int min_run) {
    if (min_run < 1) throw OspError(Errc::InvalidArgument, "min_run must be >= 1");

    std::vector<SweepRange> runs;
    const int n = static_cast<int>(labels.size());
    int i = 0;
    while (i < n) {
        if (labels[i] == FrameClass::Detached) {
            ++i;
            continue;
        }
        int j = i;
        while (j < n && labels[j] != FrameClass::Detached) ++j;
        if (j - i >= min_run) runs.push_back({i, j});
        i = j;
    }

    if (runs.size() < kSweepsPerCase) {
        throw OspError(Errc::InsufficientSweeps,
                       "found " + std::to_string(runs.size()) + " qualifying sweeps",
                       static_cast<std::int64_t>(runs.size()));
    }
    if (runs.size() > kSweepsPerCase) {
        // Keep the six longest; equal lengths favor the earlier run.
        std::vector<std::size_t> order(runs.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return runs[a].length() > runs[b].length();
        });
        order.resize(kSweepsPerCase);
        std::sort(order.begin(), order.end());
        std::vector<SweepRange> kept;
        kept.reserve(kSweepsPerCase);
        for (std::size_t k : order) kept.push_back(runs[k]);
        runs = std::move(kept);
    }
    return runs;
}

std::vector<int> resample_indices(const SweepRange& range, int target) {
    if (range.length() <= 0) throw OspError(Errc::EmptyRange, "empty sweep range");
    if (target < 2) throw OspError(Errc::InvalidArgument, "target must be >= 2");

    const std::int64_t n = range.length();
    const std::int64_t denom = target - 1;
    std::vector<int> indices(target);
    for (std::int64_t j = 0; j < target; ++j) {
        // round half away from zero, exactly: floor((2*num + den) / (2*den))
        const std::int64_t num = j * (n - 1);
        const std::int64_t offset = (2 * num + denom) / (2 * denom);
        indices[j] = range.start + static_cast<int>(offset);
    }
    return indices;
}

std::vector<ProbVector> resample_sweep(const FrameProbabilitySequence& probs,
                                       const SweepRange& range, int target) {
    if (range.start < 0 || range.end > static_cast<int>(probs.size())) {
        throw OspError(Errc::InvalidArgument, "range outside sequence");
    }
    const auto indices = resample_indices(range, target);
    std::vector<ProbVector> row;
    row.reserve(indices.size());
    for (int idx : indices) row.push_back(probs[idx]);
    return row;
}

SweepGrid build_sweep_grid(const FrameProbabilitySequence& probs,
                           const SegmentationConfig& config) {
    const auto labels = label_frames(probs);
    const auto smoothed = smooth_labels(labels, config.smooth_window);
    const auto ranges = segment_sweeps(smoothed, config.min_run);

    SweepGrid grid;
    for (int s = 0; s < kSweepsPerCase; ++s) {
        grid.source_ranges[s] = ranges[s];
        const auto indices = resample_indices(ranges[s]);
        for (int p = 0; p < kPositionsPerSweep; ++p) {
            grid.cells[s * kPositionsPerSweep + p] = probs[indices[p]];
            grid.source_indices[s * kPositionsPerSweep + p] = indices[p];
        }
    }
    return grid;
}

}  // namespace osp::sweep
