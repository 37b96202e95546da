#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace osp {

// The five frame classes emitted by the upstream frame classifier, in stable
// code order. Background covers frames that show none of the named
// structures, so every frame has a well-defined argmax.
enum class FrameClass : int {
    Head = 0,
    TorsoTransverse = 1,
    FetusSagittal = 2,
    Detached = 3,
    Background = 4,
};

inline constexpr int kNumFrameClasses = 5;

const char* frame_class_name(FrameClass c);

using ProbVector = std::array<double, kNumFrameClasses>;

// Time-ordered per-frame class probabilities. The frame index is the vector
// position: indices run 0..n-1 with no gaps, so it is not stored.
struct FrameProbabilitySequence {
    std::vector<ProbVector> frames;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    const ProbVector& operator[](std::size_t i) const { return frames[i]; }

    bool operator==(const FrameProbabilitySequence&) const = default;
};

// Binary head segmentation mask with isotropic pixel spacing.
struct HeadMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, values 0 or 1
    double pixel_spacing_mm = 0.0;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const HeadMask&) const = default;
};

enum class Presentation : int {
    Cephalic = 0,
    Breech = 1,
};

const char* presentation_name(Presentation p);

struct GroundTruth {
    int fetus_count = 1;  // 1 or 2
    std::optional<Presentation> presentation;  // singletons only
    std::optional<double> ga_days;

    bool operator==(const GroundTruth&) const = default;
};

// One recording: probabilities for every frame, masks for the head frames,
// optional reference truth.
struct CaseRecord {
    std::string case_id;
    FrameProbabilitySequence probabilities;
    std::map<int, HeadMask> masks;  // frame index -> mask
    std::optional<GroundTruth> truth;
    double pixel_spacing_mm = 0.0;

    bool operator==(const CaseRecord&) const = default;
};

}  // namespace osp
