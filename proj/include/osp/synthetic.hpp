#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "osp/biometry.hpp"
#include "osp/frame_types.hpp"

namespace osp::synth {

enum class SweepRole { Transverse, Sagittal };

// What one generated case should contain. Presentation is encoded as the
// relative order of head and torso intervals along each transverse sweep:
// cephalic puts the head interval on the caudal (early-frame) side of the
// torso, breech reverses it.
struct Scenario {
    int fetus_count = 1;
    std::vector<Presentation> presentations = {Presentation::Cephalic};  // per fetus
    double ga_days = 150.0;
    double label_noise = 0.0;   // per-frame flip probability, < 0.5
    double mask_noise_px = 0.0; // boundary jitter std in pixels
    int frames_per_sweep_min = 150;
    int frames_per_sweep_max = 400;
    double pixel_spacing_mm = 0.5;
};

// Which of the six sweeps run transverse vs sagittal is protocol lore the
// data itself does not pin down, so it stays a parameter.
struct GeneratorOptions {
    std::array<SweepRole, 6> sweep_roles = {
        SweepRole::Transverse, SweepRole::Transverse, SweepRole::Transverse,
        SweepRole::Sagittal,   SweepRole::Sagittal,   SweepRole::Sagittal,
    };
};

struct SyntheticCase {
    CaseRecord record;
    Scenario scenario;
    std::uint64_t seed = 0;
};

SyntheticCase generate_case(const Scenario& scenario, std::uint64_t seed,
                            const biometry::GrowthCurve& curve, std::string case_id = "",
                            const GeneratorOptions& options = {});

// Corpus spec file: seed, per-class counts, noise levels, and optional
// range overrides.
struct CorpusSpec {
    std::uint64_t seed = 42;
    int singleton_cephalic = 0;
    int singleton_breech = 0;
    int twin_discordant = 0;
    int twin_same_presentation = 0;
    double label_noise = 0.0;
    double mask_noise_px = 0.0;
    double ga_days_min = 98.0;
    double ga_days_max = 224.0;
    int frames_per_sweep_min = 150;
    int frames_per_sweep_max = 400;
    double pixel_spacing_mm = 0.5;

    int total() const {
        return singleton_cephalic + singleton_breech + twin_discordant + twin_same_presentation;
    }

    static CorpusSpec from_json_string(const std::string& text);
    static CorpusSpec load(const std::filesystem::path& path);
};

// Case i is generated from the stream mix_seed(spec.seed, i), so corpora
// are reproducible case by case and independent of scheduling.
std::vector<SyntheticCase> generate_corpus(const CorpusSpec& spec,
                                           const biometry::GrowthCurve& curve, int threads = 0);

// Emits frames.csv, meta.json and masks/ in the formats read_case expects.
void write_case(const CaseRecord& rec, const std::filesystem::path& dir);

}  // namespace osp::synth
