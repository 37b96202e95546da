#pragma once

#include <filesystem>
#include <string>

#include "osp/frame_types.hpp"

namespace osp::io {

// On-disk case layout:
//   <case_dir>/frames.csv    per-frame class probabilities
//   <case_dir>/meta.json     case id, pixel spacing, optional truth
//   <case_dir>/masks/NNNNNN.pgm   binary head masks, 6-digit frame index

inline constexpr const char* kFramesCsvHeader =
    "frame,p_head,p_torso_t,p_fetus_sag,p_detached,p_background";

FrameProbabilitySequence read_frame_probabilities(const std::filesystem::path& path);

HeadMask read_mask(const std::filesystem::path& path, double pixel_spacing_mm);

CaseRecord read_case(const std::filesystem::path& dir);

// Writers used by the synthetic generator; probabilities are emitted with
// shortest round-trip formatting so write -> read is bit exact.
void write_frame_probabilities(const std::filesystem::path& path,
                               const FrameProbabilitySequence& seq);
void write_mask(const std::filesystem::path& path, const HeadMask& mask);
void write_meta(const std::filesystem::path& path, const CaseRecord& rec);

std::string mask_filename(int frame_index);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// Validates invariants and renormalizes each row exactly as the CSV reader
// does; `where` names the offending frame in errors.
void validate_probability_vector(ProbVector& p, std::int64_t where);

}  // namespace osp::io
