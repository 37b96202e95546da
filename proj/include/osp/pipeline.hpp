#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osp/biometry.hpp"
#include "osp/forest.hpp"
#include "osp/frame_types.hpp"
#include "osp/sweep.hpp"

namespace osp::pipeline {

// Everything interpretation needs: the two forests, the growth curve used to
// map head circumference to age, and the sweep segmentation settings the
// models were trained with.
struct ModelBundle {
    rf::ForestModel count_model;
    rf::ForestModel presentation_model;
    biometry::GrowthCurve curve = biometry::GrowthCurve::hadlock1984();
    sweep::SegmentationConfig segmentation;
};

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

enum class GaStatus {
    Estimated,
    ExcludedOutOfCurve,  // HC measured but outside the curve's validity range
    NoHeadFrames,        // nothing measurable
    NotApplicableTwin,
    NotAvailable,        // interpretation failed upstream
};

enum class PresentationStatus { Estimated, NotApplicableTwin, NotAvailable };

struct InterpretationReport {
    std::string case_id;
    bool failed = false;      // sweep segmentation did not find six sweeps
    std::string failure;      // human-readable reason when failed
    int sweeps_found = -1;    // populated on segmentation failure

    std::optional<int> fetus_count;  // 1 or 2
    std::vector<double> count_vote_fractions;

    GaStatus ga_status = GaStatus::NotAvailable;
    std::optional<biometry::GaEstimate> ga;
    std::optional<double> aggregated_hc_mm;  // set when HC was measurable
    int n_head_frame_candidates = 0;         // head-labelled frames with masks
    int n_head_frames_measured = 0;
    int n_head_frames_skipped = 0;

    PresentationStatus presentation_status = PresentationStatus::NotAvailable;
    std::optional<Presentation> presentation;
    std::vector<double> presentation_vote_fractions;

    std::vector<sweep::SweepRange> sweep_ranges;  // six when segmentation succeeded
};

const char* ga_status_name(GaStatus s);
const char* presentation_status_name(PresentationStatus s);

InterpretationReport interpret_case(const CaseRecord& rec, const ModelBundle& bundle);

// Order-preserving; one bad case does not fail the batch.
std::vector<InterpretationReport> interpret_batch(const std::vector<CaseRecord>& cases,
                                                  const ModelBundle& bundle, int threads = 0);

// Canonical report-v1 JSON text; byte-identical across runs and platforms for
// the same report. Numeric fields are rounded to 4 decimals.
std::string report_to_json_string(const InterpretationReport& report);
void write_report(const InterpretationReport& report, const std::filesystem::path& path);

}  // namespace osp::pipeline
