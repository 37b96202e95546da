#include "osp/pipeline.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "osp/errors.hpp"
#include "osp/parallel.hpp"

namespace osp::pipeline {
namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

nlohmann::ordered_json votes_json(const std::vector<double>& votes) {
    auto arr = nlohmann::ordered_json::array();
    for (double v : votes) arr.push_back(round4(v));
    return arr;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw OspError(Errc::IoFailure, "short write to " + path.string());
}

}  // namespace

const char* ga_status_name(GaStatus s) {
    switch (s) {
        case GaStatus::Estimated: return "estimated";
        case GaStatus::ExcludedOutOfCurve: return "excluded_out_of_curve";
        case GaStatus::NoHeadFrames: return "no_head_frames";
        case GaStatus::NotApplicableTwin: return "not_applicable_twin";
        case GaStatus::NotAvailable: return "not_available";
    }
    return "?";
}

const char* presentation_status_name(PresentationStatus s) {
    switch (s) {
        case PresentationStatus::Estimated: return "estimated";
        case PresentationStatus::NotApplicableTwin: return "not_applicable_twin";
        case PresentationStatus::NotAvailable: return "not_available";
    }
    return "?";
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    rf::save_forest(dir / "count_model.json", bundle.count_model);
    rf::save_forest(dir / "presentation_model.json", bundle.presentation_model);
    bundle.curve.save(dir / "curve.json");
    nlohmann::ordered_json seg;
    seg["smooth_window"] = bundle.segmentation.smooth_window;
    seg["min_run"] = bundle.segmentation.min_run;
    write_text_file(dir / "segmentation.json", seg.dump() + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    ModelBundle bundle;
    bundle.count_model = rf::load_forest(dir / "count_model.json");
    bundle.presentation_model = rf::load_forest(dir / "presentation_model.json");
    bundle.curve = biometry::GrowthCurve::load(dir / "curve.json");
    const auto seg_path = dir / "segmentation.json";
    std::ifstream in(seg_path);
    if (!in) throw OspError(Errc::MissingFile, "cannot open " + seg_path.string());
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        bundle.segmentation.smooth_window = j.at("smooth_window").get<int>();
        bundle.segmentation.min_run = j.at("min_run").get<int>();
    } catch (const nlohmann::json::exception& ex) {
        throw OspError(Errc::BadFormat, seg_path.string() + ": " + ex.what());
    }
    return bundle;
}

InterpretationReport interpret_case(const CaseRecord& rec, const ModelBundle& bundle) {
    InterpretationReport report;
    report.case_id = rec.case_id;

    sweep::SweepGrid grid;
    try {
        grid = sweep::build_sweep_grid(rec.probabilities, bundle.segmentation);
    } catch (const OspError& ex) {
        if (ex.code() != Errc::InsufficientSweeps) throw;
        report.failed = true;
        report.failure = ex.what();
        report.sweeps_found = static_cast<int>(ex.detail());
        return report;
    }
    report.sweep_ranges.assign(grid.source_ranges.begin(), grid.source_ranges.end());

    const std::vector<double> features = rf::flatten_grid(grid);
    const rf::Prediction count_pred = rf::predict(bundle.count_model, features);
    report.fetus_count = count_pred.label + 1;  // class 0 = single, 1 = twin
    report.count_vote_fractions = count_pred.vote_fractions;

    // Head frames are taken from raw per-frame argmax (no smoothing): skull
    // frames are sparse and smoothing could erase short but valid runs.
    const sweep::FrameLabelSequence labels = sweep::label_frames(rec.probabilities);
    std::vector<int> head_frames;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
        if (labels[i] == FrameClass::Head && rec.masks.count(i)) head_frames.push_back(i);
    report.n_head_frame_candidates = static_cast<int>(head_frames.size());

    if (*report.fetus_count == 2) {
        report.ga_status = GaStatus::NotApplicableTwin;
        report.presentation_status = PresentationStatus::NotApplicableTwin;
        return report;
    }

    const biometry::CaseMeasurement meas = biometry::measure_case(rec, head_frames, bundle.curve);
    report.n_head_frames_measured = meas.n_frames_used;
    report.n_head_frames_skipped = meas.n_frames_skipped;
    report.aggregated_hc_mm = meas.aggregated_hc_mm;
    switch (meas.status) {
        case biometry::MeasureStatus::Estimated:
            report.ga_status = GaStatus::Estimated;
            report.ga = meas.estimate;
            break;
        case biometry::MeasureStatus::ExcludedOutOfCurve:
            report.ga_status = GaStatus::ExcludedOutOfCurve;
            break;
        case biometry::MeasureStatus::NoHeadFrames:
            report.ga_status = GaStatus::NoHeadFrames;
            break;
    }

    const rf::Prediction pres_pred = rf::predict(bundle.presentation_model, features);
    report.presentation_status = PresentationStatus::Estimated;
    report.presentation = static_cast<Presentation>(pres_pred.label);
    report.presentation_vote_fractions = pres_pred.vote_fractions;
    return report;
}

std::vector<InterpretationReport> interpret_batch(const std::vector<CaseRecord>& cases,
                                                  const ModelBundle& bundle, int threads) {
    std::vector<InterpretationReport> reports(cases.size());
    parallel_for_indexed(cases.size(), threads,
                         [&](std::size_t i) { reports[i] = interpret_case(cases[i], bundle); });
    return reports;
}

std::string report_to_json_string(const InterpretationReport& r) {
    nlohmann::ordered_json j;
    j["schema"] = "report-v1";
    j["case_id"] = r.case_id;
    j["status"] = r.failed ? "failed" : "ok";
    if (r.failed) {
        j["failure"] = r.failure;
        j["sweeps_found"] = r.sweeps_found;
        j["fetus_count"] = nullptr;
    } else {
        nlohmann::ordered_json fc;
        fc["value"] = *r.fetus_count;
        fc["vote_fractions"] = votes_json(r.count_vote_fractions);
        j["fetus_count"] = fc;
    }

    nlohmann::ordered_json ga;
    ga["status"] = ga_status_name(r.ga_status);
    if (r.ga_status == GaStatus::Estimated) {
        ga["ga_days"] = round4(r.ga->ga_days);
        ga["hc_mm"] = round4(r.ga->hc_mm);
        ga["n_frames_used"] = r.ga->n_frames_used;
    } else if (r.ga_status == GaStatus::ExcludedOutOfCurve) {
        ga["hc_mm"] = round4(*r.aggregated_hc_mm);
    }
    j["ga"] = ga;

    nlohmann::ordered_json pres;
    pres["status"] = presentation_status_name(r.presentation_status);
    if (r.presentation_status == PresentationStatus::Estimated) {
        pres["value"] = presentation_name(*r.presentation);
        pres["vote_fractions"] = votes_json(r.presentation_vote_fractions);
    }
    j["presentation"] = pres;

    nlohmann::ordered_json inter;
    auto ranges = nlohmann::ordered_json::array();
    for (const auto& range : r.sweep_ranges) ranges.push_back({range.start, range.end});
    inter["sweep_ranges"] = ranges;
    inter["n_head_frame_candidates"] = r.n_head_frame_candidates;
    inter["n_head_frames_measured"] = r.n_head_frames_measured;
    inter["n_head_frames_skipped"] = r.n_head_frames_skipped;
    inter["aggregated_hc_mm"] =
        r.aggregated_hc_mm ? nlohmann::ordered_json(round4(*r.aggregated_hc_mm))
                           : nlohmann::ordered_json(nullptr);
    j["intermediates"] = inter;
    return j.dump(2) + "\n";
}

void write_report(const InterpretationReport& report, const std::filesystem::path& path) {
    write_text_file(path, report_to_json_string(report));
}

}  // namespace osp::pipeline
