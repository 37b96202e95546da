#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osp/biometry.hpp"
#include "osp/forest.hpp"
#include "osp/frame_types.hpp"
#include "osp/sweep.hpp"

namespace osp::eval {

// Stratified k-fold assignment: within each stratum, indices are shuffled
// and dealt round-robin, so fold sizes per stratum differ by at most one.
struct FoldAssignment {
    int k = 0;
    std::vector<int> fold_of;  // fold_of[i] in [0, k)
};

FoldAssignment kfold_split(const std::vector<int>& strata, int k, std::uint64_t seed);

struct MedianIqr {
    double median = 0.0;
    double iqr = 0.0;  // p75 - p25, interpolated
};

MedianIqr median_and_iqr(std::vector<double> values);

// Per true class: how many predictions matched / missed. A prediction of -1
// (interpretation failed) counts as incorrect.
struct ConfusionTable {
    std::vector<std::int64_t> correct;
    std::vector<std::int64_t> incorrect;
};

ConfusionTable confusion_table(const std::vector<int>& predicted, const std::vector<int>& truth,
                               int n_classes);

struct GaErrorStats {
    std::optional<double> median_days;
    std::optional<double> iqr_days;
    int n = 0;
};

// Every case falls in exactly one GA bucket, so
//   n_included + n_excluded + n_no_head_frames + n_twins == n_cases.
// Cases whose sweep segmentation failed outright are folded into
// n_no_head_frames and also counted separately for visibility.
struct GaAccounting {
    int n_included = 0;
    int n_excluded = 0;
    int n_no_head_frames = 0;
    int n_twins = 0;
    int n_failed_segmentation = 0;
};

struct PerCaseOutcome {
    std::string case_id;
    int fold = -1;
    int true_count = 0;
    int pred_count = -1;          // -1 when interpretation failed
    int true_presentation = -1;   // Presentation code or -1 when absent
    int pred_presentation = -1;
    std::optional<double> true_ga_days;
    std::optional<double> pred_ga_days;
    std::optional<double> ga_error_days;  // predicted - truth
    std::string ga_status;
};

struct EvalReport {
    int n_cases = 0;
    int k = 0;
    std::uint64_t seed = 0;
    ConfusionTable count_confusion;         // rows: single, twin
    ConfusionTable presentation_confusion;  // rows: cephalic, breech (true singletons)
    GaErrorStats ga_overall;
    GaErrorStats ga_second_trimester;  // truth GA in [98, 196) days
    GaAccounting accounting;
    std::vector<PerCaseOutcome> per_case;
};

// Leakage-free k-fold cross-validation over a labelled corpus: per fold, both
// forests are trained on the other folds only, then the held-out cases run
// through the full interpretation pipeline. The presentation table covers all
// true singletons; when the pipeline routed a case down the twin path, the
// fold's presentation model is still consulted so the table stays comparable
// across folds.
EvalReport run_cross_validation(const std::vector<CaseRecord>& corpus, int k,
                                const rf::ForestParams& forest_params,
                                const biometry::GrowthCurve& curve,
                                const sweep::SegmentationConfig& segmentation, std::uint64_t seed,
                                int threads = 0);

std::string eval_report_to_json_string(const EvalReport& report);  // "eval-v1"
std::string render_confusion_tables(const EvalReport& report);     // aligned text
std::string per_case_csv(const EvalReport& report);

}  // namespace osp::eval
