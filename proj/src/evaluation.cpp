#include "osp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "osp/case_io.hpp"
#include "osp/errors.hpp"
#include "osp/parallel.hpp"
#include "osp/pipeline.hpp"
#include "osp/rng.hpp"
#include "osp/stats.hpp"

namespace osp::eval {
namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

constexpr double kSecondTrimesterMinDays = 98.0;   // 14 weeks
constexpr double kSecondTrimesterMaxDays = 196.0;  // 28 weeks, exclusive

}  // namespace

FoldAssignment kfold_split(const std::vector<int>& strata, int k, std::uint64_t seed) {
    if (k < 2) throw OspError(Errc::InvalidArgument, "k must be >= 2");
    const int n = static_cast<int>(strata.size());
    if (n < k) throw OspError(Errc::TooFewSamples, "need at least k samples", n);

    std::map<int, std::vector<int>> by_stratum;
    for (int i = 0; i < n; ++i) by_stratum[strata[i]].push_back(i);

    FoldAssignment out;
    out.k = k;
    out.fold_of.assign(strata.size(), -1);
    for (auto& [stratum, members] : by_stratum) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(stratum)));
        for (std::size_t i = members.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(members[i - 1], members[j]);
        }
        for (std::size_t pos = 0; pos < members.size(); ++pos)
            out.fold_of[static_cast<std::size_t>(members[pos])] = static_cast<int>(pos % k);
    }
    return out;
}

MedianIqr median_and_iqr(std::vector<double> values) {
    if (values.empty()) throw OspError(Errc::EmptyList, "median of nothing");
    std::sort(values.begin(), values.end());
    MedianIqr out;
    out.median = percentile_sorted(values, 0.50);
    out.iqr = percentile_sorted(values, 0.75) - percentile_sorted(values, 0.25);
    return out;
}

ConfusionTable confusion_table(const std::vector<int>& predicted, const std::vector<int>& truth,
                               int n_classes) {
    if (predicted.size() != truth.size())
        throw OspError(Errc::LengthMismatch, "predicted and truth lengths differ");
    if (n_classes < 1) throw OspError(Errc::InvalidArgument, "n_classes must be >= 1");
    ConfusionTable table;
    table.correct.assign(static_cast<std::size_t>(n_classes), 0);
    table.incorrect.assign(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        if (t < 0 || t >= n_classes)
            throw OspError(Errc::InvalidArgument, "truth label out of range", static_cast<std::int64_t>(i));
        if (predicted[i] == t)
            ++table.correct[static_cast<std::size_t>(t)];
        else
            ++table.incorrect[static_cast<std::size_t>(t)];
    }
    return table;
}

EvalReport run_cross_validation(const std::vector<CaseRecord>& corpus, int k,
                                const rf::ForestParams& forest_params,
                                const biometry::GrowthCurve& curve,
                                const sweep::SegmentationConfig& segmentation, std::uint64_t seed,
                                int threads) {
    const int n = static_cast<int>(corpus.size());
    if (k < 2) throw OspError(Errc::InvalidArgument, "k must be >= 2");
    if (n < k) throw OspError(Errc::TooFewSamples, "need at least k cases", n);
    for (const CaseRecord& rec : corpus)
        if (!rec.truth)
            throw OspError(Errc::MissingTruth, "case \"" + rec.case_id + "\" has no ground truth");

    // Features depend only on the input frames, not on fold membership, so
    // compute them once. Cases whose segmentation fails keep nullopt.
    std::vector<std::optional<std::vector<double>>> features(corpus.size());
    parallel_for_indexed(corpus.size(), threads, [&](std::size_t i) {
        try {
            features[i] = rf::flatten_grid(sweep::build_sweep_grid(corpus[i].probabilities, segmentation));
        } catch (const OspError& ex) {
            if (ex.code() != Errc::InsufficientSweeps) throw;
        }
    });

    // Strata: singleton-cephalic / singleton-breech / twin / singleton with
    // unknown presentation, so every fold sees every kind of case.
    std::vector<int> strata(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const GroundTruth& t = *corpus[i].truth;
        if (t.fetus_count == 2)
            strata[i] = 2;
        else if (!t.presentation)
            strata[i] = 3;
        else
            strata[i] = t.presentation == Presentation::Cephalic ? 0 : 1;
    }
    const FoldAssignment folds = kfold_split(strata, k, seed);

    EvalReport report;
    report.n_cases = n;
    report.k = k;
    report.seed = seed;
    report.per_case.resize(corpus.size());

    for (int fold = 0; fold < k; ++fold) {
        rf::Dataset count_data, pres_data;
        count_data.n_classes = 2;
        pres_data.n_classes = 2;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (folds.fold_of[i] == fold || !features[i]) continue;
            const GroundTruth& t = *corpus[i].truth;
            count_data.features.push_back(*features[i]);
            count_data.labels.push_back(t.fetus_count - 1);
            if (t.fetus_count == 1 && t.presentation) {
                pres_data.features.push_back(*features[i]);
                pres_data.labels.push_back(static_cast<int>(*t.presentation));
            }
        }

        rf::ForestParams count_params = forest_params;
        count_params.seed = mix_seed(seed, static_cast<std::uint64_t>(fold), 0);
        rf::ForestParams pres_params = forest_params;
        pres_params.seed = mix_seed(seed, static_cast<std::uint64_t>(fold), 1);

        pipeline::ModelBundle bundle;
        bundle.count_model = rf::fit_forest(count_data, count_params, threads);
        bundle.presentation_model = rf::fit_forest(pres_data, pres_params, threads);
        bundle.curve = curve;
        bundle.segmentation = segmentation;

        std::vector<std::size_t> test_indices;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            if (folds.fold_of[i] == fold) test_indices.push_back(i);

        parallel_for_indexed(test_indices.size(), threads, [&](std::size_t ti) {
            const std::size_t i = test_indices[ti];
            const CaseRecord& rec = corpus[i];
            const GroundTruth& t = *rec.truth;
            PerCaseOutcome& o = report.per_case[i];
            o.case_id = rec.case_id;
            o.fold = fold;
            o.true_count = t.fetus_count;
            o.true_presentation = t.presentation ? static_cast<int>(*t.presentation) : -1;
            o.true_ga_days = t.ga_days;

            if (!features[i]) {
                o.ga_status = "failed";
                return;
            }
            const pipeline::InterpretationReport r = pipeline::interpret_case(rec, bundle);
            o.pred_count = *r.fetus_count;
            o.ga_status = pipeline::ga_status_name(r.ga_status);
            if (r.ga_status == pipeline::GaStatus::Estimated) {
                o.pred_ga_days = r.ga->ga_days;
                if (t.ga_days) o.ga_error_days = r.ga->ga_days - *t.ga_days;
            }
            if (t.fetus_count == 1 && t.presentation) {
                if (r.presentation_status == pipeline::PresentationStatus::Estimated)
                    o.pred_presentation = static_cast<int>(*r.presentation);
                else
                    o.pred_presentation = rf::predict(bundle.presentation_model, *features[i]).label;
            }
        });
    }

    // Aggregate.
    std::vector<int> count_pred, count_true, pres_pred, pres_true;
    std::vector<double> errors, errors_t2;
    for (const PerCaseOutcome& o : report.per_case) {
        count_true.push_back(o.true_count - 1);
        count_pred.push_back(o.pred_count < 0 ? -1 : o.pred_count - 1);
        if (o.true_count == 1 && o.true_presentation >= 0) {
            pres_true.push_back(o.true_presentation);
            pres_pred.push_back(o.pred_presentation);
        }
        if (o.ga_status == "estimated")
            ++report.accounting.n_included;
        else if (o.ga_status == "excluded_out_of_curve")
            ++report.accounting.n_excluded;
        else if (o.ga_status == "not_applicable_twin")
            ++report.accounting.n_twins;
        else if (o.ga_status == "failed") {
            ++report.accounting.n_no_head_frames;
            ++report.accounting.n_failed_segmentation;
        } else {
            ++report.accounting.n_no_head_frames;
        }
        if (o.ga_error_days) {
            errors.push_back(*o.ga_error_days);
            if (o.true_ga_days && *o.true_ga_days >= kSecondTrimesterMinDays &&
                *o.true_ga_days < kSecondTrimesterMaxDays)
                errors_t2.push_back(*o.ga_error_days);
        }
    }
    report.count_confusion = confusion_table(count_pred, count_true, 2);
    report.presentation_confusion = confusion_table(pres_pred, pres_true, 2);
    report.ga_overall.n = static_cast<int>(errors.size());
    if (!errors.empty()) {
        const MedianIqr mi = median_and_iqr(errors);
        report.ga_overall.median_days = mi.median;
        report.ga_overall.iqr_days = mi.iqr;
    }
    report.ga_second_trimester.n = static_cast<int>(errors_t2.size());
    if (!errors_t2.empty()) {
        const MedianIqr mi = median_and_iqr(errors_t2);
        report.ga_second_trimester.median_days = mi.median;
        report.ga_second_trimester.iqr_days = mi.iqr;
    }
    return report;
}

std::string eval_report_to_json_string(const EvalReport& report) {
    using ordered_json = nlohmann::ordered_json;
    auto ga_stats = [](const GaErrorStats& s) {
        ordered_json j;
        j["median_days"] = s.median_days ? ordered_json(round4(*s.median_days)) : ordered_json(nullptr);
        j["iqr_days"] = s.iqr_days ? ordered_json(round4(*s.iqr_days)) : ordered_json(nullptr);
        j["n"] = s.n;
        return j;
    };
    auto confusion = [](const ConfusionTable& t, std::vector<std::string> classes) {
        ordered_json j;
        j["classes"] = classes;
        j["correct"] = t.correct;
        j["incorrect"] = t.incorrect;
        return j;
    };

    ordered_json j;
    j["schema"] = "eval-v1";
    j["n_cases"] = report.n_cases;
    j["k"] = report.k;
    j["seed"] = report.seed;
    j["count_confusion"] = confusion(report.count_confusion, {"single", "twin"});
    j["presentation_confusion"] = confusion(report.presentation_confusion, {"cephalic", "breech"});
    j["ga_error"] = ga_stats(report.ga_overall);
    j["ga_error_second_trimester"] = ga_stats(report.ga_second_trimester);
    ordered_json acc;
    acc["n_included"] = report.accounting.n_included;
    acc["n_excluded"] = report.accounting.n_excluded;
    acc["n_no_head_frames"] = report.accounting.n_no_head_frames;
    acc["n_twins"] = report.accounting.n_twins;
    acc["n_failed_segmentation"] = report.accounting.n_failed_segmentation;
    j["ga_accounting"] = acc;
    return j.dump(2) + "\n";
}

std::string render_confusion_tables(const EvalReport& report) {
    char line[128];
    std::string out;
    auto table = [&](const char* header, const char* row0, const char* row1,
                     const ConfusionTable& t) {
        std::snprintf(line, sizeof line, "%-14s %9s %11s\n", header, "Correct", "Incorrect");
        out += line;
        const char* names[2] = {row0, row1};
        for (int c = 0; c < 2; ++c) {
            std::snprintf(line, sizeof line, "%-14s %9lld %11lld\n", names[c],
                          static_cast<long long>(t.correct[c]),
                          static_cast<long long>(t.incorrect[c]));
            out += line;
        }
    };
    table("No. fetuses", "Single", "Twin", report.count_confusion);
    out += "\n";
    table("Presentation", "Cephalic", "Breech", report.presentation_confusion);
    return out;
}

std::string per_case_csv(const EvalReport& report) {
    std::string out =
        "case_id,fold,true_count,pred_count,true_presentation,pred_presentation,"
        "true_ga_days,pred_ga_days,ga_error_days,ga_status\n";
    auto pres_name = [](int p) -> std::string {
        return p < 0 ? "" : presentation_name(static_cast<Presentation>(p));
    };
    auto opt = [](const std::optional<double>& v) {
        return v ? io::format_double(*v) : std::string();
    };
    for (const PerCaseOutcome& o : report.per_case) {
        out += o.case_id;
        out += ',' + std::to_string(o.fold);
        out += ',' + std::to_string(o.true_count);
        out += ',' + (o.pred_count < 0 ? std::string() : std::to_string(o.pred_count));
        out += ',' + pres_name(o.true_presentation);
        out += ',' + pres_name(o.pred_presentation);
        out += ',' + opt(o.true_ga_days);
        out += ',' + opt(o.pred_ga_days);
        out += ',' + opt(o.ga_error_days);
        out += ',' + o.ga_status;
        out += '\n';
    }
    return out;
}

}  // namespace osp::eval
