// Command-line front end: synthesize corpora, train model bundles, interpret
// single cases, and run cross-validated evaluations.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "osp/biometry.hpp"
#include "osp/case_io.hpp"
#include "osp/errors.hpp"
#include "osp/evaluation.hpp"
#include "osp/forest.hpp"
#include "osp/pipeline.hpp"
#include "osp/rng.hpp"
#include "osp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace osp;

namespace {

struct ForestFlags {
    int trees = 100;
    int max_depth = -1;
    int min_samples_split = 2;
    std::string candidate_features = "sqrt";
    bool no_bootstrap = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--trees", trees, "Trees per forest")->capture_default_str();
        cmd->add_option("--max-depth", max_depth, "Maximum tree depth, -1 = unlimited")
            ->capture_default_str();
        cmd->add_option("--min-samples-split", min_samples_split,
                        "Smallest node size still split")
            ->capture_default_str();
        cmd->add_option("--candidate-features", candidate_features,
                        "Features tried per node: 'sqrt' or a positive integer")
            ->capture_default_str();
        cmd->add_flag("--no-bootstrap", no_bootstrap, "Train each tree on the full sample");
    }

    rf::ForestParams params(std::uint64_t seed) const {
        rf::ForestParams p;
        p.n_trees = trees;
        p.max_depth = max_depth;
        p.min_samples_split = min_samples_split;
        p.bootstrap = !no_bootstrap;
        p.seed = seed;
        if (candidate_features == "sqrt") {
            p.n_candidate_features = 0;
        } else {
            try {
                p.n_candidate_features = std::stoi(candidate_features);
            } catch (const std::exception&) {
                throw CLI::ValidationError("--candidate-features",
                                           "expected 'sqrt' or a positive integer");
            }
            if (p.n_candidate_features <= 0)
                throw CLI::ValidationError("--candidate-features",
                                           "expected 'sqrt' or a positive integer");
        }
        if (p.n_trees <= 0) throw CLI::ValidationError("--trees", "must be positive");
        if (p.min_samples_split < 2)
            throw CLI::ValidationError("--min-samples-split", "must be >= 2");
        return p;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw OspError(Errc::IoFailure, "short write to " + path.string());
}

// A corpus directory either carries a manifest.json ({"cases": [ids...]}) or
// is scanned for subdirectories that contain a frames.csv.
std::vector<fs::path> list_case_dirs(const fs::path& corpus_dir) {
    if (!fs::is_directory(corpus_dir))
        throw OspError(Errc::MissingFile, corpus_dir.string() + " is not a directory");
    const fs::path manifest = corpus_dir / "manifest.json";
    std::vector<fs::path> dirs;
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
            for (const auto& id : j.at("cases"))
                dirs.push_back(corpus_dir / id.get<std::string>());
        } catch (const nlohmann::json::exception& ex) {
            throw OspError(Errc::BadFormat, manifest.string() + ": " + ex.what());
        }
        return dirs;
    }
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "frames.csv"))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw OspError(Errc::MissingFile, "no cases found in " + corpus_dir.string());
    return dirs;
}

std::vector<CaseRecord> load_corpus(const fs::path& corpus_dir, bool require_truth) {
    std::vector<CaseRecord> corpus;
    for (const fs::path& dir : list_case_dirs(corpus_dir)) {
        corpus.push_back(io::read_case(dir));
        if (require_truth && !corpus.back().truth)
            throw OspError(Errc::MissingTruth,
                           "case \"" + corpus.back().case_id + "\" has no ground truth");
    }
    return corpus;
}

std::string format_ga(double ga_days) {
    const long long total = std::llround(ga_days);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lldw%lldd", total / 7, total % 7);
    return buf;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, int threads) {
    const synth::CorpusSpec spec = synth::CorpusSpec::load(spec_path);
    const auto curve = biometry::GrowthCurve::hadlock1984();
    const std::vector<synth::SyntheticCase> cases = synth::generate_corpus(spec, curve, threads);
    fs::create_directories(out_dir);
    nlohmann::ordered_json manifest;
    auto ids = nlohmann::ordered_json::array();
    for (const synth::SyntheticCase& c : cases) {
        synth::write_case(c.record, out_dir / c.record.case_id);
        ids.push_back(c.record.case_id);
    }
    manifest["cases"] = ids;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << cases.size() << " cases to " << out_dir.string() << "\n";
    return 0;
}

int cmd_train(const fs::path& corpus_dir, const fs::path& bundle_dir, const ForestFlags& flags,
              std::uint64_t seed, int window, int min_run, const std::string& curve_path,
              int threads) {
    // Flag validation happens before any file is touched.
    rf::ForestParams count_params = flags.params(mix_seed(seed, 0));
    rf::ForestParams pres_params = flags.params(mix_seed(seed, 1));
    const std::vector<CaseRecord> corpus = load_corpus(corpus_dir, /*require_truth=*/true);
    const auto curve = curve_path.empty() ? biometry::GrowthCurve::hadlock1984()
                                          : biometry::GrowthCurve::load(curve_path);
    sweep::SegmentationConfig seg;
    seg.smooth_window = window;
    seg.min_run = min_run;

    rf::Dataset count_data, pres_data;
    count_data.n_classes = 2;
    pres_data.n_classes = 2;
    int skipped = 0;
    for (const CaseRecord& rec : corpus) {
        std::vector<double> row;
        try {
            row = rf::flatten_grid(sweep::build_sweep_grid(rec.probabilities, seg));
        } catch (const OspError& ex) {
            if (ex.code() != Errc::InsufficientSweeps) throw;
            ++skipped;
            continue;
        }
        count_data.features.push_back(row);
        count_data.labels.push_back(rec.truth->fetus_count - 1);
        if (rec.truth->fetus_count == 1 && rec.truth->presentation) {
            pres_data.features.push_back(std::move(row));
            pres_data.labels.push_back(static_cast<int>(*rec.truth->presentation));
        }
    }
    if (skipped > 0)
        std::cerr << "warning: " << skipped << " case(s) skipped (sweep segmentation failed)\n";
    if (count_data.n_samples() == 0)
        throw OspError(Errc::TooFewSamples, "no usable training cases");
    if (pres_data.n_samples() == 0)
        throw OspError(Errc::TooFewSamples, "no singleton cases with presentation truth");

    pipeline::ModelBundle bundle;
    bundle.count_model = rf::fit_forest(count_data, count_params, threads);
    bundle.presentation_model = rf::fit_forest(pres_data, pres_params, threads);
    bundle.curve = curve;
    bundle.segmentation = seg;
    pipeline::save_bundle(bundle, bundle_dir);
    std::cout << "trained on " << count_data.n_samples() << " cases ("
              << pres_data.n_samples() << " singleton presentations); bundle in "
              << bundle_dir.string() << "\n";
    return 0;
}

int cmd_interpret(const fs::path& case_dir, const fs::path& bundle_dir, const fs::path& out_path) {
    const CaseRecord rec = io::read_case(case_dir);
    const pipeline::ModelBundle bundle = pipeline::load_bundle(bundle_dir);
    const pipeline::InterpretationReport report = pipeline::interpret_case(rec, bundle);
    pipeline::write_report(report, out_path);

    if (report.failed) {
        std::cout << "case " << report.case_id << ": interpretation failed (" << report.failure
                  << ")\n";
        return 0;
    }
    std::cout << "case " << report.case_id << ": " << *report.fetus_count
              << (*report.fetus_count == 1 ? " fetus" : " fetuses");
    if (*report.fetus_count == 2) {
        std::cout << "; gestational age and presentation not reported for twins";
    } else {
        if (report.presentation_status == pipeline::PresentationStatus::Estimated)
            std::cout << ", " << presentation_name(*report.presentation) << " presentation";
        switch (report.ga_status) {
            case pipeline::GaStatus::Estimated: {
                char buf[96];
                std::snprintf(buf, sizeof buf, ", GA %s (HC %.1f mm from %d frames)",
                              format_ga(report.ga->ga_days).c_str(), report.ga->hc_mm,
                              report.ga->n_frames_used);
                std::cout << buf;
                break;
            }
            case pipeline::GaStatus::ExcludedOutOfCurve: {
                char buf[96];
                std::snprintf(buf, sizeof buf, ", GA not estimated (HC %.1f mm outside curve range)",
                              *report.aggregated_hc_mm);
                std::cout << buf;
                break;
            }
            case pipeline::GaStatus::NoHeadFrames:
                std::cout << ", GA not estimated (no measurable head frames)";
                break;
            default:
                break;
        }
    }
    std::cout << "\nreport written to " << out_path.string() << "\n";
    return 0;
}

int cmd_eval(const fs::path& corpus_dir, int k, std::uint64_t seed, const ForestFlags& flags,
             int window, int min_run, const std::string& curve_path, const fs::path& out_path,
             const fs::path& per_case_path, int threads) {
    const rf::ForestParams params = flags.params(seed);
    const std::vector<CaseRecord> corpus = load_corpus(corpus_dir, /*require_truth=*/true);
    const auto curve = curve_path.empty() ? biometry::GrowthCurve::hadlock1984()
                                          : biometry::GrowthCurve::load(curve_path);
    sweep::SegmentationConfig seg;
    seg.smooth_window = window;
    seg.min_run = min_run;

    const eval::EvalReport report =
        eval::run_cross_validation(corpus, k, params, curve, seg, seed, threads);

    std::cout << report.n_cases << " cases, " << k << "-fold cross-validation\n\n";
    std::cout << eval::render_confusion_tables(report) << "\n";
    auto stats_line = [](const char* label, const eval::GaErrorStats& s) {
        if (s.median_days) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%s: median %.1f days, IQR %.1f days (n=%d)\n", label,
                          *s.median_days, *s.iqr_days, s.n);
            std::cout << buf;
        } else {
            std::cout << label << ": no estimates\n";
        }
    };
    stats_line("GA error", report.ga_overall);
    stats_line("GA error, second trimester", report.ga_second_trimester);
    const auto& acc = report.accounting;
    std::cout << "GA accounting: " << acc.n_included << " included, " << acc.n_excluded
              << " excluded (outside curve), " << acc.n_no_head_frames << " without head frames, "
              << acc.n_twins << " twins";
    if (acc.n_failed_segmentation > 0)
        std::cout << " (" << acc.n_failed_segmentation << " failed sweep segmentation)";
    std::cout << "\n";

    if (!out_path.empty()) write_text(out_path, eval::eval_report_to_json_string(report));
    if (!per_case_path.empty()) write_text(per_case_path, eval::per_case_csv(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Obstetric sweep protocol interpreter"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads, 0 = all cores")
        ->capture_default_str();

    std::string spec_path, synth_out;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
    synth->add_option("spec", spec_path, "Corpus spec JSON")->required();
    synth->add_option("out_dir", synth_out, "Output corpus directory")->required();

    std::string train_corpus, train_bundle, train_curve;
    std::uint64_t train_seed = 42;
    int train_window = 5, train_min_run = 20;
    ForestFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "Train a model bundle on a labelled corpus");
    train->add_option("corpus", train_corpus, "Corpus directory")->required();
    train->add_option("bundle", train_bundle, "Output bundle directory")->required();
    train_flags.attach(train);
    train->add_option("--seed", train_seed, "Training seed")->capture_default_str();
    train->add_option("--window", train_window, "Label smoothing window (odd)")
        ->capture_default_str();
    train->add_option("--min-run", train_min_run, "Minimum frames per sweep run")
        ->capture_default_str();
    train->add_option("--curve", train_curve, "Growth curve JSON (default: built-in Hadlock-1984)");

    std::string interp_case, interp_bundle, interp_out = "report.json";
    CLI::App* interpret = app.add_subcommand("interpret", "Interpret one case");
    interpret->add_option("case_dir", interp_case, "Case directory")->required();
    interpret->add_option("bundle", interp_bundle, "Model bundle directory")->required();
    interpret->add_option("--out", interp_out, "Report path")->capture_default_str();

    std::string eval_corpus, eval_curve, eval_out, eval_csv;
    std::uint64_t eval_seed = 42;
    int eval_k = 5, eval_window = 5, eval_min_run = 20;
    ForestFlags eval_flags;
    CLI::App* evaluate = app.add_subcommand("eval", "Cross-validated evaluation on a corpus");
    evaluate->add_option("corpus", eval_corpus, "Corpus directory")->required();
    evaluate->add_option("--k", eval_k, "Number of folds")->capture_default_str();
    evaluate->add_option("--seed", eval_seed, "Fold and training seed")->capture_default_str();
    eval_flags.attach(evaluate);
    evaluate->add_option("--window", eval_window, "Label smoothing window (odd)")
        ->capture_default_str();
    evaluate->add_option("--min-run", eval_min_run, "Minimum frames per sweep run")
        ->capture_default_str();
    evaluate->add_option("--curve", eval_curve, "Growth curve JSON (default: built-in Hadlock-1984)");
    evaluate->add_option("--out", eval_out, "Write eval-v1 JSON here");
    evaluate->add_option("--per-case", eval_csv, "Write per-case CSV here");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(spec_path, synth_out, threads);
        if (train->parsed())
            return cmd_train(train_corpus, train_bundle, train_flags, train_seed, train_window,
                             train_min_run, train_curve, threads);
        if (interpret->parsed()) return cmd_interpret(interp_case, interp_bundle, interp_out);
        if (evaluate->parsed()) {
            if (eval_k < 2) throw CLI::ValidationError("--k", "must be >= 2");
            return cmd_eval(eval_corpus, eval_k, eval_seed, eval_flags, eval_window, eval_min_run,
                            eval_curve, eval_out, eval_csv, threads);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const OspError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
