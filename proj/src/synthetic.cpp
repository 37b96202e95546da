#include "osp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "osp/case_io.hpp"
#include "osp/errors.hpp"
#include "osp/parallel.hpp"
#include "osp/rng.hpp"
#include "osp/sweep.hpp"

namespace osp::synth {
namespace {

constexpr double kPi = std::numbers::pi;

int frac_len(int n, double frac, int min_len) {
    return std::max(min_len, static_cast<int>(std::lround(n * frac)));
}

struct Interval {
    int start = 0;
    int end = 0;  // half-open
};

// One transverse sweep: head/torso intervals for each fetus, everything else
// background. Returns per-frame true labels; head intervals are recorded so
// masks can be attached later.
std::vector<FrameClass> layout_transverse(int n, const Scenario& sc, Rng& rng,
                                          std::vector<Interval>& head_intervals) {
    std::vector<FrameClass> labels(n, FrameClass::Background);
    auto paint = [&](const Interval& iv, FrameClass c) {
        for (int i = iv.start; i < std::min(iv.end, n); ++i) labels[i] = c;
    };

    if (sc.fetus_count == 1) {
        const int head = frac_len(n, rng.uniform_in(0.10, 0.18), 2);
        const int torso = frac_len(n, rng.uniform_in(0.20, 0.32), 2);
        const int gap = frac_len(n, rng.uniform_in(0.04, 0.10), 1);
        const int margin = frac_len(n, rng.uniform_in(0.04, 0.12), 1);
        Interval first, second;
        first.start = margin;
        const bool head_first = sc.presentations[0] == Presentation::Cephalic;
        first.end = first.start + (head_first ? head : torso);
        second.start = first.end + gap;
        second.end = second.start + (head_first ? torso : head);
        paint(first, head_first ? FrameClass::Head : FrameClass::TorsoTransverse);
        paint(second, head_first ? FrameClass::TorsoTransverse : FrameClass::Head);
        head_intervals.push_back(head_first ? first : second);
        return labels;
    }

    // Twins always get two disjoint head intervals. Discordant pairs put one
    // head on each side of the torso band, an order no singleton produces.
    const bool discordant = sc.presentations[0] != sc.presentations[1];
    if (discordant) {
        const int head_a = frac_len(n, rng.uniform_in(0.08, 0.14), 2);
        const int head_b = frac_len(n, rng.uniform_in(0.08, 0.14), 2);
        const int torso = frac_len(n, rng.uniform_in(0.18, 0.28), 2);
        const int margin = frac_len(n, rng.uniform_in(0.03, 0.08), 1);
        const int gap_a = frac_len(n, rng.uniform_in(0.03, 0.08), 1);
        const int gap_b = frac_len(n, rng.uniform_in(0.03, 0.08), 1);
        Interval ha{margin, margin + head_a};
        Interval to{ha.end + gap_a, ha.end + gap_a + torso};
        Interval hb{to.end + gap_b, to.end + gap_b + head_b};
        paint(ha, FrameClass::Head);
        paint(to, FrameClass::TorsoTransverse);
        paint(hb, FrameClass::Head);
        head_intervals.push_back(ha);
        head_intervals.push_back(hb);
        return labels;
    }
    // Same presentation: both heads stack on one side of the torso, separated
    // by only a frame or two, and every length is drawn from the singleton
    // distributions (head union in place of the single head). At grid
    // resolution the pair usually collapses into one plausible head interval,
    // so the count classifier genuinely struggles here.
    const int head_a = frac_len(n, rng.uniform_in(0.05, 0.09), 2);
    const int head_b = frac_len(n, rng.uniform_in(0.05, 0.09), 2);
    const int inner = rng.int_in(1, 2);
    const int torso = frac_len(n, rng.uniform_in(0.20, 0.32), 2);
    const int gap = frac_len(n, rng.uniform_in(0.04, 0.10), 1);
    const int margin = frac_len(n, rng.uniform_in(0.04, 0.12), 1);
    const bool heads_first = sc.presentations[0] == Presentation::Cephalic;
    Interval ha, hb, to;
    if (heads_first) {
        ha = {margin, margin + head_a};
        hb = {ha.end + inner, ha.end + inner + head_b};
        to = {hb.end + gap, hb.end + gap + torso};
    } else {
        to = {margin, margin + torso};
        ha = {to.end + gap, to.end + gap + head_a};
        hb = {ha.end + inner, ha.end + inner + head_b};
    }
    paint(to, FrameClass::TorsoTransverse);
    paint(ha, FrameClass::Head);
    paint(hb, FrameClass::Head);
    head_intervals.push_back(ha);
    head_intervals.push_back(hb);
    return labels;
}

std::vector<FrameClass> layout_sagittal(int n, Rng& rng) {
    std::vector<FrameClass> labels(n, FrameClass::Background);
    const int len = frac_len(n, rng.uniform_in(0.35, 0.60), 2);
    const int margin = frac_len(n, rng.uniform_in(0.10, 0.30), 1);
    for (int i = margin; i < std::min(margin + len, n); ++i) labels[i] = FrameClass::FetusSagittal;
    return labels;
}

// Perimeter-preserving semi-major axis: invert Ramanujan's approximation for
// circumference C = f(r) * a at the given axis ratio r = b/a.
double semi_major_for_circumference(double hc_mm, double axis_ratio) {
    const double r = axis_ratio;
    const double h = ((1.0 - r) / (1.0 + r)) * ((1.0 - r) / (1.0 + r));
    const double factor = kPi * (1.0 + r) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
    return hc_mm / factor;
}

struct MaskParams {
    double axis_ratio = 1.0;
    double angle = 0.0;
    double cx_jitter = 0.0;
    double cy_jitter = 0.0;
    std::array<double, 6> harmonics{};  // cos1,sin1,cos2,sin2,cos3,sin3
};

HeadMask render_mask(double hc_mm, const MaskParams& p, double noise_px, double spacing_mm) {
    const double a_px = semi_major_for_circumference(hc_mm, p.axis_ratio) / spacing_mm;
    const double b_px = p.axis_ratio * a_px;
    const int half = static_cast<int>(std::ceil(a_px + 3.0 * noise_px)) + 4;
    const int size = 2 * half + 1;

    HeadMask mask;
    mask.width = size;
    mask.height = size;
    mask.pixel_spacing_mm = spacing_mm;
    mask.pixels.assign(static_cast<std::size_t>(size) * size, 0);

    const double cx = (size - 1) / 2.0 + p.cx_jitter;
    const double cy = (size - 1) / 2.0 + p.cy_jitter;
    const double c = std::cos(p.angle), s = std::sin(p.angle);
    const double amp = noise_px > 0.0 ? noise_px / std::sqrt(3.0) : 0.0;

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double u = dx * c + dy * s;
            const double v = -dx * s + dy * c;
            const double rho = std::sqrt((u / a_px) * (u / a_px) + (v / b_px) * (v / b_px));
            bool inside;
            if (rho == 0.0) {
                inside = true;
            } else {
                const double d = std::hypot(dx, dy);
                double boundary = d / rho + 0.5;  // half-pixel dilation keeps the
                                                  // sampled outline centered on the
                                                  // true ellipse
                if (amp > 0.0) {
                    const double phi = std::atan2(dy, dx);
                    boundary += amp * (p.harmonics[0] * std::cos(phi) + p.harmonics[1] * std::sin(phi) +
                                       p.harmonics[2] * std::cos(2 * phi) + p.harmonics[3] * std::sin(2 * phi) +
                                       p.harmonics[4] * std::cos(3 * phi) + p.harmonics[5] * std::sin(3 * phi));
                }
                inside = d <= boundary;
            }
            if (inside) mask.pixels[static_cast<std::size_t>(y) * size + x] = 1;
        }
    }
    return mask;
}

void validate_scenario(const Scenario& sc) {
    if (sc.fetus_count != 1 && sc.fetus_count != 2)
        throw OspError(Errc::InvalidArgument, "fetus_count must be 1 or 2");
    if (static_cast<int>(sc.presentations.size()) != sc.fetus_count)
        throw OspError(Errc::InvalidArgument, "need one presentation per fetus");
    if (!(sc.label_noise >= 0.0 && sc.label_noise < 0.5))
        throw OspError(Errc::InvalidArgument, "label_noise must be in [0, 0.5)");
    if (sc.mask_noise_px < 0.0)
        throw OspError(Errc::InvalidArgument, "mask_noise_px must be >= 0");
    if (sc.frames_per_sweep_min < 40 || sc.frames_per_sweep_max < sc.frames_per_sweep_min)
        throw OspError(Errc::InvalidArgument, "frames_per_sweep range must satisfy 40 <= min <= max");
    if (!(sc.pixel_spacing_mm > 0.0))
        throw OspError(Errc::InvalidArgument, "pixel_spacing_mm must be positive");
}

}  // namespace

SyntheticCase generate_case(const Scenario& scenario, std::uint64_t seed,
                            const biometry::GrowthCurve& curve, std::string case_id,
                            const GeneratorOptions& options) {
    validate_scenario(scenario);
    const double hc_mm = biometry::hc_from_ga(scenario.ga_days, curve);

    Rng rng(seed);
    SyntheticCase out;
    out.scenario = scenario;
    out.seed = seed;
    out.record.case_id = std::move(case_id);
    out.record.pixel_spacing_mm = scenario.pixel_spacing_mm;

    // Phase 1: true labels. Sweeps of background/head/torso/sagittal frames,
    // separated (and flanked) by detached-probe runs.
    std::vector<FrameClass> truth;
    std::vector<int> head_frames;
    auto add_detached = [&] {
        const int len = rng.int_in(10, 25);
        truth.insert(truth.end(), static_cast<std::size_t>(len), FrameClass::Detached);
    };
    add_detached();
    for (int s = 0; s < sweep::kSweepsPerCase; ++s) {
        const int n = rng.int_in(scenario.frames_per_sweep_min, scenario.frames_per_sweep_max);
        std::vector<Interval> head_intervals;
        std::vector<FrameClass> labels = options.sweep_roles[s] == SweepRole::Transverse
                                             ? layout_transverse(n, scenario, rng, head_intervals)
                                             : layout_sagittal(n, rng);
        const int base = static_cast<int>(truth.size());
        for (const Interval& iv : head_intervals)
            for (int i = iv.start; i < std::min(iv.end, n); ++i) head_frames.push_back(base + i);
        truth.insert(truth.end(), labels.begin(), labels.end());
        add_detached();
    }

    // Phase 2: per-frame class probabilities. With noise e the emitted argmax
    // flips to a random other class with probability e, and every vector is
    // smeared as 1-e on the winner and e/4 elsewhere.
    const double e = scenario.label_noise;
    out.record.probabilities.frames.reserve(truth.size());
    for (FrameClass t : truth) {
        int winner = static_cast<int>(t);
        if (e > 0.0 && rng.chance(e)) {
            int other = static_cast<int>(rng.below(kNumFrameClasses - 1));
            if (other >= winner) ++other;
            winner = other;
        }
        ProbVector p{};
        if (e > 0.0) p.fill(e / 4.0);
        p[static_cast<std::size_t>(winner)] = 1.0 - e;
        out.record.probabilities.frames.push_back(p);
    }

    // Phase 3: a mask for every frame whose true class is Head, drawn in
    // frame order so the stream layout is stable.
    std::sort(head_frames.begin(), head_frames.end());
    for (int frame : head_frames) {
        MaskParams p;
        const double ecc = rng.uniform_in(0.60, 0.95);
        p.axis_ratio = std::sqrt(1.0 - ecc * ecc);
        p.angle = rng.uniform_in(0.0, kPi);
        p.cx_jitter = rng.uniform_in(-0.5, 0.5);
        p.cy_jitter = rng.uniform_in(-0.5, 0.5);
        if (scenario.mask_noise_px > 0.0)
            for (double& h : p.harmonics) h = rng.normal();
        out.record.masks.emplace(frame, render_mask(hc_mm, p, scenario.mask_noise_px,
                                                    scenario.pixel_spacing_mm));
    }

    GroundTruth gt;
    gt.fetus_count = scenario.fetus_count;
    gt.ga_days = scenario.ga_days;
    if (scenario.fetus_count == 1) gt.presentation = scenario.presentations[0];
    out.record.truth = gt;
    return out;
}

CorpusSpec CorpusSpec::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw OspError(Errc::BadFormat, std::string("corpus spec: ") + ex.what());
    }
    static const std::set<std::string> known{"seed",           "counts",          "label_noise",
                                             "mask_noise_px",  "ga_days_range",   "frames_per_sweep",
                                             "pixel_spacing_mm"};
    try {
        for (const auto& [key, _] : j.items())
            if (!known.count(key))
                throw OspError(Errc::BadFormat, "corpus spec: unknown key \"" + key + "\"");
        CorpusSpec spec;
        spec.seed = j.at("seed").get<std::uint64_t>();
        const auto& counts = j.at("counts");
        static const std::set<std::string> count_keys{"singleton_cephalic", "singleton_breech",
                                                      "twin_discordant", "twin_same_presentation"};
        for (const auto& [key, _] : counts.items())
            if (!count_keys.count(key))
                throw OspError(Errc::BadFormat, "corpus spec: unknown count \"" + key + "\"");
        spec.singleton_cephalic = counts.value("singleton_cephalic", 0);
        spec.singleton_breech = counts.value("singleton_breech", 0);
        spec.twin_discordant = counts.value("twin_discordant", 0);
        spec.twin_same_presentation = counts.value("twin_same_presentation", 0);
        spec.label_noise = j.value("label_noise", 0.0);
        spec.mask_noise_px = j.value("mask_noise_px", 0.0);
        if (j.contains("ga_days_range")) {
            spec.ga_days_min = j["ga_days_range"].at(0).get<double>();
            spec.ga_days_max = j["ga_days_range"].at(1).get<double>();
        }
        if (j.contains("frames_per_sweep")) {
            spec.frames_per_sweep_min = j["frames_per_sweep"].at(0).get<int>();
            spec.frames_per_sweep_max = j["frames_per_sweep"].at(1).get<int>();
        }
        spec.pixel_spacing_mm = j.value("pixel_spacing_mm", 0.5);
        if (spec.singleton_cephalic < 0 || spec.singleton_breech < 0 || spec.twin_discordant < 0 ||
            spec.twin_same_presentation < 0)
            throw OspError(Errc::BadFormat, "corpus spec: counts must be non-negative");
        if (spec.total() == 0) throw OspError(Errc::EmptyCounts, "corpus spec: all counts are zero");
        if (spec.ga_days_min > spec.ga_days_max)
            throw OspError(Errc::BadFormat, "corpus spec: ga_days_range inverted");
        return spec;
    } catch (const nlohmann::json::exception& ex) {
        throw OspError(Errc::BadFormat, std::string("corpus spec: ") + ex.what());
    }
}

CorpusSpec CorpusSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw OspError(Errc::MissingFile, "cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

std::vector<SyntheticCase> generate_corpus(const CorpusSpec& spec,
                                           const biometry::GrowthCurve& curve, int threads) {
    const int total = spec.total();
    if (total == 0) throw OspError(Errc::EmptyCounts, "corpus spec: all counts are zero");

    // Scenario skeletons in a fixed class order; randomized details per case.
    std::vector<Scenario> scenarios(static_cast<std::size_t>(total));
    int idx = 0;
    auto base = [&spec] {
        Scenario sc;
        sc.label_noise = spec.label_noise;
        sc.mask_noise_px = spec.mask_noise_px;
        sc.frames_per_sweep_min = spec.frames_per_sweep_min;
        sc.frames_per_sweep_max = spec.frames_per_sweep_max;
        sc.pixel_spacing_mm = spec.pixel_spacing_mm;
        return sc;
    };
    for (int i = 0; i < spec.singleton_cephalic; ++i, ++idx) {
        scenarios[idx] = base();
        scenarios[idx].presentations = {Presentation::Cephalic};
    }
    for (int i = 0; i < spec.singleton_breech; ++i, ++idx) {
        scenarios[idx] = base();
        scenarios[idx].presentations = {Presentation::Breech};
    }
    for (int i = 0; i < spec.twin_discordant; ++i, ++idx) {
        scenarios[idx] = base();
        scenarios[idx].fetus_count = 2;
        scenarios[idx].presentations = {Presentation::Cephalic, Presentation::Breech};
    }
    for (int i = 0; i < spec.twin_same_presentation; ++i, ++idx) {
        scenarios[idx] = base();
        scenarios[idx].fetus_count = 2;
        scenarios[idx].presentations = {Presentation::Cephalic, Presentation::Cephalic};
    }

    std::vector<SyntheticCase> cases(static_cast<std::size_t>(total));
    parallel_for_indexed(static_cast<std::size_t>(total), threads, [&](std::size_t i) {
        const std::uint64_t case_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
        Scenario sc = scenarios[i];
        // Case-level randomness (GA, twin ordering) comes from a sidecar
        // stream so layout draws inside generate_case stay aligned.
        Rng side(mix_seed(case_seed, 0x5c3a9));
        sc.ga_days = side.uniform_in(spec.ga_days_min, spec.ga_days_max);
        if (sc.fetus_count == 2) {
            const bool discordant = sc.presentations[0] != sc.presentations[1];
            if (discordant) {
                if (side.chance(0.5))
                    sc.presentations = {Presentation::Breech, Presentation::Cephalic};
            } else if (side.chance(0.15)) {
                sc.presentations = {Presentation::Breech, Presentation::Breech};
            }
        }
        char id[32];
        std::snprintf(id, sizeof id, "case-%06zu", i);
        cases[i] = generate_case(sc, case_seed, curve, id);
    });
    return cases;
}

void write_case(const CaseRecord& rec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::write_frame_probabilities(dir / "frames.csv", rec.probabilities);
    io::write_meta(dir / "meta.json", rec);
    if (!rec.masks.empty()) {
        const auto masks_dir = dir / "masks";
        std::filesystem::create_directories(masks_dir);
        for (const auto& [frame, mask] : rec.masks)
            io::write_mask(masks_dir / io::mask_filename(frame), mask);
    }
}

}  // namespace osp::synth
