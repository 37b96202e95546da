#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osp/frame_types.hpp"

namespace osp::biometry {

struct PointXY {
    double x = 0.0;
    double y = 0.0;
};

// a >= b > 0; angle of the major axis in [0, pi).
struct Ellipse {
    double center_x = 0.0;
    double center_y = 0.0;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle = 0.0;
};

struct HeadCircumference {
    double value_mm = 0.0;
    int frame_index = 0;
};

// Monotonic HC (cm) -> GA (weeks) cubic with validity limits. Strict
// monotonicity over [hc_min, hc_max] is checked at construction by sampling
// every 0.01 cm.
class GrowthCurve {
public:
    GrowthCurve(std::string name, std::array<double, 4> coefficients, double hc_min_cm,
                double hc_max_cm);

    // GA(weeks) = 8.96 + 0.540*HC + 0.0003*HC^3, HC in cm, valid over the
    // published 12-40 week span.
    static GrowthCurve hadlock1984();

    static GrowthCurve from_json_string(const std::string& text);
    static GrowthCurve load(const std::filesystem::path& path);
    std::string to_json_string() const;
    void save(const std::filesystem::path& path) const;

    double ga_weeks_at(double hc_cm) const;
    double ga_days_min() const { return ga_days_min_; }
    double ga_days_max() const { return ga_days_max_; }
    double hc_min_cm() const { return hc_min_cm_; }
    double hc_max_cm() const { return hc_max_cm_; }
    const std::string& name() const { return name_; }
    const std::array<double, 4>& coefficients() const { return coefficients_; }

private:
    std::string name_;
    std::array<double, 4> coefficients_;
    double hc_min_cm_;
    double hc_max_cm_;
    double ga_days_min_;
    double ga_days_max_;
};

struct GaEstimate {
    double ga_days = 0.0;
    double hc_mm = 0.0;
    int n_frames_used = 0;
};

enum class MeasureStatus {
    Estimated,
    ExcludedOutOfCurve,  // HC outside the curve limits
    NoHeadFrames,        // no frame yielded a measurable HC
};

struct CaseMeasurement {
    MeasureStatus status = MeasureStatus::NoHeadFrames;
    std::optional<GaEstimate> estimate;    // set when Estimated
    std::optional<double> aggregated_hc_mm;  // set unless NoHeadFrames
    int n_frames_used = 0;
    int n_frames_skipped = 0;
};

// Foreground pixels 4-adjacent to background (the image border counts as
// background), in row-major order.
std::vector<PointXY> extract_boundary(const HeadMask& mask);

// Direct least-squares conic fit with the ellipse constraint, solved as a
// 3x3 eigenproblem on centered and isotropically scaled points.
Ellipse fit_ellipse(const std::vector<PointXY>& points);

// Ramanujan's second perimeter approximation, axes converted to mm first.
double circumference_mm(const Ellipse& e, double pixel_spacing_mm);

// 75th percentile with linear interpolation at rank 0.75*(n-1).
double aggregate_hc(const std::vector<HeadCircumference>& hcs);

// Conversion result for one HC value; n_frames_used is left 0 here.
CaseMeasurement ga_from_hc(double hc_mm, const GrowthCurve& curve);

// Inverse of ga_from_hc by bisection on the monotonic curve, to 1e-9 cm.
double hc_from_ga(double ga_days, const GrowthCurve& curve);

// Fits every listed frame's mask, aggregates the per-frame circumferences
// and converts. Frames whose mask cannot be fitted are skipped and counted.
CaseMeasurement measure_case(const CaseRecord& rec, const std::vector<int>& head_frames,
                             const GrowthCurve& curve);

}  // namespace osp::biometry
