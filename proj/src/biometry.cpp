#include "osp/biometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "osp/errors.hpp"
#include "osp/stats.hpp"

namespace osp::biometry {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<PointXY> extract_boundary(const HeadMask& mask) {
    std::vector<PointXY> boundary;
    bool any_foreground = false;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            any_foreground = true;
            const bool edge = x == 0 || x == mask.width - 1 || y == 0 || y == mask.height - 1 ||
                              !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
                              !mask.at(x, y + 1);
            if (edge) boundary.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    }
    if (!any_foreground) throw OspError(Errc::EmptyMask, "mask has no foreground pixels");
    return boundary;
}

Ellipse fit_ellipse(const std::vector<PointXY>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 6) throw OspError(Errc::DegenerateInput, "need >= 6 points, got " + std::to_string(n));

    // Center and scale isotropically; translation and uniform scale map
    // back onto the geometric parameters directly.
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double spread = 0.0;
    for (const auto& p : points) {
        spread += std::abs(p.x - mx) + std::abs(p.y - my);
    }
    spread /= 2.0 * n;
    if (spread <= 0.0) throw OspError(Errc::DegenerateInput, "points are coincident");
    const double scale = spread;

    // Halir-Flusser partitioned design: D1 = [x^2 xy y^2], D2 = [x y 1].
    Eigen::MatrixXd d1(n, 3), d2(n, 3);
    for (int i = 0; i < n; ++i) {
        const double x = (points[i].x - mx) / scale;
        const double y = (points[i].y - my) / scale;
        d1(i, 0) = x * x;
        d1(i, 1) = x * y;
        d1(i, 2) = y * y;
        d2(i, 0) = x;
        d2(i, 1) = y;
        d2(i, 2) = 1.0;
    }
    const Eigen::Matrix3d s1 = d1.transpose() * d1;
    const Eigen::Matrix3d s2 = d1.transpose() * d2;
    const Eigen::Matrix3d s3 = d2.transpose() * d2;

    Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
    if (!lu.isInvertible()) {
        throw OspError(Errc::DegenerateInput, "collinear or degenerate point set");
    }
    const Eigen::Matrix3d t = -lu.solve(s2.transpose());
    const Eigen::Matrix3d m0 = s1 + s2 * t;
    // Premultiply by C1^-1 for constraint 4ac - b^2 = 1.
    Eigen::Matrix3d m;
    m.row(0) = m0.row(2) / 2.0;
    m.row(1) = -m0.row(1);
    m.row(2) = m0.row(0) / 2.0;

    Eigen::EigenSolver<Eigen::Matrix3d> solver(m);
    if (solver.info() != Eigen::Success) {
        throw OspError(Errc::NotAnEllipse, "eigen decomposition failed");
    }

    Eigen::Vector3d a1 = Eigen::Vector3d::Zero();
    bool found = false;
    for (int k = 0; k < 3; ++k) {
        if (std::abs(solver.eigenvalues()[k].imag()) > 0.0) continue;
        const Eigen::Vector3d v = solver.eigenvectors().col(k).real();
        const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
        if (cond > 0.0) {
            a1 = v;
            found = true;
            break;
        }
    }
    if (!found) throw OspError(Errc::NotAnEllipse, "no ellipse satisfies the constraint");
    // The eigenvector's overall sign is arbitrary. Make the quadratic form
    // positive definite so the ascending eigenvalue order below puts the
    // major axis first (a + c shares the sign of both eigenvalues when
    // 4ac - b^2 > 0).
    if (a1(0) + a1(2) < 0.0) a1 = -a1;
    const Eigen::Vector3d a2 = t * a1;

    // Conic in normalized coordinates.
    const double ca = a1(0), cb = a1(1), cc = a1(2);
    const double cd = a2(0), ce = a2(1), cf = a2(2);

    Eigen::Matrix2d q;
    q << ca, cb / 2.0, cb / 2.0, cc;
    const double det = q.determinant();
    if (det <= 0.0) throw OspError(Errc::NotAnEllipse, "conic is not an ellipse");

    const Eigen::Vector2d rhs(-cd / 2.0, -ce / 2.0);
    const Eigen::Vector2d center = q.colPivHouseholderQr().solve(rhs);
    const double f0 = cf + 0.5 * (cd * center(0) + ce * center(1));

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(q);
    const double l1 = es.eigenvalues()(0);  // ascending
    const double l2 = es.eigenvalues()(1);
    const double k1 = -f0 / l1;
    const double k2 = -f0 / l2;
    if (!(k1 > 0.0 && k2 > 0.0)) throw OspError(Errc::NotAnEllipse, "degenerate conic");

    Ellipse e;
    e.semi_major = std::sqrt(k1) * scale;  // smaller eigenvalue -> longer axis
    e.semi_minor = std::sqrt(k2) * scale;
    e.center_x = mx + center(0) * scale;
    e.center_y = my + center(1) * scale;
    const Eigen::Vector2d axis = es.eigenvectors().col(0);
    double angle = std::atan2(axis(1), axis(0));
    if (angle < 0.0) angle += kPi;
    if (angle >= kPi) angle -= kPi;
    e.angle = angle;
    return e;
}

double circumference_mm(const Ellipse& e, double pixel_spacing_mm) {
    if (pixel_spacing_mm <= 0.0) throw OspError(Errc::InvalidArgument, "spacing must be > 0");
    const double a = e.semi_major * pixel_spacing_mm;
    const double b = e.semi_minor * pixel_spacing_mm;
    const double h = ((a - b) / (a + b)) * ((a - b) / (a + b));
    return kPi * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
}

double aggregate_hc(const std::vector<HeadCircumference>& hcs) {
    if (hcs.empty()) throw OspError(Errc::EmptyList, "no circumferences to aggregate");
    std::vector<double> values;
    values.reserve(hcs.size());
    for (const auto& hc : hcs) values.push_back(hc.value_mm);
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, 0.75);
}

GrowthCurve::GrowthCurve(std::string name, std::array<double, 4> coefficients, double hc_min_cm,
                         double hc_max_cm)
    : name_(std::move(name)),
      coefficients_(coefficients),
      hc_min_cm_(hc_min_cm),
      hc_max_cm_(hc_max_cm) {
    if (!(hc_min_cm_ > 0.0) || !(hc_max_cm_ > hc_min_cm_)) {
        throw OspError(Errc::InvalidCurve, "require 0 < hc_min < hc_max");
    }
    double prev = ga_weeks_at(hc_min_cm_);
    for (double hc = hc_min_cm_ + 0.01; hc <= hc_max_cm_ + 1e-12; hc += 0.01) {
        const double cur = ga_weeks_at(hc);
        if (!(cur > prev)) {
            throw OspError(Errc::InvalidCurve, "curve not strictly increasing near " +
                                                   std::to_string(hc) + " cm");
        }
        prev = cur;
    }
    ga_days_min_ = 7.0 * ga_weeks_at(hc_min_cm_);
    ga_days_max_ = 7.0 * ga_weeks_at(hc_max_cm_);
}

GrowthCurve GrowthCurve::hadlock1984() {
    return GrowthCurve("hadlock-1984-hc", {8.96, 0.540, 0.0, 0.0003}, 5.6, 34.6);
}

double GrowthCurve::ga_weeks_at(double hc_cm) const {
    const auto& c = coefficients_;
    return c[0] + hc_cm * (c[1] + hc_cm * (c[2] + hc_cm * c[3]));
}

GrowthCurve GrowthCurve::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        return GrowthCurve(j.at("name").get<std::string>(),
                           j.at("coefficients").get<std::array<double, 4>>(),
                           j.at("hc_min_cm").get<double>(), j.at("hc_max_cm").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw OspError(Errc::BadFormat, std::string("curve JSON: ") + e.what());
    }
}

GrowthCurve GrowthCurve::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OspError(Errc::MissingFile, path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

std::string GrowthCurve::to_json_string() const {
    nlohmann::ordered_json j;
    j["name"] = name_;
    j["coefficients"] = coefficients_;
    j["hc_min_cm"] = hc_min_cm_;
    j["hc_max_cm"] = hc_max_cm_;
    return j.dump(2) + "\n";
}

void GrowthCurve::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string());
    out << to_json_string();
    if (!out) throw OspError(Errc::IoFailure, "write failed: " + path.string());
}

CaseMeasurement ga_from_hc(double hc_mm, const GrowthCurve& curve) {
    if (!(hc_mm > 0.0)) throw OspError(Errc::NonPositiveHc, "hc must be > 0 mm");
    CaseMeasurement result;
    result.aggregated_hc_mm = hc_mm;
    const double hc_cm = hc_mm / 10.0;
    if (hc_cm < curve.hc_min_cm() || hc_cm > curve.hc_max_cm()) {
        result.status = MeasureStatus::ExcludedOutOfCurve;
        return result;
    }
    result.status = MeasureStatus::Estimated;
    result.estimate = GaEstimate{7.0 * curve.ga_weeks_at(hc_cm), hc_mm, 0};
    return result;
}

double hc_from_ga(double ga_days, const GrowthCurve& curve) {
    if (ga_days < curve.ga_days_min() - 1e-9 || ga_days > curve.ga_days_max() + 1e-9) {
        throw OspError(Errc::OutOfCurveRange,
                       "ga " + std::to_string(ga_days) + " days outside curve range");
    }
    double lo = curve.hc_min_cm();
    double hi = curve.hc_max_cm();
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (7.0 * curve.ga_weeks_at(mid) < ga_days) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 10.0 * 0.5 * (lo + hi);
}

CaseMeasurement measure_case(const CaseRecord& rec, const std::vector<int>& head_frames,
                             const GrowthCurve& curve) {
    std::vector<HeadCircumference> hcs;
    int skipped = 0;
    for (int frame : head_frames) {
        const auto it = rec.masks.find(frame);
        if (it == rec.masks.end()) {
            throw OspError(Errc::InvalidArgument,
                           "frame " + std::to_string(frame) + " has no mask");
        }
        try {
            const auto boundary = extract_boundary(it->second);
            const Ellipse e = fit_ellipse(boundary);
            hcs.push_back({circumference_mm(e, it->second.pixel_spacing_mm), frame});
        } catch (const OspError& err) {
            if (err.code() == Errc::EmptyMask || err.code() == Errc::DegenerateInput ||
                err.code() == Errc::NotAnEllipse) {
                ++skipped;
                continue;
            }
            throw;
        }
    }

    if (hcs.empty()) {
        CaseMeasurement result;
        result.status = MeasureStatus::NoHeadFrames;
        result.n_frames_skipped = skipped;
        return result;
    }

    CaseMeasurement result = ga_from_hc(aggregate_hc(hcs), curve);
    result.n_frames_used = static_cast<int>(hcs.size());
    result.n_frames_skipped = skipped;
    if (result.estimate) result.estimate->n_frames_used = result.n_frames_used;
    return result;
}

}  // namespace osp::biometry
