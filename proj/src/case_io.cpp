#include "osp/case_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "osp/errors.hpp"

namespace osp::io {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

namespace {

bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_int(std::string_view s, long& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

void validate_probability_vector(ProbVector& p, std::int64_t where) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw OspError(Errc::MalformedRow, "probability outside [0,1]", where);
        }
        sum += v;
    }
    const double dev = std::abs(sum - 1.0);
    if (dev > 1e-3) {
        throw OspError(Errc::UnnormalizedProbabilities,
                       "probabilities sum to " + format_double(sum), where);
    }
    // Renormalize only when the sum is measurably off; below 1e-9 the vector
    // already is normalized to double precision and dividing again would
    // perturb bits, breaking write -> read round trips.
    if (dev > 1e-9) {
        for (double& v : p) v /= sum;
    }
}

FrameProbabilitySequence read_frame_probabilities(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OspError(Errc::MissingFile, path.string());

    std::string line;
    std::int64_t line_no = 0;

    auto next_line = [&](std::string& out) {
        if (!std::getline(in, out)) return false;
        ++line_no;
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
    };

    if (!next_line(line) || line != kFramesCsvHeader) {
        throw OspError(Errc::MalformedRow, "bad or missing header", 1);
    }

    FrameProbabilitySequence seq;
    while (next_line(line)) {
        if (line.empty()) {
            if (in.peek() == EOF) break;  // trailing newline
            throw OspError(Errc::MalformedRow, "empty row", line_no);
        }
        const auto fields = split_csv(line);
        if (fields.size() != 1 + kNumFrameClasses) {
            throw OspError(Errc::MalformedRow, "expected 6 columns", line_no);
        }
        long idx = 0;
        if (!parse_int(fields[0], idx)) {
            throw OspError(Errc::MalformedRow, "bad frame index", line_no);
        }
        if (idx != static_cast<long>(seq.frames.size())) {
            throw OspError(Errc::NonContiguousIndex,
                           "expected frame " + std::to_string(seq.frames.size()) + ", got " +
                               std::to_string(idx),
                           line_no);
        }
        ProbVector p{};
        for (int c = 0; c < kNumFrameClasses; ++c) {
            if (!parse_double(fields[1 + c], p[c])) {
                throw OspError(Errc::MalformedRow, "bad probability", line_no);
            }
        }
        validate_probability_vector(p, line_no);
        seq.frames.push_back(p);
    }
    if (seq.empty()) throw OspError(Errc::MalformedRow, "no data rows", line_no + 1);
    return seq;
}

HeadMask read_mask(const fs::path& path, double pixel_spacing_mm) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OspError(Errc::MissingFile, path.string());
    if (pixel_spacing_mm <= 0.0) {
        throw OspError(Errc::InvalidArgument, "pixel spacing must be > 0");
    }

    // PGM header: "P5" then width, height, maxval as whitespace-separated
    // tokens, with '#' comments allowed between them.
    auto next_token = [&in]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = in.get()) != EOF) {
            if (ch == '#') {
                while ((ch = in.get()) != EOF && ch != '\n') {}
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        return tok;
    };

    if (next_token() != "P5") throw OspError(Errc::NotPgm, "not a binary PGM (P5)");
    long w = 0, h = 0, maxval = 0;
    if (!parse_int(next_token(), w) || !parse_int(next_token(), h) ||
        !parse_int(next_token(), maxval)) {
        throw OspError(Errc::NotPgm, "bad PGM header");
    }
    if (maxval != 255) throw OspError(Errc::NotPgm, "maxval must be 255");
    if (w < 8 || h < 8) {
        throw OspError(Errc::TooSmall, std::to_string(w) + "x" + std::to_string(h));
    }

    HeadMask mask;
    mask.width = static_cast<int>(w);
    mask.height = static_cast<int>(h);
    mask.pixel_spacing_mm = pixel_spacing_mm;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<std::uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw OspError(Errc::NotPgm, "truncated pixel data");
    }
    mask.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) mask.pixels[i] = raw[i] >= 128 ? 1 : 0;
    return mask;
}

std::string mask_filename(int frame_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.pgm", frame_index);
    return buf;
}

namespace {

GroundTruth truth_from_json(const nlohmann::json& j) {
    GroundTruth t;
    t.fetus_count = j.at("fetus_count").get<int>();
    if (t.fetus_count != 1 && t.fetus_count != 2) {
        throw OspError(Errc::BadFormat, "fetus_count must be 1 or 2");
    }
    if (j.contains("presentation") && !j.at("presentation").is_null()) {
        const std::string p = j.at("presentation").get<std::string>();
        if (p == "cephalic") {
            t.presentation = Presentation::Cephalic;
        } else if (p == "breech") {
            t.presentation = Presentation::Breech;
        } else {
            throw OspError(Errc::BadFormat, "unknown presentation '" + p + "'");
        }
    }
    if (j.contains("ga_days") && !j.at("ga_days").is_null()) {
        t.ga_days = j.at("ga_days").get<double>();
    }
    return t;
}

}  // namespace

CaseRecord read_case(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    std::ifstream meta_in(meta_path, std::ios::binary);
    if (!meta_in) throw OspError(Errc::MissingFile, meta_path.string());

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw OspError(Errc::BadFormat, meta_path.string() + ": " + e.what());
    }

    CaseRecord rec;
    try {
        rec.case_id = meta.at("case_id").get<std::string>();
        rec.pixel_spacing_mm = meta.at("pixel_spacing_mm").get<double>();
        if (meta.contains("truth") && !meta.at("truth").is_null()) {
            rec.truth = truth_from_json(meta.at("truth"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw OspError(Errc::BadFormat, meta_path.string() + ": " + e.what());
    }
    if (rec.pixel_spacing_mm <= 0.0) {
        throw OspError(Errc::BadFormat, "pixel_spacing_mm must be > 0");
    }

    rec.probabilities = read_frame_probabilities(dir / "frames.csv");

    const fs::path masks_dir = dir / "masks";
    if (fs::exists(masks_dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(masks_dir)) {
            if (entry.path().extension() == ".pgm") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            long idx = 0;
            if (!parse_int(file.stem().string(), idx)) {
                throw OspError(Errc::BadFormat, "mask filename not a frame index: " + file.string());
            }
            if (idx < 0 || idx >= static_cast<long>(rec.probabilities.size())) {
                throw OspError(Errc::OrphanMask, file.string(), idx);
            }
            rec.masks.emplace(static_cast<int>(idx), read_mask(file, rec.pixel_spacing_mm));
        }
    }
    return rec;
}

void write_frame_probabilities(const fs::path& path, const FrameProbabilitySequence& seq) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string());
    out << kFramesCsvHeader << '\n';
    for (std::size_t i = 0; i < seq.size(); ++i) {
        out << i;
        for (double v : seq[i]) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw OspError(Errc::IoFailure, "write failed: " + path.string());
}

void write_mask(const fs::path& path, const HeadMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string());
    out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    std::vector<std::uint8_t> raw(mask.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = mask.pixels[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw OspError(Errc::IoFailure, "write failed: " + path.string());
}

void write_meta(const fs::path& path, const CaseRecord& rec) {
    ordered_json j;
    j["case_id"] = rec.case_id;
    j["pixel_spacing_mm"] = rec.pixel_spacing_mm;
    if (rec.truth) {
        ordered_json t;
        t["fetus_count"] = rec.truth->fetus_count;
        if (rec.truth->presentation) {
            t["presentation"] = presentation_name(*rec.truth->presentation);
        } else {
            t["presentation"] = nullptr;
        }
        if (rec.truth->ga_days) {
            t["ga_days"] = *rec.truth->ga_days;
        } else {
            t["ga_days"] = nullptr;
        }
        j["truth"] = std::move(t);
    } else {
        j["truth"] = nullptr;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw OspError(Errc::IoFailure, "write failed: " + path.string());
}

}  // namespace osp::io
