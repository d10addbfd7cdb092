#pragma once

#include <llctrack/error.hpp>
#include <llctrack/geometry.hpp>
#include <llctrack/image_io.hpp>
#include <llctrack/particle_tracker.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace llctrack {

/// Distance between box centers in pixels.
inline double cle(const BoundingBox& pred, const BoundingBox& gt)
{
    return std::hypot(pred.center_x() - gt.center_x(), pred.center_y() - gt.center_y());
}

/// Intersection over union; 0 for disjoint boxes.
inline double overlap(const BoundingBox& pred, const BoundingBox& gt)
{
    const double ix = std::max(0.0, std::min(pred.x + pred.w, gt.x + gt.w) - std::max(pred.x, gt.x));
    const double iy = std::max(0.0, std::min(pred.y + pred.h, gt.y + gt.h) - std::max(pred.y, gt.y));
    const double inter = ix * iy;
    const double uni = pred.area() + gt.area() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

struct SequenceReport {
    std::vector<double> cle;
    std::vector<double> overlap;
    double mean_cle = 0.0;
    double mean_overlap = 0.0;
    /// Frames per second of the tracking loop, decode excluded. Unknown when
    /// the report is built from files.
    std::optional<double> fps;
};

inline SequenceReport evaluate(const std::vector<BoundingBox>& pred,
                               const std::vector<BoundingBox>& gt, bool truncate = false,
                               std::optional<double> fps = std::nullopt)
{
    if (pred.size() != gt.size() && !truncate) {
        throw Error(ErrorCode::LengthMismatch, "prediction has " + std::to_string(pred.size()) +
                                                   " boxes, ground truth has " +
                                                   std::to_string(gt.size()));
    }
    const auto n = std::min(pred.size(), gt.size());
    SequenceReport report;
    report.fps = fps;
    report.cle.reserve(n);
    report.overlap.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.cle.push_back(cle(pred[i], gt[i]));
        report.overlap.push_back(overlap(pred[i], gt[i]));
    }
    if (n > 0) {
        double sc = 0.0, so = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sc += report.cle[i];
            so += report.overlap[i];
        }
        report.mean_cle = sc / static_cast<double>(n);
        report.mean_overlap = so / static_cast<double>(n);
    }
    return report;
}

inline nlohmann::json to_json(const SequenceReport& r)
{
    nlohmann::json j;
    j["frames"] = r.cle.size();
    j["mean_cle"] = r.mean_cle;
    j["mean_overlap"] = r.mean_overlap;
    j["fps"] = r.fps ? nlohmann::json(*r.fps) : nlohmann::json(nullptr);
    j["cle"] = r.cle;
    j["overlap"] = r.overlap;
    return j;
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : line) {
        if (ch == ',' || ch == '\t' || ch == ' ' || ch == ';') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double parse_number(const std::string& field, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, where + ": not a number '" + field + "'");
    }
}

inline std::ifstream open_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

} // namespace detail

/// One "x,y,w,h" per line (comma, tab or space separated). Blank lines are
/// skipped.
inline std::vector<BoundingBox> read_groundtruth(const std::filesystem::path& path)
{
    auto in = detail::open_text(path);
    std::vector<BoundingBox> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = detail::split_fields(line);
        if (f.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        if (f.size() != 4) {
            throw Error(ErrorCode::ParseError, where + ": expected 4 fields, got " +
                                                   std::to_string(f.size()));
        }
        out.push_back({detail::parse_number(f[0], where), detail::parse_number(f[1], where),
                       detail::parse_number(f[2], where), detail::parse_number(f[3], where)});
    }
    return out;
}

/// Prediction CSV with columns frame,x,y,w,h[,...]; a non-numeric first
/// line is treated as a header.
inline std::vector<BoundingBox> read_predictions(const std::filesystem::path& path)
{
    auto in = detail::open_text(path);
    std::vector<BoundingBox> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = detail::split_fields(line);
        if (f.empty()) continue;
        if (lineno == 1 && !f[0].empty() && !std::isdigit(static_cast<unsigned char>(f[0][0])) &&
            f[0][0] != '-' && f[0][0] != '.') {
            continue;
        }
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        if (f.size() < 5) {
            throw Error(ErrorCode::ParseError, where + ": expected at least 5 fields");
        }
        out.push_back({detail::parse_number(f[1], where), detail::parse_number(f[2], where),
                       detail::parse_number(f[3], where), detail::parse_number(f[4], where)});
    }
    return out;
}

/// Frames of a sequence directory: DIR/img if present, else DIR, keeping
/// .jpg/.jpeg/.png/.pgm files in lexicographic order.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    const fs::path root = fs::is_directory(dir / "img") ? dir / "img" : dir;
    if (!fs::is_directory(root)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".pgm") {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Error(ErrorCode::Io, "no frames found in " + root.string());
    return out;
}

struct TrackRun {
    std::vector<FrameResult> results;
    /// Tracking-loop throughput; decode time excluded.
    double fps = 0.0;

    std::vector<BoundingBox> boxes() const
    {
        std::vector<BoundingBox> out;
        out.reserve(results.size());
        for (const auto& r : results) out.push_back(r.box);
        return out;
    }
};

/// Runs the tracker over decoded frames; the first frame initializes it.
inline TrackRun run_tracker(const std::vector<GrayImage>& frames, const BoundingBox& init,
                            const TrackerConfig& config)
{
    if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "empty sequence");
    Tracker tracker(config);
    TrackRun run;
    run.results.reserve(frames.size());
    const auto start = std::chrono::steady_clock::now();
    run.results.push_back(tracker.initialize(frames.front(), init));
    for (std::size_t i = 1; i < frames.size(); ++i) run.results.push_back(tracker.track(frames[i]));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    run.fps = elapsed.count() > 0.0 ? static_cast<double>(frames.size()) / elapsed.count() : 0.0;
    return run;
}

inline std::vector<GrayImage> load_frames(const std::vector<std::filesystem::path>& paths)
{
    std::vector<GrayImage> frames;
    frames.reserve(paths.size());
    for (const auto& p : paths) frames.push_back(load_frame(p));
    return frames;
}

/// Tracking CSV: header then frame,x,y,w,h,confidence,neg_used,occluded.
inline std::string format_track_csv(const std::vector<FrameResult>& results)
{
    std::ostringstream out;
    out << "frame,x,y,w,h,confidence,neg_used,occluded\n";
    char buf[256];
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::snprintf(buf, sizeof buf, "%zu,%.3f,%.3f,%.3f,%.3f,%.6g,%d,%d\n", i + 1, r.box.x,
                      r.box.y, r.box.w, r.box.h, r.confidence, r.neg_used, r.occluded ? 1 : 0);
        out << buf;
    }
    return out.str();
}

struct SweepRow {
    double lambda = 0.0;
    std::optional<double> mean_overlap;
    std::optional<double> mean_cle;
    std::string error;
};

/**
 * Runs the full tracker once per λ, in input order. A failing λ is recorded
 * with an error message and the sweep continues.
 */
inline std::vector<SweepRow> lambda_sweep(const std::vector<GrayImage>& frames,
                                          const std::vector<BoundingBox>& truth,
                                          const TrackerConfig& config,
                                          const std::vector<double>& lambdas)
{
    if (lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "no lambda values given");
    if (truth.empty()) throw Error(ErrorCode::InvalidArgument, "ground truth is empty");
    std::vector<SweepRow> rows;
    rows.reserve(lambdas.size());
    for (const double lambda : lambdas) {
        SweepRow row{lambda, std::nullopt, std::nullopt, {}};
        try {
            TrackerConfig c = config;
            c.encoder.lambda = lambda;
            const auto run = run_tracker(frames, truth.front(), c);
            const auto report = evaluate(run.boxes(), truth, true, run.fps);
            row.mean_overlap = report.mean_overlap;
            row.mean_cle = report.mean_cle;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string format_sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream out;
    out << "lambda,mean_overlap,mean_cle\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.10g", r.lambda);
        out << buf << ',';
        if (r.mean_overlap) {
            std::snprintf(buf, sizeof buf, "%.6f", *r.mean_overlap);
            out << buf;
        }
        out << ',';
        if (r.mean_cle) {
            std::snprintf(buf, sizeof buf, "%.6f", *r.mean_cle);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

/// Line plot of mean overlap against the λ grid, points equally spaced in
/// input order. A single row renders as one marker.
inline std::string format_sweep_svg(const std::vector<SweepRow>& rows)
{
    constexpr double kW = 480, kH = 320, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
    const double pw = kW - kLeft - kRight;
    const double ph = kH - kTop - kBottom;
    const auto n = rows.size();
    auto x_at = [&](std::size_t i) {
        return n <= 1 ? kLeft + pw / 2 : kLeft + pw * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto y_at = [&](double v) { return kTop + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

    std::ostringstream svg;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"0 0 %.0f %.0f\">\n",
                  kW, kH, kW, kH);
    svg << buf;
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  kLeft, kTop + ph, kLeft + pw, kTop + ph, kLeft, kTop, kLeft, kTop + ph);
    svg << buf;
    for (const double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                      kLeft - 6, y_at(tick) + 4, tick);
        svg << buf;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%g</text>\n",
                      x_at(i), kTop + ph + 18, rows[i].lambda);
        svg << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">lambda</text>\n"
                  "<text x=\"14\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 14 %.1f)\">mean overlap</text>\n",
                  kLeft + pw / 2, kH - 8, kTop + ph / 2, kTop + ph / 2);
    svg << buf;

    std::string points;
    std::size_t plotted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!rows[i].mean_overlap) continue;
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x_at(i), y_at(*rows[i].mean_overlap));
        points += buf;
        ++plotted;
    }
    if (plotted >= 2) {
        points.pop_back();
        svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"" << points
            << "\"/>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!rows[i].mean_overlap) continue;
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"4\" fill=\"#c0392b\"/>\n", x_at(i),
                      y_at(*rows[i].mean_overlap));
        svg << buf;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace llctrack
