#include "evoxel/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace evoxel::render {

namespace {

const char* voxel_color(VoxelType t) {
    switch (t) {
    case VoxelType::Rigid: return "#222222";
    case VoxelType::Soft: return "#9e9e9e";
    case VoxelType::MusclePhase0: return "#e67e22";
    case VoxelType::MusclePhasePi: return "#1abc9c";
    case VoxelType::SensorExpand: return "#2ecc71";
    case VoxelType::SensorShrink: return "#e74c3c";
    case VoxelType::Empty: break;
    }
    return "#000000";
}

void svg_voxels(std::ostream& out, const RolloutRecording& rec, const std::vector<Vec2>& corners,
                double px, double ox, double oy, double opacity) {
    for (std::size_t v = 0; v < rec.types.size(); ++v) {
        out << "<polygon points=\"";
        for (int k = 0; k < 4; ++k) {
            const Vec2& p = corners[v * 4 + static_cast<std::size_t>(k)];
            out << ox + p.x * px << ',' << oy - p.y * px << ' ';
        }
        out << "\" fill=\"" << voxel_color(rec.types[v]) << "\" fill-opacity=\"" << opacity
            << "\" stroke=\"none\"/>\n";
    }
}

void bounds(const RolloutRecording& rec, double& min_x, double& max_x, double& max_y) {
    min_x = 1e30;
    max_x = -1e30;
    max_y = -1e30;
    for (const auto& frame : rec.corners) {
        for (const Vec2& p : frame) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
    }
}

} // namespace

RolloutRecording record_rollout(const Body& body, const std::vector<mnist::Image>& images,
                                const EvalConfig& cfg) {
    RolloutRecording rec;
    const double sample_dt = cfg.world.dt * cfg.world.substeps;
    rec.samples_per_cycle = static_cast<int>(std::lround(cfg.cycle_seconds() / sample_dt));
    rec.ground_y = cfg.world.ground_y;

    World probe(body, cfg.world);
    rec.types.resize(static_cast<std::size_t>(probe.voxel_count()));
    for (int v = 0; v < probe.voxel_count(); ++v) rec.types[static_cast<std::size_t>(v)] = probe.voxel_type(v);

    const SampleSink sink = [&rec](double t, const World& w) {
        rec.times.push_back(t);
        std::vector<Vec2> frame;
        frame.reserve(static_cast<std::size_t>(w.voxel_count()) * 4);
        for (int v = 0; v < w.voxel_count(); ++v)
            for (int corner : w.voxel_corners(v)) frame.push_back(w.masses()[corner].position);
        rec.corners.push_back(std::move(frame));
    };
    std::vector<int> classes;
    for (std::size_t i = 0; i < images.size(); ++i) classes.push_back(static_cast<int>(i));
    evaluate_rollout(body, images, classes, cfg, &sink);

    for (std::size_t i = 1; i < images.size(); ++i) {
        rec.stimulus_changes.push_back((cfg.settle_cycles + static_cast<double>(i) * cfg.cycles_per_image) *
                                       cfg.cycle_seconds());
    }
    return rec;
}

void write_trajectory_text(const RolloutRecording& rec, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RenderIOError("cannot write " + path);
    for (std::size_t s = 0; s < rec.times.size(); ++s) {
        out << rec.times[s];
        for (const Vec2& p : rec.corners[s]) out << ' ' << p.x << ' ' << p.y;
        out << '\n';
    }
    if (!out) throw RenderIOError("short write to " + path);
}

void write_spacetime_svg(const RolloutRecording& rec, const std::string& path, int max_silhouettes) {
    if (rec.times.empty()) throw RenderIOError("empty recording");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RenderIOError("cannot write " + path);

    const std::size_t stride =
        std::max<std::size_t>(1, rec.times.size() / static_cast<std::size_t>(std::max(1, max_silhouettes)));
    double min_x = 0, max_x = 0, max_y = 0;
    bounds(rec, min_x, max_x, max_y);

    const double px = 6.0;         // pixels per voxel length
    const double row = 4.0;        // vertical pixels per drawn silhouette
    const double margin = 20.0;
    const std::size_t n_rows = (rec.times.size() + stride - 1) / stride;
    const double width = margin * 2 + (max_x - min_x) * px;
    const double height = margin * 2 + static_cast<double>(n_rows) * row + max_y * px;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double ox = margin - min_x * px;
    std::size_t row_index = 0;
    for (std::size_t s = 0; s < rec.times.size(); s += stride, ++row_index) {
        const double oy = margin + static_cast<double>(row_index) * row + max_y * px;
        svg_voxels(out, rec, rec.corners[s], px, ox, oy, 0.30);
    }
    // Dashed markers where the stimulus switches.
    const double t0 = rec.times.front();
    const double t1 = rec.times.back();
    for (double tc : rec.stimulus_changes) {
        if (tc < t0 || tc > t1) continue;
        const double frac = (tc - t0) / (t1 - t0);
        const double y = margin + frac * static_cast<double>(n_rows) * row + max_y * px;
        out << "<line x1=\"0\" y1=\"" << y << "\" x2=\"" << width << "\" y2=\"" << y
            << "\" stroke=\"#555555\" stroke-dasharray=\"6,4\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw RenderIOError("short write to " + path);
}

int write_frame_svgs(const RolloutRecording& rec, const std::string& prefix, int samples_per_cycle_out) {
    if (rec.times.empty()) throw RenderIOError("empty recording");
    double min_x = 0, max_x = 0, max_y = 0;
    bounds(rec, min_x, max_x, max_y);

    const double px = 20.0;
    const double margin = 10.0;
    const double width = margin * 2 + (max_x - min_x) * px;
    const double height = margin * 2 + max_y * px;

    const double step = static_cast<double>(rec.samples_per_cycle) / samples_per_cycle_out;
    const int cycles = static_cast<int>(rec.times.size()) / rec.samples_per_cycle;
    const int n_frames = cycles * samples_per_cycle_out;
    for (int f = 0; f < n_frames; ++f) {
        const auto s = std::min<std::size_t>(rec.times.size() - 1,
                                             static_cast<std::size_t>(std::llround(f * step)));
        std::ostringstream name;
        name << prefix << '_';
        const std::string num = std::to_string(f);
        for (std::size_t i = num.size(); i < 6; ++i) name << '0';
        name << num << ".svg";
        std::ofstream out(name.str(), std::ios::trunc);
        if (!out) throw RenderIOError("cannot write " + name.str());
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
            << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        const double oy = margin + max_y * px;
        const double ground = oy - rec.ground_y * px;
        out << "<line x1=\"0\" y1=\"" << ground << "\" x2=\"" << width << "\" y2=\"" << ground
            << "\" stroke=\"#333333\"/>\n";
        svg_voxels(out, rec, rec.corners[s], px, margin - min_x * px, oy, 0.9);
        out << "</svg>\n";
        if (!out) throw RenderIOError("short write to " + name.str());
    }
    return n_frames;
}

} // namespace evoxel::render
