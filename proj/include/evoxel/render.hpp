#pragma once

#include "evoxel/tasks.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace evoxel::render {

struct RenderIOError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-control-sample snapshot of a rollout, enough to draw the robot.
struct RolloutRecording {
    std::vector<VoxelType> types;              // one per voxel, fixed for life
    std::vector<double> times;                 // one per control sample
    std::vector<std::vector<Vec2>> corners;    // per sample: 4 corners per voxel (BL,BR,TR,TL)
    std::vector<double> stimulus_changes;      // sim times where the image switched
    int samples_per_cycle = 0;
    double ground_y = 0.0;
};

/// Runs the standard evaluation rollout (settle, then each image in order)
/// and records every control sample.
RolloutRecording record_rollout(const Body& body, const std::vector<mnist::Image>& images,
                                const EvalConfig& cfg);

/// Writes the recording in the line-delimited trajectory text format
/// ("t x0 y0 x1 y1 ..." per control sample, corner order as recorded).
void write_trajectory_text(const RolloutRecording& rec, const std::string& path);

/// One SVG: robot silhouettes stacked down the page (time flows downward),
/// horizontal position tracking the robot's x, dashed lines at stimulus
/// changes.
void write_spacetime_svg(const RolloutRecording& rec, const std::string& path, int max_silhouettes = 120);

/// Numbered SVG frames resampled at `samples_per_cycle_out` per actuation
/// cycle. Returns the number of files written.
int write_frame_svgs(const RolloutRecording& rec, const std::string& prefix, int samples_per_cycle_out = 20);

} // namespace evoxel::render
