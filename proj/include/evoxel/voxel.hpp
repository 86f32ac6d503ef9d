#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evoxel {

/// Grid dimensions for bodies and images.
inline constexpr int kGridSize = 14;

/// Actuation multiplier bounds shared by muscles and sensors.
inline constexpr double kMultiplierMin = 0.6;
inline constexpr double kMultiplierMax = 1.6;

/// The seven material slots, in fixed order (also the CPPN output order).
enum class VoxelType : int {
    Empty = 0,
    Rigid = 1,
    Soft = 2,
    MusclePhase0 = 3,
    MusclePhasePi = 4,
    SensorExpand = 5,
    SensorShrink = 6,
};

inline constexpr int kVoxelTypeCount = 7;

inline bool is_muscle(VoxelType t) { return t == VoxelType::MusclePhase0 || t == VoxelType::MusclePhasePi; }
inline bool is_sensor(VoxelType t) { return t == VoxelType::SensorExpand || t == VoxelType::SensorShrink; }

struct OutOfGrid : std::runtime_error {
    OutOfGrid(int i, int j)
        : std::runtime_error("voxel (" + std::to_string(i) + "," + std::to_string(j) + ") outside 14x14 grid") {}
};

struct ActuationParams {
    double amplitude = 0.6;   // muscle sine amplitude, <= kMultiplierMax - 1
    double frequency = 2.0;   // muscle cycles per simulated second
    double sensor_gain = 1.0; // scales the sensor's linear pixel response
};

/// Rest-length multiplier for a voxel of type `vt` at time `t` sensing pixel
/// intensity `p` in [0,1]. Muscles follow antiphase sinusoids; sensors map the
/// pixel linearly onto the full multiplier range; passive voxels stay at 1.
inline double rest_multiplier(VoxelType vt, double t, double p, const ActuationParams& params = {}) {
    double m = 1.0;
    switch (vt) {
    case VoxelType::MusclePhase0:
        m = 1.0 + params.amplitude * std::sin(2.0 * M_PI * params.frequency * t);
        break;
    case VoxelType::MusclePhasePi:
        m = 1.0 + params.amplitude * std::sin(2.0 * M_PI * params.frequency * t + M_PI);
        break;
    case VoxelType::SensorExpand:
        m = 1.0 + params.sensor_gain * (kMultiplierMax - 1.0) * p;
        break;
    case VoxelType::SensorShrink:
        m = 1.0 - params.sensor_gain * (1.0 - kMultiplierMin) * p;
        break;
    default:
        break;
    }
    return std::clamp(m, kMultiplierMin, kMultiplierMax);
}

/// Voxel (i,j) senses pixel (i,j): the binding is by initial grid position and
/// never moves with the robot.
inline std::pair<int, int> pixel_for_voxel(int i, int j) {
    if (i < 0 || i >= kGridSize || j < 0 || j >= kGridSize) throw OutOfGrid(i, j);
    return {i, j};
}

/// One-character glyph per type, used by the body text format.
inline char voxel_glyph(VoxelType t) {
    switch (t) {
    case VoxelType::Empty: return '.';
    case VoxelType::Rigid: return '#';
    case VoxelType::Soft: return '+';
    case VoxelType::MusclePhase0: return 'o';
    case VoxelType::MusclePhasePi: return 'w';
    case VoxelType::SensorExpand: return 'g';
    case VoxelType::SensorShrink: return 'r';
    }
    return '?';
}

inline VoxelType voxel_from_glyph(char c) {
    switch (c) {
    case '.': return VoxelType::Empty;
    case '#': return VoxelType::Rigid;
    case '+': return VoxelType::Soft;
    case 'o': return VoxelType::MusclePhase0;
    case 'w': return VoxelType::MusclePhasePi;
    case 'g': return VoxelType::SensorExpand;
    case 'r': return VoxelType::SensorShrink;
    default: throw std::runtime_error(std::string("unknown voxel glyph '") + c + "'");
    }
}

} // namespace evoxel
