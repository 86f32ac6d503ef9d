#pragma once

#include "evoxel/morphology.hpp"
#include "evoxel/voxel.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace evoxel {

struct NumericalBlowup : std::runtime_error {
    NumericalBlowup() : std::runtime_error("simulation produced non-finite coordinates") {}
};
struct DisconnectedBody : std::runtime_error {
    DisconnectedBody() : std::runtime_error("body voxels are not 4-connected") {}
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct PointMass {
    Vec2 position;
    Vec2 velocity;
    double mass = 0.0;
};

enum class SpringKind : int { EdgeHorizontal = 0, EdgeVertical = 1, Diagonal = 2 };

struct Spring {
    int a = 0;
    int b = 0;
    double rest0 = 1.0;     // unactuated rest length
    double rest = 1.0;      // current rest length (rest0 scaled by actuation)
    double stiffness = 0.0;
    double damping = 0.0;
    double bumper_fraction = 0.0; // below this fraction of rest, stiffen
    double bumper_stiffness = 0.0;
    SpringKind kind = SpringKind::EdgeHorizontal;
    int owner0 = -1; // voxel index; horizontal edges may have a second owner
    int owner1 = -1;
};

struct WorldConfig {
    double gravity = 9.8;              // downward acceleration
    double dt = 1.0 / 600.0;           // integration step, s
    int substeps = 10;                 // physics steps per control sample
    double ground_y = 0.0;             // rigid floor height
    double friction = 0.6;             // Coulomb cap on tangential force / normal force
    double contact_stiffness = 2000.0; // one-sided ground penalty spring
    double contact_damping = 30.0;     // normal dashpot while penetrating (force never pulls down)
    double tangential_damping = 50.0;  // viscous tangential force per unit speed

    double voxel_mass = 1.0;           // split equally over the voxel's 4 corners
    double stiffness_rigid = 60.0;     // edge springs of rigid voxels
    double stiffness_soft = 12.0;      // edge springs of soft and active voxels
    double diagonal_stiffness_factor = 0.7;
    double damping_ratio = 1.0;        // fraction of critical, per spring
    double drag = 0.0;                 // mass-proportional velocity drag, 1/s

    // Compression bumper: below bumper_fraction * rest a spring pushes back
    // with bumper_gain * stiffness, which keeps springs from passing through
    // zero length.
    double bumper_fraction = 0.3;
    double bumper_gain = 20.0;

    // Signed-area pressure per voxel. Springs cannot detect a quad folding
    // into a bow-tie (all six lengths stay near rest while the area crosses
    // zero); this term restores orientation and keeps areas near the
    // actuated target.
    double area_stiffness = 10.0;
};

/// Damped Hooke force the spring exerts on endpoint b (a receives the
/// negative). Zero for degenerate (near-zero-length) configurations.
Vec2 spring_force_on_b(const Spring& s, const PointMass& a, const PointMass& b);

/// Fills `multipliers` (one slot per voxel) for the control sample at time t.
using SignalFn = std::function<void(double t, std::span<double> multipliers)>;

/// Called once per control sample after the physics substeps.
using SampleSink = std::function<void(double t, const class World&)>;

/// Mass-spring state of one robot on flat ground. Each voxel is four point
/// masses and six springs; neighbors share corner masses and edge springs.
class World {
public:
    World(const Body& body, const WorldConfig& cfg);

    int voxel_count() const { return static_cast<int>(voxels_.size()); }
    VoxelType voxel_type(int v) const { return voxels_[v].type; }
    std::pair<int, int> voxel_grid_pos(int v) const { return {voxels_[v].row, voxels_[v].col}; }
    /// Corner point-mass indices in order BL, BR, TR, TL.
    const std::array<int, 4>& voxel_corners(int v) const { return voxels_[v].corners; }

    const std::vector<PointMass>& masses() const { return masses_; }
    std::vector<PointMass>& masses() { return masses_; }
    const std::vector<Spring>& springs() const { return springs_; }
    const WorldConfig& config() const { return cfg_; }
    double time() const { return time_; }

    /// Applies per-voxel rest-length multipliers (each in the actuation
    /// range): horizontal edges scale directly (shared edges take the mean of
    /// their owners), diagonals by sqrt((m^2+1)/2), vertical edges never.
    void set_multipliers(std::span<const double> per_voxel);

    /// One semi-implicit Euler step of cfg.dt with the current rest lengths.
    void step();

    /// set_multipliers + substeps * step + finiteness check.
    void control_sample(std::span<const double> per_voxel);

    /// Advances exactly n_cycles * cycle_seconds of sim time, sampling the
    /// signal once per control interval. Returns the horizontal displacement
    /// of the center of mass. Throws NumericalBlowup on divergence.
    double run_segment(const SignalFn& signal, int n_cycles, double cycle_seconds,
                       const SampleSink* sink = nullptr);

    Vec2 center_of_mass() const;
    double voxel_area(int v) const;
    /// Shoelace area with orientation: negative when the quad is inverted.
    double voxel_signed_area(int v) const;
    double kinetic_energy() const;
    double max_point_speed() const;

    /// Throws NumericalBlowup if any coordinate is non-finite or absurdly far.
    void check_finite() const;

private:
    struct VoxelBinding {
        int row = 0;
        int col = 0;
        VoxelType type = VoxelType::Empty;
        std::array<int, 4> corners{}; // BL, BR, TR, TL
    };

    WorldConfig cfg_;
    std::vector<PointMass> masses_;
    std::vector<Spring> springs_;
    std::vector<VoxelBinding> voxels_;
    std::vector<double> target_areas_;
    std::vector<double> scratch_multipliers_;
    double time_ = 0.0;
};

/// Line-delimited trajectory record: "t x0 y0 x1 y1 ...", one line per
/// control sample. Consumed by the renderer.
void write_trajectory_line(std::ostream& out, double t, const World& world);

} // namespace evoxel
