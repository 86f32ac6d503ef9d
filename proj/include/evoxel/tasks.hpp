#pragma once

#include "evoxel/mnist.hpp"
#include "evoxel/physics.hpp"
#include "evoxel/voxel.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace evoxel {

struct UnknownClass : std::runtime_error {
    explicit UnknownClass(int cls) : std::runtime_error("class not in task: " + std::to_string(cls)) {}
};
struct WrongArity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Uncalibrated : std::runtime_error {
    Uncalibrated() : std::runtime_error("training fitness is not positive; no direction mapping") {}
};

/// A binary grouping of digit classes. Which group ends up moving left or
/// right is free; fitness() picks the better of the two direction mappings.
struct TaskSpec {
    std::vector<int> group_a;
    std::vector<int> group_b;

    std::vector<int> classes() const;
    bool contains(int cls) const;
    /// 0 for group_a, 1 for group_b; throws UnknownClass.
    int group_of(int cls) const;
    std::string name() const; // e.g. "0/1,2,3"
};

/// Direction assignment: the sign of dx each group must produce.
struct DirectionMap {
    bool a_negative = true; // group_a -> negative dx, group_b -> positive; or swapped

    int sign_of_group(int group) const { return (group == 0) == a_negative ? -1 : +1; }
    /// +1 -> group index moving in positive x, under this mapping.
    int group_of_sign(int sign) const { return (sign < 0) == a_negative ? 0 : 1; }
};

struct ImageResult {
    int class_id = 0;
    double dx = 0.0;
};

/// Per-stimulus horizontal displacements from one evaluation.
struct EvalResult {
    std::vector<ImageResult> per_image;
    int cycles_per_image = 10;
};

struct FitnessReport {
    double fitness = 0.0;
    DirectionMap direction;
    std::vector<std::size_t> misclassified; // indices into EvalResult::per_image
};

/// Everything an evaluation needs besides the body and the stimuli.
struct EvalConfig {
    WorldConfig world;
    ActuationParams actuation;
    int cycles_per_image = 10;
    int settle_cycles = 1; // un-measured cycles before the first stimulus segment

    double cycle_seconds() const { return 1.0 / actuation.frequency; }
};

/// Per-voxel pixel intensities for one stimulus, bound by initial grid
/// position (sensor voxels keep their pixel for life).
std::vector<double> voxel_stimulus(const World& world, const mnist::Image& image);

/// Builds the control signal for a fixed stimulus.
SignalFn make_signal(const World& world, const mnist::Image& image, const ActuationParams& params);

/// One continuous rollout: build the world once, settle, then present each
/// image in order for cycles_per_image actuation cycles, measuring the
/// center-of-mass displacement per segment. Throws NumericalBlowup if the
/// simulation diverges.
EvalResult evaluate_rollout(const Body& body, const std::vector<mnist::Image>& images,
                            const std::vector<int>& classes, const EvalConfig& cfg,
                            const SampleSink* sink = nullptr);

/// The displacement fitness rule: if every image moves in its group's
/// direction under one of the two mappings, fitness is the minimum |dx|;
/// otherwise it is -1 times the maximum |dx| over misclassified images.
/// dx == 0 always counts as misclassified.
FitnessReport fitness(const EvalResult& res, const TaskSpec& task);

/// The seven binary groupings of four classes, in fixed order:
/// four one-vs-rest splits followed by the three two-vs-two splits.
std::vector<TaskSpec> all_groupings(const std::vector<int>& classes);

/// Projection of fitness() to the winning direction mapping; throws
/// Uncalibrated when training fitness is not positive.
DirectionMap calibrate_direction(const EvalResult& training_result, const TaskSpec& task);

/// dx for one stimulus image; may throw NumericalBlowup.
using DisplacementFn = std::function<double(const mnist::Image&)>;

/// Fresh-world displacement measurement for generalization (independent
/// rollout per image, from the rest state).
DisplacementFn physics_displacement(const Body& body, const EvalConfig& cfg);

struct GeneralizationReport {
    double accuracy = 0.0;
    int total = 0;
    int correct = 0;
    int wrong_direction = 0;
    int below_threshold = 0; // includes per-image simulation blowups
    std::vector<ImageResult> per_image;
};

/// Presents every eval-set image independently; an image counts as
/// misclassified when |dx| <= threshold voxel lengths, otherwise the sign of
/// dx picks the predicted group under the calibration.
GeneralizationReport generalize(const DisplacementFn& displacement, const mnist::LabeledSet& eval_set,
                                const TaskSpec& task, const DirectionMap& calibration,
                                double threshold = 3.0, unsigned threads = 1);

struct ExploitFilterConfig {
    double max_point_speed = 50.0; // voxel lengths per second
    double area_min = 0.1;
    double area_max = 4.0;
    int cycles = 5;
    double stimulus_level = 0.5; // uniform pixel intensity for the reference rollout
};

struct ExploitFilterResult {
    bool passed = false;
    bool blew_up = false;
    double peak_speed = 0.0;
    double smallest_area = 0.0;
    double largest_area = 0.0;
};

/// Screens out individuals whose reference rollout shows non-physical
/// behavior (runaway speeds, collapsed or exploded voxels, divergence).
ExploitFilterResult exploit_filter(const Body& body, const EvalConfig& cfg,
                                   const ExploitFilterConfig& filter = {});

} // namespace evoxel
