#include "evoxel/tasks.hpp"

#include "evoxel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace evoxel {

std::vector<int> TaskSpec::classes() const {
    std::vector<int> out = group_a;
    out.insert(out.end(), group_b.begin(), group_b.end());
    return out;
}

bool TaskSpec::contains(int cls) const {
    const auto in = [&](const std::vector<int>& g) { return std::find(g.begin(), g.end(), cls) != g.end(); };
    return in(group_a) || in(group_b);
}

int TaskSpec::group_of(int cls) const {
    if (std::find(group_a.begin(), group_a.end(), cls) != group_a.end()) return 0;
    if (std::find(group_b.begin(), group_b.end(), cls) != group_b.end()) return 1;
    throw UnknownClass(cls);
}

std::string TaskSpec::name() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < group_a.size(); ++i) out << (i ? "," : "") << group_a[i];
    out << '/';
    for (std::size_t i = 0; i < group_b.size(); ++i) out << (i ? "," : "") << group_b[i];
    return out.str();
}

std::vector<double> voxel_stimulus(const World& world, const mnist::Image& image) {
    std::vector<double> out(static_cast<std::size_t>(world.voxel_count()), 0.0);
    for (int v = 0; v < world.voxel_count(); ++v) {
        const auto [r, c] = world.voxel_grid_pos(v);
        const auto [pr, pc] = pixel_for_voxel(r, c);
        out[static_cast<std::size_t>(v)] = image.at(pr, pc);
    }
    return out;
}

SignalFn make_signal(const World& world, const mnist::Image& image, const ActuationParams& params) {
    std::vector<double> stimulus = voxel_stimulus(world, image);
    std::vector<VoxelType> types(static_cast<std::size_t>(world.voxel_count()));
    for (int v = 0; v < world.voxel_count(); ++v) types[static_cast<std::size_t>(v)] = world.voxel_type(v);
    return [stimulus = std::move(stimulus), types = std::move(types), params](double t, std::span<double> out) {
        for (std::size_t v = 0; v < types.size(); ++v)
            out[v] = rest_multiplier(types[v], t, stimulus[v], params);
    };
}

EvalResult evaluate_rollout(const Body& body, const std::vector<mnist::Image>& images,
                            const std::vector<int>& classes, const EvalConfig& cfg,
                            const SampleSink* sink) {
    World world(body, cfg.world);
    EvalResult res;
    res.cycles_per_image = cfg.cycles_per_image;
    if (images.empty()) return res;

    if (cfg.settle_cycles > 0) {
        const SignalFn settle = make_signal(world, images.front(), cfg.actuation);
        world.run_segment(settle, cfg.settle_cycles, cfg.cycle_seconds(), sink);
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
        const SignalFn signal = make_signal(world, images[i], cfg.actuation);
        const double dx = world.run_segment(signal, cfg.cycles_per_image, cfg.cycle_seconds(), sink);
        res.per_image.push_back({classes.empty() ? static_cast<int>(i) : classes[i], dx});
    }
    return res;
}

FitnessReport fitness(const EvalResult& res, const TaskSpec& task) {
    for (const ImageResult& r : res.per_image)
        if (!task.contains(r.class_id)) throw UnknownClass(r.class_id);

    auto evaluate_mapping = [&](DirectionMap dir) {
        FitnessReport report;
        report.direction = dir;
        double min_ok = std::numeric_limits<double>::infinity();
        double max_bad = 0.0;
        for (std::size_t i = 0; i < res.per_image.size(); ++i) {
            const ImageResult& r = res.per_image[i];
            const int want = dir.sign_of_group(task.group_of(r.class_id));
            const bool ok = r.dx != 0.0 && ((r.dx > 0.0) == (want > 0));
            if (ok) {
                min_ok = std::min(min_ok, std::abs(r.dx));
            } else {
                report.misclassified.push_back(i);
                max_bad = std::max(max_bad, std::abs(r.dx));
            }
        }
        report.fitness = report.misclassified.empty() ? min_ok : -max_bad;
        return report;
    };

    const FitnessReport first = evaluate_mapping({true});
    const FitnessReport swapped = evaluate_mapping({false});
    return swapped.fitness > first.fitness ? swapped : first;
}

std::vector<TaskSpec> all_groupings(const std::vector<int>& classes) {
    if (classes.size() != 4) throw WrongArity("need exactly 4 classes, got " + std::to_string(classes.size()));
    const auto& c = classes;
    return {
        {{c[0]}, {c[1], c[2], c[3]}},
        {{c[1]}, {c[0], c[2], c[3]}},
        {{c[2]}, {c[0], c[1], c[3]}},
        {{c[3]}, {c[0], c[1], c[2]}},
        {{c[0], c[1]}, {c[2], c[3]}},
        {{c[0], c[2]}, {c[1], c[3]}},
        {{c[0], c[3]}, {c[1], c[2]}},
    };
}

DirectionMap calibrate_direction(const EvalResult& training_result, const TaskSpec& task) {
    const FitnessReport report = fitness(training_result, task);
    if (!(report.fitness > 0.0)) throw Uncalibrated();
    return report.direction;
}

DisplacementFn physics_displacement(const Body& body, const EvalConfig& cfg) {
    return [body, cfg](const mnist::Image& image) {
        const EvalResult res = evaluate_rollout(body, {image}, {}, cfg);
        return res.per_image.front().dx;
    };
}

GeneralizationReport generalize(const DisplacementFn& displacement, const mnist::LabeledSet& eval_set,
                                const TaskSpec& task, const DirectionMap& calibration,
                                double threshold, unsigned threads) {
    GeneralizationReport report;
    report.total = static_cast<int>(eval_set.size());
    report.per_image.resize(eval_set.size());

    std::vector<int> outcome(eval_set.size(), 0); // 0 below-threshold, 1 correct, 2 wrong direction
    parallel_for(eval_set.size(), threads, [&](std::size_t i) {
        const int cls = eval_set.labels[i];
        double dx = 0.0;
        bool blew_up = false;
        try {
            dx = displacement(eval_set.images[i]);
        } catch (const NumericalBlowup&) {
            blew_up = true;
        }
        report.per_image[i] = {cls, dx};
        if (blew_up || std::abs(dx) <= threshold) {
            outcome[i] = 0;
        } else {
            const int predicted = calibration.group_of_sign(dx > 0 ? +1 : -1);
            outcome[i] = predicted == task.group_of(cls) ? 1 : 2;
        }
    });

    for (int o : outcome) {
        if (o == 1)
            ++report.correct;
        else if (o == 2)
            ++report.wrong_direction;
        else
            ++report.below_threshold;
    }
    report.accuracy = report.total == 0 ? 0.0 : static_cast<double>(report.correct) / report.total;
    return report;
}

ExploitFilterResult exploit_filter(const Body& body, const EvalConfig& cfg, const ExploitFilterConfig& filter) {
    ExploitFilterResult result;
    result.smallest_area = std::numeric_limits<double>::infinity();

    mnist::Image uniform;
    uniform.width = kGridSize;
    uniform.height = kGridSize;
    uniform.pixels.assign(kGridSize * kGridSize, filter.stimulus_level);

    try {
        World world(body, cfg.world);
        const SignalFn signal = make_signal(world, uniform, cfg.actuation);
        const SampleSink sink = [&](double, const World& w) {
            result.peak_speed = std::max(result.peak_speed, w.max_point_speed());
            for (int v = 0; v < w.voxel_count(); ++v) {
                const double area = w.voxel_area(v);
                result.smallest_area = std::min(result.smallest_area, area);
                result.largest_area = std::max(result.largest_area, area);
            }
        };
        world.run_segment(signal, cfg.settle_cycles + filter.cycles, cfg.cycle_seconds(), &sink);
    } catch (const NumericalBlowup&) {
        result.blew_up = true;
        result.passed = false;
        return result;
    }
    result.passed = result.peak_speed <= filter.max_point_speed && result.smallest_area >= filter.area_min &&
                    result.largest_area <= filter.area_max;
    return result;
}

} // namespace evoxel
