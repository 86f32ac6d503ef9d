#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evoxel/rng.hpp"
#include "evoxel/tasks.hpp"

#include <cmath>

using namespace evoxel;

namespace {

EvalResult make_result(std::vector<std::pair<int, double>> rows) {
    EvalResult res;
    for (auto [cls, dx] : rows) res.per_image.push_back({cls, dx});
    return res;
}

Body body_from_lines(const std::vector<std::string>& lines) {
    std::array<VoxelType, kGridSize * kGridSize> grid{};
    grid.fill(VoxelType::Empty);
    for (std::size_t r = 0; r < lines.size(); ++r)
        for (std::size_t c = 0; c < lines[r].size(); ++c)
            if (lines[r][c] != '.') grid[r * kGridSize + c] = voxel_from_glyph(lines[r][c]);
    return Body::from_grid(grid);
}

mnist::Image uniform_image(double level) {
    mnist::Image img;
    img.width = img.height = kGridSize;
    img.pixels.assign(kGridSize * kGridSize, level);
    return img;
}

} // namespace

TEST_CASE("fitness: consistent opposite directions take the minimum |dx|") {
    const TaskSpec task{{0}, {1}};
    const FitnessReport r = fitness(make_result({{0, -5.0}, {1, 4.0}}), task);
    CHECK(r.fitness == 4.0);
    CHECK(r.misclassified.empty());
    CHECK(r.direction.sign_of_group(0) == -1);
    CHECK(r.direction.sign_of_group(1) == +1);
}

TEST_CASE("fitness: same-direction images penalize by the better mapping") {
    const TaskSpec task{{0}, {1}};
    const FitnessReport r = fitness(make_result({{0, 5.0}, {1, 3.0}}), task);
    CHECK(r.fitness == -3.0);
    REQUIRE(r.misclassified.size() == 1);
    CHECK(r.misclassified[0] == 1); // image 1 under the (0 -> +) mapping
}

TEST_CASE("fitness: four-class two-vs-two hand enumeration") {
    const TaskSpec task{{0, 3}, {1, 2}};
    const FitnessReport r =
        fitness(make_result({{0, -2.0}, {1, 6.0}, {2, 1.0}, {3, -7.0}}), task);
    CHECK(r.fitness == 1.0);
    CHECK(r.misclassified.empty());
}

TEST_CASE("fitness: zero displacement counts as misclassified") {
    const TaskSpec task{{0}, {1}};
    const FitnessReport r = fitness(make_result({{0, 0.0}, {1, 4.0}}), task);
    CHECK(r.fitness <= 0.0);
    REQUIRE(!r.misclassified.empty());
}

TEST_CASE("fitness: positive iff no misclassified") {
    Rng rng(7);
    const TaskSpec task{{0, 2}, {1, 3}};
    for (int i = 0; i < 1000; ++i) {
        EvalResult res;
        for (int cls = 0; cls < 4; ++cls) res.per_image.push_back({cls, rng.normal(0.0, 3.0)});
        const FitnessReport r = fitness(res, task);
        CHECK((r.fitness > 0.0) == r.misclassified.empty());
    }
}

TEST_CASE("fitness: invariant under group-label swap") {
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        EvalResult res;
        for (int cls = 0; cls < 4; ++cls) res.per_image.push_back({cls, rng.normal(0.0, 3.0)});
        const TaskSpec task{{0, 1}, {2, 3}};
        const TaskSpec swapped{{2, 3}, {0, 1}};
        const FitnessReport a = fitness(res, task);
        const FitnessReport b = fitness(res, swapped);
        CHECK(a.fitness == b.fitness);
        CHECK(a.misclassified == b.misclassified);
    }
}

TEST_CASE("fitness: positive scaling scales fitness, keeps mapping and misclassified set") {
    Rng rng(33);
    for (int i = 0; i < 1000; ++i) {
        EvalResult res;
        for (int cls = 0; cls < 4; ++cls) res.per_image.push_back({cls, rng.normal(0.0, 2.0)});
        const double scale = std::exp(rng.normal(0.0, 1.0)); // positive
        EvalResult scaled = res;
        for (auto& row : scaled.per_image) row.dx *= scale;
        const TaskSpec task{{0, 3}, {1, 2}};
        const FitnessReport a = fitness(res, task);
        const FitnessReport b = fitness(scaled, task);
        CHECK(b.fitness == scale * a.fitness);
        CHECK(a.misclassified == b.misclassified);
        CHECK(a.direction.a_negative == b.direction.a_negative);
    }
}

TEST_CASE("fitness rejects classes outside the task") {
    const TaskSpec task{{0}, {1}};
    CHECK_THROWS_AS(fitness(make_result({{5, 1.0}}), task), UnknownClass);
}

TEST_CASE("all_groupings: the seven fixed partitions") {
    const auto specs = all_groupings({0, 1, 2, 3});
    REQUIRE(specs.size() == 7);
    CHECK(specs.front().group_a == std::vector<int>{0});
    CHECK(specs.front().group_b == std::vector<int>{1, 2, 3});
    CHECK(specs.back().group_a == std::vector<int>{0, 3});
    CHECK(specs.back().group_b == std::vector<int>{1, 2});
    CHECK(specs[4].group_a == std::vector<int>{0, 1});
    CHECK(specs[4].group_b == std::vector<int>{2, 3});
    CHECK(specs[1].name() == "1/0,2,3");
    CHECK_THROWS_AS(all_groupings({0, 1, 2}), WrongArity);
}

TEST_CASE("calibrate_direction projects the winning mapping") {
    const TaskSpec task{{0}, {1}};
    const DirectionMap m = calibrate_direction(make_result({{0, -5.0}, {1, 4.0}}), task);
    CHECK(m.sign_of_group(0) == -1);
    const DirectionMap m2 = calibrate_direction(make_result({{0, 5.0}, {1, -4.0}}), task);
    CHECK(m2.sign_of_group(0) == +1);
    CHECK_THROWS_AS(calibrate_direction(make_result({{0, 5.0}, {1, 3.0}}), task), Uncalibrated);
}

TEST_CASE("evaluate_rollout: all-passive body barely moves") {
    const Body body = body_from_lines({"###", "###"});
    EvalConfig cfg;
    const EvalResult res = evaluate_rollout(body, {uniform_image(0.0), uniform_image(1.0)}, {0, 1}, cfg);
    REQUIRE(res.per_image.size() == 2);
    for (const ImageResult& r : res.per_image) CHECK(std::abs(r.dx) < 1e-2);
}

TEST_CASE("evaluate_rollout: no sensors means the stimulus cannot matter") {
    const Body body = body_from_lines({"ow#", "#wo"});
    EvalConfig cfg;
    // Present very different image sequences; without sensor voxels the
    // per-image displacements must match far below the 1e-9 contract.
    const EvalResult a = evaluate_rollout(body, {uniform_image(0.0), uniform_image(1.0)}, {0, 1}, cfg);
    const EvalResult b = evaluate_rollout(body, {uniform_image(0.7), uniform_image(0.2)}, {0, 1}, cfg);
    REQUIRE(a.per_image.size() == b.per_image.size());
    for (std::size_t i = 0; i < a.per_image.size(); ++i)
        CHECK(std::abs(a.per_image[i].dx - b.per_image[i].dx) < 1e-9);
}

TEST_CASE("evaluate_rollout is bit-deterministic") {
    const Body body = body_from_lines({"grw", "oo#"});
    EvalConfig cfg;
    const auto imgs = std::vector<mnist::Image>{uniform_image(0.3), uniform_image(0.9)};
    const EvalResult a = evaluate_rollout(body, imgs, {0, 1}, cfg);
    const EvalResult b = evaluate_rollout(body, imgs, {0, 1}, cfg);
    for (std::size_t i = 0; i < a.per_image.size(); ++i) CHECK(a.per_image[i].dx == b.per_image[i].dx);
}

TEST_CASE("generalize: scripted displacements reproduce a hand count") {
    // 6 images, classes 0/1 alternating; displacement script below.
    mnist::LabeledSet eval_set;
    for (int i = 0; i < 6; ++i) {
        eval_set.images.push_back(uniform_image(i / 10.0));
        eval_set.labels.push_back(i % 2);
    }
    // Script keyed by the image's uniform level.
    const DisplacementFn script = [](const mnist::Image& img) {
        const double level = img.pixels[0];
        if (level < 0.05) return -5.0;  // class 0: correct (left)
        if (level < 0.15) return +4.0;  // class 1: correct (right)
        if (level < 0.25) return +6.0;  // class 0: wrong direction
        if (level < 0.35) return -2.0;  // class 1: below threshold (|dx| <= 3)
        if (level < 0.45) return -3.0;  // class 0: |dx| == 3, still below threshold
        return +3.5;                    // class 1: correct
    };
    const TaskSpec task{{0}, {1}};
    const DirectionMap calibration{true}; // group 0 -> negative
    const GeneralizationReport rep = generalize(script, eval_set, task, calibration, 3.0, 2);
    // Hand count: correct = images 0, 1, 5; wrong direction = image 2;
    // below threshold = images 3, 4.
    CHECK(rep.total == 6);
    CHECK(rep.correct == 3);
    CHECK(rep.wrong_direction == 1);
    CHECK(rep.below_threshold == 2);
    CHECK(rep.accuracy == doctest::Approx(0.5));
}

TEST_CASE("generalize: infinite threshold zeroes every robot") {
    mnist::LabeledSet eval_set;
    for (int i = 0; i < 4; ++i) {
        eval_set.images.push_back(uniform_image(0.0));
        eval_set.labels.push_back(i % 2);
    }
    const DisplacementFn script = [](const mnist::Image&) { return 100.0; };
    const GeneralizationReport rep = generalize(script, eval_set, {{0}, {1}}, {true},
                                                std::numeric_limits<double>::infinity());
    CHECK(rep.accuracy == 0.0);
    CHECK(rep.below_threshold == 4);
}

TEST_CASE("generalize: per-image blowups count as misclassified") {
    mnist::LabeledSet eval_set;
    eval_set.images.push_back(uniform_image(0.0));
    eval_set.labels.push_back(0);
    eval_set.images.push_back(uniform_image(1.0));
    eval_set.labels.push_back(1);
    const DisplacementFn script = [](const mnist::Image& img) -> double {
        if (img.pixels[0] > 0.5) throw NumericalBlowup();
        return -9.0;
    };
    const GeneralizationReport rep = generalize(script, eval_set, {{0}, {1}}, {true});
    CHECK(rep.correct == 1);
    CHECK(rep.below_threshold == 1);
    CHECK(rep.accuracy == doctest::Approx(0.5));
}

TEST_CASE("physics_displacement: fresh world per image, deterministic") {
    const Body body = body_from_lines({"go", "rw"});
    EvalConfig cfg;
    const DisplacementFn f = physics_displacement(body, cfg);
    const double a = f(uniform_image(0.5));
    const double b = f(uniform_image(0.5));
    CHECK(a == b);
}

TEST_CASE("exploit_filter: resting passive body passes") {
    const Body body = body_from_lines({"##", "##"});
    EvalConfig cfg;
    const ExploitFilterResult r = exploit_filter(body, cfg);
    CHECK(r.passed);
    CHECK(!r.blew_up);
    CHECK(r.peak_speed < 5.0);
    CHECK(r.smallest_area > 0.5);
    CHECK(r.largest_area < 2.0);
}

TEST_CASE("exploit_filter: diverging simulation fails") {
    const Body body = body_from_lines({"ow", "wo"});
    EvalConfig cfg;
    cfg.world.dt = 0.2; // far beyond the spring stability limit
    cfg.world.substeps = 1;
    const ExploitFilterResult r = exploit_filter(body, cfg);
    CHECK(!r.passed);
    CHECK(r.blew_up);
}

TEST_CASE("exploit_filter: pass is monotone in the speed cap") {
    const Body body = body_from_lines({"#o", "#w"});
    EvalConfig cfg;
    ExploitFilterConfig filter;
    bool prev = false;
    for (double cap : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0}) {
        filter.max_point_speed = cap;
        const bool pass = exploit_filter(body, cfg, filter).passed;
        if (prev) CHECK(pass); // once passing, higher caps keep passing
        prev = pass;
    }
    CHECK(prev); // generous cap passes
}
