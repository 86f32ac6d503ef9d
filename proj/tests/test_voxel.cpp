#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evoxel/rng.hpp"
#include "evoxel/voxel.hpp"

using namespace evoxel;

TEST_CASE("passive voxels never actuate") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(0.0, 100.0);
        const double p = rng.uniform();
        CHECK(rest_multiplier(VoxelType::Rigid, t, p) == 1.0);
        CHECK(rest_multiplier(VoxelType::Soft, t, p) == 1.0);
        CHECK(rest_multiplier(VoxelType::Empty, t, p) == 1.0);
    }
}

TEST_CASE("muscle quarter-period values and clamping") {
    ActuationParams params; // A = 0.6, f = 2
    const double quarter = 1.0 / (4.0 * params.frequency);
    CHECK(rest_multiplier(VoxelType::MusclePhase0, quarter, 0.0, params) == doctest::Approx(1.6).epsilon(1e-12));
    // Antiphase variant would hit 0.4; it clamps to the range floor.
    CHECK(rest_multiplier(VoxelType::MusclePhasePi, quarter, 0.0, params) ==
          doctest::Approx(kMultiplierMin).epsilon(1e-12));
}

TEST_CASE("muscle signal is periodic") {
    ActuationParams params;
    const double period = 1.0 / params.frequency;
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const double t = rng.uniform(0.0, 20.0);
        const double a = rest_multiplier(VoxelType::MusclePhase0, t, 0.0, params);
        const double b = rest_multiplier(VoxelType::MusclePhase0, t + period, 0.0, params);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        const double c = rest_multiplier(VoxelType::MusclePhasePi, t, 0.0, params);
        const double d = rest_multiplier(VoxelType::MusclePhasePi, t + period, 0.0, params);
        CHECK(c == doctest::Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("muscle variants are antiphase before clamping") {
    ActuationParams params;
    params.amplitude = 0.35; // keeps both variants inside the range: no clamp
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        const double t = rng.uniform(0.0, 10.0);
        const double m0 = rest_multiplier(VoxelType::MusclePhase0, t, 0.0, params);
        const double mpi = rest_multiplier(VoxelType::MusclePhasePi, t, 0.0, params);
        CHECK(m0 - 1.0 == doctest::Approx(-(mpi - 1.0)).epsilon(1e-10));
    }
}

TEST_CASE("sensor endpoints") {
    CHECK(rest_multiplier(VoxelType::SensorExpand, 3.0, 0.0) == 1.0);
    CHECK(rest_multiplier(VoxelType::SensorExpand, 3.0, 1.0) == doctest::Approx(kMultiplierMax));
    CHECK(rest_multiplier(VoxelType::SensorShrink, 3.0, 0.0) == 1.0);
    CHECK(rest_multiplier(VoxelType::SensorShrink, 3.0, 1.0) == doctest::Approx(kMultiplierMin));
}

TEST_CASE("sensor multipliers are monotone in pixel intensity") {
    double prev_expand = -1.0;
    double prev_shrink = 2.0;
    for (int i = 0; i <= 100; ++i) {
        const double p = i / 100.0;
        const double e = rest_multiplier(VoxelType::SensorExpand, 0.0, p);
        const double s = rest_multiplier(VoxelType::SensorShrink, 0.0, p);
        CHECK(e > prev_expand);
        CHECK(s < prev_shrink);
        prev_expand = e;
        prev_shrink = s;
    }
}

TEST_CASE("multiplier always stays in the actuation range") {
    Rng rng(23);
    ActuationParams params;
    for (int i = 0; i < 2000; ++i) {
        const auto vt = static_cast<VoxelType>(rng.uniform_index(kVoxelTypeCount));
        const double m = rest_multiplier(vt, rng.uniform(0.0, 50.0), rng.uniform(), params);
        CHECK(m >= kMultiplierMin);
        CHECK(m <= kMultiplierMax);
    }
}

TEST_CASE("pixel binding is the identity on the grid") {
    CHECK(pixel_for_voxel(0, 0) == std::pair{0, 0});
    CHECK(pixel_for_voxel(13, 13) == std::pair{13, 13});
    CHECK(pixel_for_voxel(4, 9) == std::pair{4, 9});
    CHECK_THROWS_AS(pixel_for_voxel(14, 0), OutOfGrid);
    CHECK_THROWS_AS(pixel_for_voxel(0, -1), OutOfGrid);
}

TEST_CASE("voxel glyphs round-trip") {
    for (int i = 0; i < kVoxelTypeCount; ++i) {
        const auto t = static_cast<VoxelType>(i);
        CHECK(voxel_from_glyph(voxel_glyph(t)) == t);
    }
}
