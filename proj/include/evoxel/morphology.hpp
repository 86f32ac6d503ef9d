#pragma once

#include "evoxel/voxel.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace evoxel {

class Genome;

struct EmptyBody : std::runtime_error {
    EmptyBody() : std::runtime_error("development produced no voxels") {}
};

struct Descriptors {
    int n_muscle = 0;
    int n_sensor = 0;
    int n_total = 0;

    bool operator==(const Descriptors&) const = default;
};

/// The phenotype: a 14x14 grid of voxel types plus its descriptor counts.
/// Non-empty cells always form a single 4-connected component.
class Body {
public:
    static Body from_grid(const std::array<VoxelType, kGridSize * kGridSize>& grid);

    /// Parses the 14-line glyph format produced by to_text().
    static Body from_text(const std::string& text);

    VoxelType at(int row, int col) const { return grid_[static_cast<std::size_t>(row) * kGridSize + col]; }
    const std::array<VoxelType, kGridSize * kGridSize>& grid() const { return grid_; }
    const Descriptors& descriptors() const { return descriptors_; }

    std::string to_text() const;

    bool operator==(const Body&) const = default;

private:
    std::array<VoxelType, kGridSize * kGridSize> grid_{};
    Descriptors descriptors_;
};

/// Genotype-to-phenotype map: per-cell CPPN argmax, then largest-component
/// repair. Throws EmptyBody when nothing survives.
Body develop(const Genome& genome);

/// Normalized CPPN inputs for grid cell (row, col): x and y in [-1,1],
/// d = distance to grid center scaled into [0,1].
struct CellCoords {
    double x;
    double y;
    double d;
};
CellCoords cell_coords(int row, int col);

/// Equal-width 7-bin discretization of a descriptor count over [0, 196].
struct BinIndex {
    int muscle = 0;
    int sensor = 0;
    int total = 0;

    bool operator==(const BinIndex&) const = default;
    auto operator<=>(const BinIndex&) const = default;
};
BinIndex bin_index(const Descriptors& desc);

inline constexpr int kBinsPerDimension = 7;

} // namespace evoxel
