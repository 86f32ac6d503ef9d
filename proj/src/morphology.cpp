#include "evoxel/morphology.hpp"

#include "evoxel/cppn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace evoxel {

namespace {

Descriptors count_descriptors(const std::array<VoxelType, kGridSize * kGridSize>& grid) {
    Descriptors d;
    for (VoxelType t : grid) {
        if (t == VoxelType::Empty) continue;
        ++d.n_total;
        if (is_muscle(t)) ++d.n_muscle;
        if (is_sensor(t)) ++d.n_sensor;
    }
    return d;
}

/// Labels 4-connected components of non-empty cells; keeps the largest, with
/// ties broken toward the component containing the smallest row-major index.
void keep_largest_component(std::array<VoxelType, kGridSize * kGridSize>& grid) {
    std::array<int, kGridSize * kGridSize> label{};
    label.fill(-1);
    int n_components = 0;
    std::vector<int> sizes;
    std::vector<int> first_cell;
    for (int start = 0; start < kGridSize * kGridSize; ++start) {
        if (grid[start] == VoxelType::Empty || label[start] >= 0) continue;
        const int comp = n_components++;
        sizes.push_back(0);
        first_cell.push_back(start);
        std::queue<int> frontier;
        frontier.push(start);
        label[start] = comp;
        while (!frontier.empty()) {
            const int cell = frontier.front();
            frontier.pop();
            ++sizes[comp];
            const int r = cell / kGridSize;
            const int c = cell % kGridSize;
            const int dr[] = {-1, 1, 0, 0};
            const int dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int nr = r + dr[k];
                const int nc = c + dc[k];
                if (nr < 0 || nr >= kGridSize || nc < 0 || nc >= kGridSize) continue;
                const int ncell = nr * kGridSize + nc;
                if (grid[ncell] != VoxelType::Empty && label[ncell] < 0) {
                    label[ncell] = comp;
                    frontier.push(ncell);
                }
            }
        }
    }
    if (n_components == 0) return;
    int best = 0;
    for (int c = 1; c < n_components; ++c) {
        // first_cell is increasing in c, so ties keep the earlier component.
        if (sizes[c] > sizes[best]) best = c;
    }
    for (int i = 0; i < kGridSize * kGridSize; ++i)
        if (label[i] != best) grid[i] = VoxelType::Empty;
}

} // namespace

Body Body::from_grid(const std::array<VoxelType, kGridSize * kGridSize>& grid) {
    Body b;
    b.grid_ = grid;
    b.descriptors_ = count_descriptors(grid);
    if (b.descriptors_.n_total == 0) throw EmptyBody();
    return b;
}

Body Body::from_text(const std::string& text) {
    std::array<VoxelType, kGridSize * kGridSize> grid{};
    grid.fill(VoxelType::Empty);
    std::istringstream in(text);
    std::string line;
    int row = 0;
    while (std::getline(in, line) && row < kGridSize) {
        if (line.empty()) continue;
        if (static_cast<int>(line.size()) != kGridSize)
            throw std::runtime_error("body line must have 14 glyphs: '" + line + "'");
        for (int col = 0; col < kGridSize; ++col)
            grid[static_cast<std::size_t>(row) * kGridSize + col] = voxel_from_glyph(line[col]);
        ++row;
    }
    if (row != kGridSize) throw std::runtime_error("body text must have 14 lines");
    return from_grid(grid);
}

std::string Body::to_text() const {
    std::string out;
    out.reserve(kGridSize * (kGridSize + 1));
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) out.push_back(voxel_glyph(at(r, c)));
        out.push_back('\n');
    }
    return out;
}

CellCoords cell_coords(int row, int col) {
    const double x = -1.0 + 2.0 * col / (kGridSize - 1);
    const double y = -1.0 + 2.0 * row / (kGridSize - 1);
    const double d = std::sqrt(x * x + y * y) / std::sqrt(2.0);
    return {x, y, d};
}

Body develop(const Genome& genome) {
    std::array<VoxelType, kGridSize * kGridSize> grid{};
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
            const CellCoords in = cell_coords(r, c);
            const auto scores = genome.evaluate(in.x, in.y, in.d);
            int best = 0;
            for (int k = 1; k < kCppnOutputs; ++k)
                if (scores[k] > scores[best]) best = k; // ties keep the lowest index
            grid[static_cast<std::size_t>(r) * kGridSize + c] = static_cast<VoxelType>(best);
        }
    }
    keep_largest_component(grid);
    return Body::from_grid(grid); // throws EmptyBody when nothing survives
}

BinIndex bin_index(const Descriptors& desc) {
    auto bin = [](int count) {
        return std::min(kBinsPerDimension - 1, count * kBinsPerDimension / (kGridSize * kGridSize + 1));
    };
    return {bin(desc.n_muscle), bin(desc.n_sensor), bin(desc.n_total)};
}

} // namespace evoxel
