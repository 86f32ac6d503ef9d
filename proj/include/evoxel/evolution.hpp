#pragma once

#include "evoxel/cppn.hpp"
#include "evoxel/morphology.hpp"
#include "evoxel/tasks.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace evoxel {

struct InitFailure : std::runtime_error {
    InitFailure() : std::runtime_error("no valid individual found within the generation-0 budget") {}
};

/// Archive cell coordinate: descriptor bins plus the task slice in
/// four-digit mode (task = -1 in two-class mode).
struct CellKey {
    BinIndex bins;
    int task = -1;

    auto operator<=>(const CellKey&) const = default;
};

struct Elite {
    Genome genome;
    Descriptors descriptors;
    double fitness = 0.0;
    int task = -1;             // index into the task-spec list, -1 in two-class mode
    int generation = 0;        // generation discovered
    std::uint64_t eval_seed = 0;

    CellKey key() const { return {bin_index(descriptors), task}; }
};

enum class TaskMode : int { TwoClass = 0, FourDigit = 1 };

struct RunConfig {
    int generations = 100;
    int parents = 20;
    TaskMode mode = TaskMode::TwoClass;
    std::vector<int> classes = {0, 1};
    std::uint64_t master_seed = 0;
    std::uint64_t data_seed = 7; // selects the one training image per class
    EvalConfig eval;
    int init_budget = 500;       // generation-0 genomes before giving up
    int checkpoint_interval = 100;
    unsigned threads = 1;
    /// Maximum number of distinct filled cells; insertions that would open a
    /// cell beyond this are rejected. Defaults to the full descriptor grid.
    int archive_capacity = kBinsPerDimension * kBinsPerDimension * kBinsPerDimension;
};

/// Evaluates a body on the training stimuli; nullopt when the simulation
/// diverges (the child is discarded). Stubbed out in tests.
using RolloutFn = std::function<std::optional<EvalResult>(const Body&)>;

/// RolloutFn backed by the physics engine and a fixed training-image list.
RolloutFn make_physics_rollout(std::vector<mnist::Image> images, std::vector<int> classes,
                               const EvalConfig& cfg);

class Archive {
public:
    explicit Archive(const RunConfig& cfg) : cfg_(cfg) {}

    const RunConfig& config() const { return cfg_; }
    const std::map<CellKey, Elite>& cells() const { return cells_; }
    int generation() const { return generation_; }
    void set_generation(int g) { generation_ = g; }

    /// MAP-Elites replacement: accepted iff the cell is empty (and capacity
    /// allows) or the candidate is strictly fitter than the incumbent.
    bool insert(const Elite& candidate);

    /// Places an elite directly (checkpoint loading); no competition.
    void restore(const Elite& elite) { cells_[elite.key()] = elite; }

    int filled() const { return static_cast<int>(cells_.size()); }
    double best_fitness() const;
    double mean_fitness() const;
    std::vector<const Elite*> elites() const;

private:
    RunConfig cfg_;
    std::map<CellKey, Elite> cells_;
    int generation_ = 0;
};

struct GenerationStats {
    int generation = 0;
    int filled = 0;
    double best = 0.0;
    double mean = 0.0;
};

/// The task specs this run inserts against: one spec in two-class mode, the
/// seven groupings in four-digit mode.
std::vector<TaskSpec> task_specs_for(const RunConfig& cfg);

/// Seeds the archive with random genomes until cfg.parents cells are filled
/// or the budget is exhausted; throws InitFailure if nothing valid appears.
Archive init_archive(const RunConfig& cfg, const RolloutFn& rollout);

/// One MAP-Elites generation: sample parents, mutate, evaluate (possibly in
/// parallel; results are inserted in child order so the outcome is identical
/// for any thread count), insert.
void generation_step(Archive& archive, const RolloutFn& rollout);

using HistorySink = std::function<void(const GenerationStats&)>;
using CheckpointSink = std::function<void(const Archive&)>;

/// init + cfg.generations steps, reporting stats per generation and invoking
/// the checkpoint sink every cfg.checkpoint_interval generations and at the
/// end of the run.
Archive run(const RunConfig& cfg, const RolloutFn& rollout, const HistorySink* history = nullptr,
            const CheckpointSink* checkpoint = nullptr);

} // namespace evoxel
