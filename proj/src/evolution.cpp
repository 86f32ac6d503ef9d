#include "evoxel/evolution.hpp"

#include "evoxel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evoxel {

namespace {

// Stream tags so the init, parent-sampling, and child streams never collide.
constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kParentStream = 0x706172;

struct ChildOutcome {
    bool valid = false;
    Genome genome;
    Descriptors descriptors;
    std::vector<double> fitness_per_task; // aligned with task_specs_for()
    std::uint64_t eval_seed = 0;
};

/// Mutates (or develops a fresh genome), simulates, and scores one child.
/// Pure given (parent, seed): safe to run concurrently.
ChildOutcome evaluate_child(const Genome& parent, bool is_initial, std::uint64_t seed,
                            const std::vector<TaskSpec>& specs, const RolloutFn& rollout) {
    ChildOutcome out;
    out.eval_seed = seed;
    Rng rng(seed);
    out.genome = is_initial ? random_genome(rng) : mutate(parent, rng);
    std::optional<Body> body;
    try {
        body = develop(out.genome);
    } catch (const EmptyBody&) {
        return out;
    }
    out.descriptors = body->descriptors();
    const std::optional<EvalResult> result = rollout(*body);
    if (!result.has_value()) return out;
    for (const TaskSpec& spec : specs) out.fitness_per_task.push_back(fitness(*result, spec).fitness);
    out.valid = true;
    return out;
}

void insert_outcome(Archive& archive, const ChildOutcome& child, int generation, bool task_axis) {
    if (!child.valid) return;
    for (std::size_t t = 0; t < child.fitness_per_task.size(); ++t) {
        Elite elite;
        elite.genome = child.genome;
        elite.descriptors = child.descriptors;
        elite.fitness = child.fitness_per_task[t];
        elite.task = task_axis ? static_cast<int>(t) : -1;
        elite.generation = generation;
        elite.eval_seed = child.eval_seed;
        if (std::isfinite(elite.fitness)) archive.insert(elite);
    }
}

} // namespace

RolloutFn make_physics_rollout(std::vector<mnist::Image> images, std::vector<int> classes,
                               const EvalConfig& cfg) {
    return [images = std::move(images), classes = std::move(classes),
            cfg](const Body& body) -> std::optional<EvalResult> {
        try {
            return evaluate_rollout(body, images, classes, cfg);
        } catch (const NumericalBlowup&) {
            return std::nullopt;
        }
    };
}

bool Archive::insert(const Elite& candidate) {
    const CellKey key = candidate.key();
    auto it = cells_.find(key);
    if (it == cells_.end()) {
        if (filled() >= cfg_.archive_capacity * (cfg_.mode == TaskMode::FourDigit ? 7 : 1)) return false;
        cells_.emplace(key, candidate);
        return true;
    }
    if (candidate.fitness > it->second.fitness) {
        it->second = candidate;
        return true;
    }
    return false;
}

double Archive::best_fitness() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [key, elite] : cells_) best = std::max(best, elite.fitness);
    return best;
}

double Archive::mean_fitness() const {
    if (cells_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [key, elite] : cells_) sum += elite.fitness;
    return sum / static_cast<double>(cells_.size());
}

std::vector<const Elite*> Archive::elites() const {
    std::vector<const Elite*> out;
    out.reserve(cells_.size());
    for (const auto& [key, elite] : cells_) out.push_back(&elite);
    return out;
}

std::vector<TaskSpec> task_specs_for(const RunConfig& cfg) {
    if (cfg.mode == TaskMode::FourDigit) return all_groupings(cfg.classes);
    if (cfg.classes.size() != 2)
        throw WrongArity("two-class mode needs exactly 2 classes, got " + std::to_string(cfg.classes.size()));
    return {TaskSpec{{cfg.classes[0]}, {cfg.classes[1]}}};
}

Archive init_archive(const RunConfig& cfg, const RolloutFn& rollout) {
    Archive archive(cfg);
    const std::vector<TaskSpec> specs = task_specs_for(cfg);
    const bool task_axis = cfg.mode == TaskMode::FourDigit;
    const Genome unused = Genome::minimal();

    // Fixed-size batches keep the evaluated-genome sequence independent of
    // the thread count.
    const int batch = std::max(1, cfg.parents);
    int spent = 0;
    while (spent < cfg.init_budget) {
        const int n = std::min(batch, cfg.init_budget - spent);
        std::vector<ChildOutcome> outcomes(static_cast<std::size_t>(n));
        parallel_for(static_cast<std::size_t>(n), cfg.threads, [&](std::size_t i) {
            const std::uint64_t seed = derive_seed(cfg.master_seed, kInitStream, spent + i);
            outcomes[i] = evaluate_child(unused, true, seed, specs, rollout);
        });
        for (const ChildOutcome& child : outcomes) insert_outcome(archive, child, 0, task_axis);
        spent += n;
        if (archive.filled() >= cfg.parents) break;
    }
    if (archive.filled() < 1) throw InitFailure();
    return archive;
}

void generation_step(Archive& archive, const RolloutFn& rollout) {
    const RunConfig& cfg = archive.config();
    const std::vector<TaskSpec> specs = task_specs_for(cfg);
    const bool task_axis = cfg.mode == TaskMode::FourDigit;
    const int generation = archive.generation() + 1;

    // Parent sampling is a single sequential stream; elites() iterates the
    // cell map in key order, so the draw is reproducible.
    const std::vector<const Elite*> pool = archive.elites();
    Rng parent_rng(derive_seed(cfg.master_seed, kParentStream, generation));
    std::vector<const Elite*> parents(static_cast<std::size_t>(cfg.parents));
    for (int i = 0; i < cfg.parents; ++i) parents[i] = pool[parent_rng.uniform_index(pool.size())];

    std::vector<ChildOutcome> outcomes(static_cast<std::size_t>(cfg.parents));
    parallel_for(static_cast<std::size_t>(cfg.parents), cfg.threads, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, generation, i);
        outcomes[i] = evaluate_child(parents[i]->genome, false, seed, specs, rollout);
    });
    for (const ChildOutcome& child : outcomes) insert_outcome(archive, child, generation, task_axis);
    archive.set_generation(generation);
}

Archive run(const RunConfig& cfg, const RolloutFn& rollout, const HistorySink* history,
            const CheckpointSink* checkpoint) {
    Archive archive = init_archive(cfg, rollout);
    for (int g = 0; g < cfg.generations; ++g) {
        generation_step(archive, rollout);
        if (history != nullptr)
            (*history)({archive.generation(), archive.filled(), archive.best_fitness(), archive.mean_fitness()});
        if (checkpoint != nullptr && cfg.checkpoint_interval > 0 &&
            archive.generation() % cfg.checkpoint_interval == 0)
            (*checkpoint)(archive);
    }
    if (checkpoint != nullptr &&
        (cfg.checkpoint_interval <= 0 || archive.generation() % cfg.checkpoint_interval != 0))
        (*checkpoint)(archive);
    return archive;
}

} // namespace evoxel
