#include "evoxel/baseline.hpp"
#include "evoxel/evolution.hpp"
#include "evoxel/mnist.hpp"
#include "evoxel/parallel.hpp"
#include "evoxel/persist.hpp"
#include "evoxel/render.hpp"
#include "evoxel/tasks.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace evoxel;

namespace {

struct NoEligibleElites : std::runtime_error {
    NoEligibleElites() : std::runtime_error("no elite passed the exploit filter") {}
};

std::vector<int> parse_class_list(const std::string& arg) {
    std::vector<int> out;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

CellKey parse_cell_key(const std::string& arg) {
    const std::vector<int> parts = parse_class_list(arg);
    if (parts.size() != 3 && parts.size() != 4)
        throw CLI::ValidationError("--cell", "expected m,s,t or m,s,t,task");
    CellKey key;
    key.bins = {parts[0], parts[1], parts[2]};
    key.task = parts.size() == 4 ? parts[3] : -1;
    return key;
}

std::string cell_key_string(const CellKey& key) {
    std::ostringstream out;
    out << key.bins.muscle << ',' << key.bins.sensor << ',' << key.bins.total;
    if (key.task >= 0) out << ',' << key.task;
    return out.str();
}

/// Training stimuli for an archive, reconstructed from its config.
struct TrainingData {
    std::vector<mnist::Image> images;
    std::vector<int> classes;
    std::vector<std::size_t> source_indices;
    mnist::LabeledSet full_set;
};

TrainingData load_training_data(const RunConfig& cfg, const std::string& data_dir) {
    TrainingData data;
    data.full_set = mnist::load_set(mnist::resolve_data_dir(data_dir), "t10k", "test");
    auto picked = mnist::select_training_examples(data.full_set, cfg.classes, cfg.data_seed);
    data.images = std::move(picked.images);
    data.classes = picked.classes;
    data.source_indices = std::move(picked.source_indices);
    return data;
}

const Elite& find_elite(const Archive& archive, const CellKey& key) {
    const auto it = archive.cells().find(key);
    if (it == archive.cells().end())
        throw std::runtime_error("archive has no elite in cell (" + cell_key_string(key) + ")");
    return it->second;
}

/// The task spec an elite was scored against.
TaskSpec task_for_elite(const RunConfig& cfg, const Elite& elite) {
    const auto specs = task_specs_for(cfg);
    const std::size_t idx = elite.task < 0 ? 0 : static_cast<std::size_t>(elite.task);
    return specs.at(idx);
}

int run_evolve(const std::string& task_arg, std::uint64_t seed, int generations, const std::string& out_dir,
               int parents, unsigned threads, std::uint64_t data_seed, int checkpoint_interval,
               int init_budget, const std::string& data_dir, double frequency, double amplitude,
               int cycles) {
    RunConfig cfg;
    cfg.classes = parse_class_list(task_arg);
    if (cfg.classes.size() == 2) {
        cfg.mode = TaskMode::TwoClass;
    } else if (cfg.classes.size() == 4) {
        cfg.mode = TaskMode::FourDigit;
    } else {
        throw CLI::ValidationError("--task", "expected 2 or 4 comma-separated classes");
    }
    cfg.generations = generations;
    cfg.parents = parents;
    cfg.master_seed = seed;
    cfg.data_seed = data_seed;
    cfg.threads = threads;
    cfg.checkpoint_interval = checkpoint_interval;
    cfg.init_budget = init_budget;
    cfg.eval.actuation.frequency = frequency;
    cfg.eval.actuation.amplitude = amplitude;
    cfg.eval.cycles_per_image = cycles;

    const TrainingData data = load_training_data(cfg, data_dir);

    fs::create_directories(out_dir);
    const std::string history_path = (fs::path(out_dir) / "history.txt").string();
    const std::string archive_path = (fs::path(out_dir) / "archive.json").string();
    const std::string config_path = (fs::path(out_dir) / "config.json").string();
    {
        std::ofstream cfg_out(config_path, std::ios::trunc);
        cfg_out << persist::encode_run_config(cfg) << '\n';
    }

    std::ofstream history(history_path, std::ios::trunc);
    if (!history) throw std::runtime_error("cannot write " + history_path);
    const HistorySink hs = [&history](const GenerationStats& s) {
        history << s.generation << ' ' << s.filled << ' ' << s.best << ' ' << s.mean << '\n';
        history.flush();
    };
    const CheckpointSink cs = [&archive_path](const Archive& a) { persist::save_checkpoint(a, archive_path); };

    const RolloutFn rollout = make_physics_rollout(data.images, data.classes, cfg.eval);
    const Archive archive = run(cfg, rollout, &hs, &cs);
    std::cout << "generations: " << archive.generation() << "\nfilled cells: " << archive.filled()
              << "\nbest fitness: " << archive.best_fitness() << "\narchive: " << archive_path << '\n';
    return 0;
}

void write_eval_report(std::ostream& out, const Elite& elite, const TaskSpec& task, const EvalResult& res) {
    const FitnessReport fit = fitness(res, task);
    out << "cell: " << cell_key_string(elite.key()) << '\n';
    out << "task: " << task.name() << '\n';
    out << "stored_fitness: " << elite.fitness << '\n';
    out << "reeval_fitness: " << fit.fitness << '\n';
    for (std::size_t i = 0; i < res.per_image.size(); ++i) {
        const ImageResult& r = res.per_image[i];
        const bool miss = std::find(fit.misclassified.begin(), fit.misclassified.end(), i) !=
                          fit.misclassified.end();
        const int predicted_group = r.dx == 0.0 ? -1 : fit.direction.group_of_sign(r.dx > 0 ? 1 : -1);
        out << "image class=" << r.class_id << " dx=" << r.dx << " predicted_group=" << predicted_group
            << " correct=" << (miss ? 0 : 1) << '\n';
    }
}

int run_eval(const std::string& archive_path, const std::string& cell_arg, bool best,
             const std::string& data_dir, const std::string& out_path) {
    const Archive archive = persist::load_checkpoint(archive_path);
    const RunConfig& cfg = archive.config();
    if (archive.cells().empty()) throw std::runtime_error("archive is empty");

    const Elite* elite = nullptr;
    if (best) {
        for (const auto& [key, e] : archive.cells())
            if (elite == nullptr || e.fitness > elite->fitness) elite = &e;
    } else {
        elite = &find_elite(archive, parse_cell_key(cell_arg));
    }
    const TrainingData data = load_training_data(cfg, data_dir);
    const Body body = develop(elite->genome);
    const TaskSpec task = task_for_elite(cfg, *elite);
    const EvalResult res = evaluate_rollout(body, data.images, data.classes, cfg.eval);

    if (out_path.empty()) {
        write_eval_report(std::cout, *elite, task, res);
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        write_eval_report(out, *elite, task, res);
    }
    return 0;
}

int run_generalize(const std::string& archive_path, const std::string& cell_arg, int random_k,
                   int images, std::uint64_t seed, const std::string& data_dir,
                   const std::string& out_path, unsigned threads, double threshold, bool per_image) {
    const Archive archive = persist::load_checkpoint(archive_path);
    const RunConfig& cfg = archive.config();
    const TrainingData data = load_training_data(cfg, data_dir);
    const mnist::LabeledSet eval_set = mnist::build_eval_set(
        data.full_set, cfg.classes, static_cast<std::size_t>(images), seed, data.source_indices);

    // Candidate elites: one named cell, or a seeded uniform sample of cells.
    std::vector<const Elite*> candidates;
    if (!cell_arg.empty()) {
        candidates.push_back(&find_elite(archive, parse_cell_key(cell_arg)));
    } else {
        std::vector<const Elite*> pool = archive.elites();
        if (pool.empty()) throw std::runtime_error("archive is empty");
        Rng rng(derive_seed(seed, 0x73656c));
        for (int i = 0; i < random_k && !pool.empty(); ++i) {
            const std::size_t pick = rng.uniform_index(pool.size());
            candidates.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }

    std::ostringstream report;
    report << "task_classes:";
    for (int c : cfg.classes) report << ' ' << c;
    report << "\nimages: " << eval_set.size() << "\nthreshold: " << threshold << "\nseed: " << seed << '\n';

    double accuracy_sum = 0.0;
    int evaluated = 0;
    for (const Elite* elite : candidates) {
        const Body body = develop(elite->genome);
        const ExploitFilterResult filter = exploit_filter(body, cfg.eval);
        if (!filter.passed) {
            report << "robot cell=" << cell_key_string(elite->key())
                   << " skipped=exploit-filter peak_speed=" << filter.peak_speed
                   << " area=[" << filter.smallest_area << ',' << filter.largest_area << "]\n";
            continue;
        }
        const TaskSpec task = task_for_elite(cfg, *elite);
        const EvalResult training = evaluate_rollout(body, data.images, data.classes, cfg.eval);
        DirectionMap calibration;
        try {
            calibration = calibrate_direction(training, task);
        } catch (const Uncalibrated&) {
            report << "robot cell=" << cell_key_string(elite->key()) << " skipped=uncalibrated\n";
            continue;
        }
        const GeneralizationReport gen =
            generalize(physics_displacement(body, cfg.eval), eval_set, task, calibration, threshold, threads);
        report << "robot cell=" << cell_key_string(elite->key()) << " fitness=" << elite->fitness
               << " accuracy=" << gen.accuracy << " correct=" << gen.correct
               << " wrong_direction=" << gen.wrong_direction << " below_threshold=" << gen.below_threshold
               << '\n';
        if (per_image) {
            for (const ImageResult& r : gen.per_image) {
                const bool moved = std::abs(r.dx) > threshold;
                const int predicted = moved ? calibration.group_of_sign(r.dx > 0 ? 1 : -1) : -1;
                const bool correct = moved && predicted == task.group_of(r.class_id);
                report << "image class=" << r.class_id << " dx=" << r.dx << " predicted=" << predicted
                       << " correct=" << (correct ? 1 : 0) << '\n';
            }
        }
        accuracy_sum += gen.accuracy;
        ++evaluated;
    }
    if (evaluated == 0) throw NoEligibleElites();
    report << "robots_evaluated: " << evaluated << '\n';
    report << "mean_accuracy: " << accuracy_sum / evaluated << '\n';

    if (out_path.empty()) {
        std::cout << report.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << report.str();
        std::cout << "report: " << out_path << "\nmean_accuracy: " << accuracy_sum / evaluated << '\n';
    }
    return 0;
}

int run_capacity(const std::string& report_path, const std::string& kind_arg, int seeds,
                 std::uint64_t seed, const std::string& data_dir, unsigned threads) {
    // The robot accuracy and task come from a generalization report.
    std::ifstream in(report_path);
    if (!in) throw std::runtime_error("cannot read " + report_path);
    std::string line;
    double robot_accuracy = -1.0;
    std::vector<int> classes;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string tag;
        row >> tag;
        if (tag == "mean_accuracy:") row >> robot_accuracy;
        if (tag == "task_classes:") {
            int c;
            while (row >> c) classes.push_back(c);
        }
    }
    in.close();
    if (robot_accuracy < 0.0) throw std::runtime_error("report has no mean_accuracy line");
    if (classes.size() != 2 && classes.size() != 4)
        throw std::runtime_error("report has no usable task_classes line");

    const baseline::NetKind kind = kind_arg == "cnn" ? baseline::NetKind::Cnn : baseline::NetKind::Mlp;
    const mnist::LabeledSet set = mnist::load_set(mnist::resolve_data_dir(data_dir), "t10k", "test");
    // Baselines learn the same data the robots saw: one image per class,
    // labeled by group; here the capacity comparison uses the binary task of
    // the first grouping for 4-class runs.
    RunConfig cfg;
    cfg.classes = classes;
    cfg.mode = classes.size() == 4 ? TaskMode::FourDigit : TaskMode::TwoClass;
    const TaskSpec task = task_specs_for(cfg).front();
    const auto picked = mnist::select_training_examples(set, classes, 7);
    std::vector<int> train_labels;
    for (int c : classes) train_labels.push_back(task.group_of(c));
    const mnist::LabeledSet eval_set = mnist::build_eval_set(set, classes, 1000, seed, picked.source_indices);
    std::vector<int> eval_labels;
    for (int l : eval_set.labels) eval_labels.push_back(task.group_of(l));

    std::vector<int> widths(45);
    for (int w = 1; w <= 45; ++w) widths[w - 1] = w;
    const auto rows = baseline::sweep(kind, picked.images, train_labels, eval_set.images, eval_labels,
                                      widths, seeds, seed, threads);
    const auto cap = baseline::capacity(rows, robot_accuracy);

    std::ostringstream out;
    out << "capacity_" << kind_arg << ": ";
    if (cap.has_value())
        out << *cap;
    else
        out << "no-match";
    out << '\n';
    std::ofstream append(report_path, std::ios::app);
    if (!append) throw std::runtime_error("cannot append to " + report_path);
    append << out.str();
    std::cout << out.str();
    return 0;
}

int run_render(const std::string& archive_path, const std::string& cell_arg, const std::string& images_arg,
               const std::string& format, const std::string& out_path, const std::string& data_dir,
               int samples_per_cycle) {
    const Archive archive = persist::load_checkpoint(archive_path);
    const RunConfig& cfg = archive.config();
    const Elite& elite = find_elite(archive, parse_cell_key(cell_arg));
    const Body body = develop(elite.genome);

    const TrainingData data = load_training_data(cfg, data_dir);
    std::vector<mnist::Image> stimuli;
    for (int cls : parse_class_list(images_arg)) {
        const auto it = std::find(data.classes.begin(), data.classes.end(), cls);
        if (it == data.classes.end())
            throw std::runtime_error("class " + std::to_string(cls) + " is not in this archive's task");
        stimuli.push_back(data.images[static_cast<std::size_t>(it - data.classes.begin())]);
    }
    const render::RolloutRecording rec = render::record_rollout(body, stimuli, cfg.eval);
    if (format == "spacetime") {
        render::write_spacetime_svg(rec, out_path);
        std::cout << "wrote " << out_path << '\n';
    } else if (format == "frames") {
        const int n = render::write_frame_svgs(rec, out_path, samples_per_cycle);
        std::cout << "wrote " << n << " frames at " << out_path << "_*.svg\n";
    } else if (format == "trajectory") {
        render::write_trajectory_text(rec, out_path);
        std::cout << "wrote " << out_path << '\n';
    } else {
        throw CLI::ValidationError("--format", "expected spacetime, frames, or trajectory");
    }
    return 0;
}

int run_inspect(const std::string& archive_path, const std::string& cell_arg) {
    const Archive archive = persist::load_checkpoint(archive_path);
    const RunConfig& cfg = archive.config();
    if (!cell_arg.empty()) {
        const Elite& elite = find_elite(archive, parse_cell_key(cell_arg));
        const Body body = develop(elite.genome);
        std::cout << "cell: " << cell_key_string(elite.key()) << "\nfitness: " << elite.fitness
                  << "\ndescriptors: muscle=" << elite.descriptors.n_muscle
                  << " sensor=" << elite.descriptors.n_sensor << " total=" << elite.descriptors.n_total
                  << "\ngeneration: " << elite.generation << "\nnodes: " << elite.genome.nodes().size()
                  << " edges: " << elite.genome.edges().size() << "\n"
                  << body.to_text();
        return 0;
    }
    std::cout << "generation: " << archive.generation() << "\nfilled: " << archive.filled()
              << "\nbest_fitness: " << archive.best_fitness() << "\nmean_fitness: " << archive.mean_fitness()
              << "\nclasses:";
    for (int c : cfg.classes) std::cout << ' ' << c;
    std::cout << '\n';
    for (const auto& [key, elite] : archive.cells()) {
        std::cout << "cell " << cell_key_string(key) << " fitness=" << elite.fitness
                  << " muscle=" << elite.descriptors.n_muscle << " sensor=" << elite.descriptors.n_sensor
                  << " total=" << elite.descriptors.n_total << " gen=" << elite.generation << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"evoxel: evolves voxel soft robots that classify digit images by walking direction"};
    app.require_subcommand(1);

    std::string data_dir;
    app.add_option("--data-dir", data_dir, "MNIST IDX directory (default: $EVOXEL_DATA_DIR or ./data)");

    // evolve
    auto* evolve = app.add_subcommand("evolve", "run MAP-Elites and write checkpoints + history");
    std::string task_arg = "0,1";
    std::uint64_t seed = 0;
    int generations = 500;
    std::string out_dir;
    int parents = 20;
    unsigned threads = default_thread_count();
    std::uint64_t data_seed = 7;
    int checkpoint_interval = 100;
    int init_budget = 500;
    double frequency = 2.0;
    double amplitude = 0.6;
    int cycles = 10;
    evolve->add_option("--task", task_arg, "comma-separated classes: 2 for two-class, 4 for four-digit");
    evolve->add_option("--seed", seed, "master seed");
    evolve->add_option("--generations", generations, "generations to run")->check(CLI::PositiveNumber);
    evolve->add_option("--out", out_dir, "output directory")->required();
    evolve->add_option("--parents", parents, "parents per generation");
    evolve->add_option("--threads", threads, "evaluation threads");
    evolve->add_option("--data-seed", data_seed, "training-example selection seed");
    evolve->add_option("--checkpoint-interval", checkpoint_interval, "generations between checkpoints");
    evolve->add_option("--init-budget", init_budget, "generation-0 genome budget");
    evolve->add_option("--frequency", frequency, "muscle cycles per second");
    evolve->add_option("--amplitude", amplitude, "muscle amplitude");
    evolve->add_option("--cycles", cycles, "actuation cycles per image");

    // eval
    auto* eval = app.add_subcommand("eval", "re-evaluate one elite on its training images");
    std::string archive_path;
    std::string cell_arg;
    bool best = false;
    std::string out_path;
    eval->add_option("--archive", archive_path, "checkpoint file")->required();
    eval->add_option("--cell", cell_arg, "cell key m,s,t[,task]");
    eval->add_flag("--best", best, "pick the highest-fitness elite");
    eval->add_option("--out", out_path, "write the report here instead of stdout");

    // generalize
    auto* gen = app.add_subcommand("generalize", "held-out accuracy of archived robots");
    std::string gen_archive;
    std::string gen_cell;
    int random_k = 10;
    int gen_images = 1000;
    std::uint64_t gen_seed = 5;
    std::string gen_out;
    unsigned gen_threads = default_thread_count();
    double threshold = 3.0;
    bool per_image = false;
    gen->add_option("--archive", gen_archive, "checkpoint file")->required();
    gen->add_option("--cell", gen_cell, "evaluate exactly this cell");
    gen->add_option("--random", random_k, "number of randomly selected elites (default 10)");
    gen->add_option("--images", gen_images, "held-out image count")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "selection + eval-set seed");
    gen->add_option("--out", gen_out, "report file");
    gen->add_option("--threads", gen_threads, "evaluation threads");
    gen->add_option("--threshold", threshold, "minimum |dx| in voxel lengths to count as moving");
    gen->add_flag("--per-image", per_image, "include per-image rows in the report");

    // capacity
    auto* cap = app.add_subcommand("capacity", "baseline sweep + capacity for a generalization report");
    std::string report_path;
    std::string kind = "mlp";
    int cap_seeds = 50;
    std::uint64_t cap_seed = 1;
    unsigned cap_threads = default_thread_count();
    cap->add_option("--report", report_path, "generalization report to read and append to")->required();
    cap->add_option("--kind", kind, "mlp or cnn")->check(CLI::IsMember({"mlp", "cnn"}));
    cap->add_option("--seeds", cap_seeds, "training runs per width");
    cap->add_option("--seed", cap_seed, "sweep master seed");
    cap->add_option("--threads", cap_threads, "training threads");

    // render
    auto* render_cmd = app.add_subcommand("render", "draw an elite as a space-time diagram or frames");
    std::string render_archive;
    std::string render_cell;
    std::string render_images = "0,1";
    std::string render_format = "spacetime";
    std::string render_out;
    int samples_per_cycle = 20;
    render_cmd->add_option("--archive", render_archive, "checkpoint file")->required();
    render_cmd->add_option("--cell", render_cell, "cell key m,s,t[,task]")->required();
    render_cmd->add_option("--images", render_images, "classes to present, in order");
    render_cmd->add_option("--format", render_format, "spacetime | frames | trajectory");
    render_cmd->add_option("--out", render_out, "output path (frames: prefix)")->required();
    render_cmd->add_option("--samples-per-cycle", samples_per_cycle, "frames per actuation cycle");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "print archive summary or one elite's body");
    std::string inspect_archive;
    std::string inspect_cell;
    inspect->add_option("--archive", inspect_archive, "checkpoint file")->required();
    inspect->add_option("--cell", inspect_cell, "cell key m,s,t[,task]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (evolve->parsed())
            return run_evolve(task_arg, seed, generations, out_dir, parents, threads, data_seed,
                              checkpoint_interval, init_budget, data_dir, frequency, amplitude, cycles);
        if (eval->parsed()) {
            if (cell_arg.empty() && !best) throw std::runtime_error("need --cell or --best");
            return run_eval(archive_path, cell_arg, best, data_dir, out_path);
        }
        if (gen->parsed())
            return run_generalize(gen_archive, gen_cell, random_k, gen_images, gen_seed, data_dir, gen_out,
                                  gen_threads, threshold, per_image);
        if (cap->parsed()) return run_capacity(report_path, kind, cap_seeds, cap_seed, data_dir, cap_threads);
        if (render_cmd->parsed())
            return run_render(render_archive, render_cell, render_images, render_format, render_out,
                              data_dir, samples_per_cycle);
        if (inspect->parsed()) return run_inspect(inspect_archive, inspect_cell);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
