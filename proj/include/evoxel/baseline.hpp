#pragma once

#include "evoxel/mnist.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace evoxel::baseline {

enum class NetKind : int { Mlp = 0, Cnn = 1 };

/// Single-hidden-layer MLP (width = hidden neurons) or single-conv-layer CNN
/// (width = 3x3 kernel count), 14x14 input, one output unit per group.
struct NetSpec {
    NetKind kind = NetKind::Mlp;
    int width = 1; // in [1, 45]
    int groups = 2;
};

/// Flat-parameter network with analytic gradients. Kept deliberately small:
/// the training sets here are one image per group.
class Network {
public:
    Network(const NetSpec& spec, std::uint64_t seed);

    const NetSpec& spec() const { return spec_; }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& params() { return params_; }

    /// Logits for one 14x14 image.
    std::vector<double> forward(const mnist::Image& image) const;
    std::vector<double> softmax(const mnist::Image& image) const;

    /// Mean cross-entropy over the batch and its gradient w.r.t. all params.
    double loss_and_gradient(const std::vector<mnist::Image>& images, const std::vector<int>& labels,
                             std::vector<double>& grad) const;

    /// Fraction of images whose argmax logit equals the label (ties resolve
    /// to the lower index).
    double accuracy(const std::vector<mnist::Image>& images, const std::vector<int>& labels) const;

private:
    NetSpec spec_;
    std::vector<double> params_;
};

struct TrainOutcome {
    double best_accuracy = 0.0; // best test accuracy observed after any epoch
    int epochs_run = 0;
    bool early_stopped = false;
};

struct TrainOptions {
    int max_epochs = 50;
    int patience = 5;       // epochs without test improvement before stopping
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Full-batch Adam on cross-entropy; test accuracy measured after each epoch.
/// Early stopping on the test set mirrors the best-case baseline protocol.
TrainOutcome train(const NetSpec& spec, const std::vector<mnist::Image>& train_images,
                   const std::vector<int>& train_labels, const std::vector<mnist::Image>& test_images,
                   const std::vector<int>& test_labels, std::uint64_t seed, const TrainOptions& opts = {});

struct SweepRow {
    int width = 0;
    double mean_accuracy = 0.0;
    double stddev = 0.0;
};

/// Mean test accuracy per width, each averaged over `seeds` trainings from
/// scratch. Deterministic given master_seed, for any thread count.
std::vector<SweepRow> sweep(NetKind kind, const std::vector<mnist::Image>& train_images,
                            const std::vector<int>& train_labels, const std::vector<mnist::Image>& test_images,
                            const std::vector<int>& test_labels, const std::vector<int>& widths, int seeds,
                            std::uint64_t master_seed, unsigned threads = 1, const TrainOptions& opts = {});

/// Least-squares quadratic fit of accuracy vs width; the capacity is the
/// smallest root of fit(width) == robot_accuracy inside [1, 45]. nullopt
/// means no experimented network width matches.
std::optional<double> capacity(std::vector<SweepRow> rows, double robot_accuracy);

} // namespace evoxel::baseline
