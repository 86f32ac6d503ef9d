#include "evoxel/baseline.hpp"

#include "evoxel/parallel.hpp"
#include "evoxel/rng.hpp"
#include "evoxel/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evoxel::baseline {

namespace {

constexpr int kInput = kGridSize * kGridSize; // 196
constexpr int kKernel = 3;
constexpr int kConvOut = kGridSize - kKernel + 1; // 12, valid convolution

struct Layout {
    // MLP: [W1 w*196 | b1 w | W2 g*w | b2 g]
    // CNN: [K  w*9   | bk w | W2 g*(144w) | b2 g]
    int w1_count = 0;
    int b1_count = 0;
    int hidden = 0; // MLP: width; CNN: flattened conv output size
    int w2_count = 0;
    int b2_count = 0;

    int w1_off() const { return 0; }
    int b1_off() const { return w1_count; }
    int w2_off() const { return w1_count + b1_count; }
    int b2_off() const { return w1_count + b1_count + w2_count; }
    int total() const { return w1_count + b1_count + w2_count + b2_count; }
};

Layout layout_for(const NetSpec& spec) {
    Layout l;
    if (spec.kind == NetKind::Mlp) {
        l.w1_count = spec.width * kInput;
        l.b1_count = spec.width;
        l.hidden = spec.width;
    } else {
        l.w1_count = spec.width * kKernel * kKernel;
        l.b1_count = spec.width;
        l.hidden = spec.width * kConvOut * kConvOut;
    }
    l.w2_count = spec.groups * l.hidden;
    l.b2_count = spec.groups;
    return l;
}

/// Hidden pre-activations for one image (pre-ReLU).
void hidden_pre(const NetSpec& spec, const Layout& l, const std::vector<double>& p, const mnist::Image& img,
                std::vector<double>& pre) {
    pre.assign(static_cast<std::size_t>(l.hidden), 0.0);
    if (spec.kind == NetKind::Mlp) {
        for (int h = 0; h < spec.width; ++h) {
            double s = p[l.b1_off() + h];
            const double* w = &p[l.w1_off() + static_cast<std::size_t>(h) * kInput];
            for (int i = 0; i < kInput; ++i) s += w[i] * img.pixels[i];
            pre[h] = s;
        }
    } else {
        for (int k = 0; k < spec.width; ++k) {
            const double* kw = &p[l.w1_off() + static_cast<std::size_t>(k) * kKernel * kKernel];
            const double bias = p[l.b1_off() + k];
            for (int i = 0; i < kConvOut; ++i) {
                for (int j = 0; j < kConvOut; ++j) {
                    double s = bias;
                    for (int u = 0; u < kKernel; ++u)
                        for (int v = 0; v < kKernel; ++v) s += kw[u * kKernel + v] * img.at(i + u, j + v);
                    pre[(static_cast<std::size_t>(k) * kConvOut + i) * kConvOut + j] = s;
                }
            }
        }
    }
}

void logits_from_hidden(const Layout& l, int groups, const std::vector<double>& p,
                        const std::vector<double>& act, std::vector<double>& z) {
    z.assign(static_cast<std::size_t>(groups), 0.0);
    for (int g = 0; g < groups; ++g) {
        double s = p[l.b2_off() + g];
        const double* w = &p[l.w2_off() + static_cast<std::size_t>(g) * l.hidden];
        for (int h = 0; h < l.hidden; ++h) s += w[h] * act[h];
        z[g] = s;
    }
}

std::vector<double> stable_softmax(const std::vector<double>& z) {
    std::vector<double> out(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += (out[i] = std::exp(z[i] - zmax));
    for (double& v : out) v /= sum;
    return out;
}

} // namespace

Network::Network(const NetSpec& spec, std::uint64_t seed) : spec_(spec) {
    if (spec.width < 1 || spec.width > 45) throw std::invalid_argument("network width must be in [1,45]");
    const Layout l = layout_for(spec_);
    params_.assign(static_cast<std::size_t>(l.total()), 0.0);
    Rng rng(derive_seed(seed, 0x6e6574));
    const auto glorot = [&](int off, int count, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < count; ++i) params_[off + i] = rng.uniform(-limit, limit);
    };
    if (spec_.kind == NetKind::Mlp) {
        glorot(l.w1_off(), l.w1_count, kInput, spec_.width);
    } else {
        glorot(l.w1_off(), l.w1_count, kKernel * kKernel, spec_.width * kKernel * kKernel);
    }
    glorot(l.w2_off(), l.w2_count, l.hidden, spec_.groups);
    // Biases start at zero.
}

std::vector<double> Network::forward(const mnist::Image& image) const {
    const Layout l = layout_for(spec_);
    std::vector<double> pre;
    hidden_pre(spec_, l, params_, image, pre);
    for (double& v : pre) v = std::max(0.0, v);
    std::vector<double> z;
    logits_from_hidden(l, spec_.groups, params_, pre, z);
    return z;
}

std::vector<double> Network::softmax(const mnist::Image& image) const { return stable_softmax(forward(image)); }

double Network::loss_and_gradient(const std::vector<mnist::Image>& images, const std::vector<int>& labels,
                                  std::vector<double>& grad) const {
    const Layout l = layout_for(spec_);
    grad.assign(params_.size(), 0.0);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(images.size());

    std::vector<double> pre;
    std::vector<double> act;
    std::vector<double> z;
    std::vector<double> dhidden(static_cast<std::size_t>(l.hidden));
    for (std::size_t n = 0; n < images.size(); ++n) {
        const mnist::Image& img = images[n];
        hidden_pre(spec_, l, params_, img, pre);
        act = pre;
        for (double& v : act) v = std::max(0.0, v);
        logits_from_hidden(l, spec_.groups, params_, act, z);
        const std::vector<double> prob = stable_softmax(z);
        loss += -std::log(std::max(prob[static_cast<std::size_t>(labels[n])], 1e-300)) * inv_n;

        // dL/dz = (softmax - onehot) / N
        std::vector<double> dz(prob);
        dz[static_cast<std::size_t>(labels[n])] -= 1.0;
        for (double& v : dz) v *= inv_n;

        for (int g = 0; g < spec_.groups; ++g) {
            grad[l.b2_off() + g] += dz[g];
            double* gw = &grad[l.w2_off() + static_cast<std::size_t>(g) * l.hidden];
            for (int h = 0; h < l.hidden; ++h) gw[h] += dz[g] * act[h];
        }
        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (int g = 0; g < spec_.groups; ++g) {
            const double* w = &params_[l.w2_off() + static_cast<std::size_t>(g) * l.hidden];
            for (int h = 0; h < l.hidden; ++h) dhidden[h] += dz[g] * w[h];
        }
        for (int h = 0; h < l.hidden; ++h)
            if (pre[h] <= 0.0) dhidden[h] = 0.0; // ReLU gate

        if (spec_.kind == NetKind::Mlp) {
            for (int h = 0; h < spec_.width; ++h) {
                grad[l.b1_off() + h] += dhidden[h];
                double* gw = &grad[l.w1_off() + static_cast<std::size_t>(h) * kInput];
                const double d = dhidden[h];
                if (d == 0.0) continue;
                for (int i = 0; i < kInput; ++i) gw[i] += d * img.pixels[i];
            }
        } else {
            for (int k = 0; k < spec_.width; ++k) {
                double* gk = &grad[l.w1_off() + static_cast<std::size_t>(k) * kKernel * kKernel];
                for (int i = 0; i < kConvOut; ++i) {
                    for (int j = 0; j < kConvOut; ++j) {
                        const double d = dhidden[(static_cast<std::size_t>(k) * kConvOut + i) * kConvOut + j];
                        if (d == 0.0) continue;
                        grad[l.b1_off() + k] += d;
                        for (int u = 0; u < kKernel; ++u)
                            for (int v = 0; v < kKernel; ++v) gk[u * kKernel + v] += d * img.at(i + u, j + v);
                    }
                }
            }
        }
    }
    return loss;
}

double Network::accuracy(const std::vector<mnist::Image>& images, const std::vector<int>& labels) const {
    if (images.empty()) return 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::vector<double> z = forward(images[i]);
        int best = 0;
        for (int g = 1; g < spec_.groups; ++g)
            if (z[g] > z[best]) best = g;
        if (best == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(images.size());
}

TrainOutcome train(const NetSpec& spec, const std::vector<mnist::Image>& train_images,
                   const std::vector<int>& train_labels, const std::vector<mnist::Image>& test_images,
                   const std::vector<int>& test_labels, std::uint64_t seed, const TrainOptions& opts) {
    Network net(spec, seed);
    std::vector<double> grad;
    std::vector<double> m(net.params().size(), 0.0);
    std::vector<double> v(net.params().size(), 0.0);

    TrainOutcome outcome;
    double best = -1.0;
    int stale = 0;
    for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        net.loss_and_gradient(train_images, train_labels, grad);
        const double b1t = 1.0 - std::pow(opts.beta1, epoch);
        const double b2t = 1.0 - std::pow(opts.beta2, epoch);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * grad[i];
            v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / b1t;
            const double vhat = v[i] / b2t;
            net.params()[i] -= opts.learning_rate * mhat / (std::sqrt(vhat) + opts.epsilon);
        }
        outcome.epochs_run = epoch;
        const double acc = net.accuracy(test_images, test_labels);
        if (acc > best) {
            best = acc;
            stale = 0;
        } else {
            ++stale;
        }
        if (stale >= opts.patience) {
            outcome.early_stopped = true;
            break;
        }
    }
    outcome.best_accuracy = std::max(0.0, best);
    return outcome;
}

std::vector<SweepRow> sweep(NetKind kind, const std::vector<mnist::Image>& train_images,
                            const std::vector<int>& train_labels, const std::vector<mnist::Image>& test_images,
                            const std::vector<int>& test_labels, const std::vector<int>& widths, int seeds,
                            std::uint64_t master_seed, unsigned threads, const TrainOptions& opts) {
    const std::size_t jobs = widths.size() * static_cast<std::size_t>(seeds);
    std::vector<double> acc(jobs, 0.0);
    parallel_for(jobs, threads, [&](std::size_t job) {
        const std::size_t wi = job / static_cast<std::size_t>(seeds);
        const std::size_t si = job % static_cast<std::size_t>(seeds);
        const NetSpec spec{kind, widths[wi], 2};
        const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(widths[wi]), si);
        acc[job] = train(spec, train_images, train_labels, test_images, test_labels, seed, opts).best_accuracy;
    });
    std::vector<SweepRow> rows;
    rows.reserve(widths.size());
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        double sum = 0.0;
        for (int s = 0; s < seeds; ++s) sum += acc[wi * seeds + s];
        const double mean = sum / seeds;
        double var = 0.0;
        for (int s = 0; s < seeds; ++s) {
            const double d = acc[wi * seeds + s] - mean;
            var += d * d;
        }
        rows.push_back({widths[wi], mean, seeds > 1 ? std::sqrt(var / (seeds - 1)) : 0.0});
    }
    return rows;
}

std::optional<double> capacity(std::vector<SweepRow> rows, double robot_accuracy) {
    if (rows.empty()) return std::nullopt;
    // Sorting first makes the result independent of row order.
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.width < b.width; });

    const bool all_equal = std::all_of(rows.begin(), rows.end(), [&](const SweepRow& r) {
        return r.mean_accuracy == rows.front().mean_accuracy;
    });
    if (all_equal) {
        // Degenerate fit: direct comparison.
        if (rows.front().mean_accuracy == robot_accuracy) return 1.0;
        return std::nullopt;
    }

    // Quadratic least squares on a centered, scaled abscissa for conditioning.
    const double center = 23.0;
    const double scale = 22.0;
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, y0 = 0, y1 = 0, y2 = 0;
    for (const SweepRow& r : rows) {
        const double t = (r.width - center) / scale;
        const double t2 = t * t;
        s0 += 1.0;
        s1 += t;
        s2 += t2;
        s3 += t2 * t;
        s4 += t2 * t2;
        y0 += r.mean_accuracy;
        y1 += r.mean_accuracy * t;
        y2 += r.mean_accuracy * t2;
    }
    // Normal equations for [c, b, a] of c + b t + a t^2, solved by Cramer.
    const double det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) + s2 * (s1 * s3 - s2 * s2);
    if (std::abs(det) < 1e-14) return std::nullopt;
    const double c = (y0 * (s2 * s4 - s3 * s3) - s1 * (y1 * s4 - s3 * y2) + s2 * (y1 * s3 - s2 * y2)) / det;
    const double b = (s0 * (y1 * s4 - y2 * s3) - y0 * (s1 * s4 - s3 * s2) + s2 * (s1 * y2 - y1 * s2)) / det;
    const double a = (s0 * (s2 * y2 - s3 * y1) - s1 * (s1 * y2 - s3 * y0) + y0 * (s1 * s3 - s2 * s2)) / det;

    // Roots of a t^2 + b t + (c - target) = 0 in width space.
    const double k = c - robot_accuracy;
    std::vector<double> roots_t;
    if (std::abs(a) < 1e-12) {
        if (std::abs(b) < 1e-15) return std::nullopt;
        roots_t.push_back(-k / b);
    } else {
        const double disc = b * b - 4.0 * a * k;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        // Numerically stable pairing.
        const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
        roots_t.push_back(q / a);
        if (q != 0.0) roots_t.push_back(k / q);
        else roots_t.push_back(0.0);
    }
    std::optional<double> best;
    for (double t : roots_t) {
        const double w = center + scale * t;
        if (w >= 1.0 - 1e-9 && w <= 45.0 + 1e-9) {
            const double clamped = std::clamp(w, 1.0, 45.0);
            if (!best || clamped < *best) best = clamped;
        }
    }
    return best;
}

} // namespace evoxel::baseline
