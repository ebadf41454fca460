#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "jigsaw/common.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/prng.hpp"

namespace jigsaw {

/// Fully connected feed-forward classifier: ReLU hidden layers, softmax
/// output, double precision throughout. The default shape is the edge-pair
/// classifier (336-100-100-100-2); other shapes are allowed so small nets can
/// be used in gradient tests.
class Network {
  public:
    explicit Network(std::vector<int> layer_sizes = {336, 100, 100, 100, 2})
        : sizes_(std::move(layer_sizes)) {
        if (sizes_.size() < 2) throw std::invalid_argument("Network: need at least two layer sizes");
        for (int s : sizes_) {
            if (s <= 0) throw std::invalid_argument("Network: layer sizes must be positive");
        }
        weights_.resize(layer_count());
        biases_.resize(layer_count());
        for (int l = 0; l < layer_count(); ++l) {
            weights_[l].assign(static_cast<std::size_t>(out_dim(l)) * in_dim(l), 0.0);
            biases_[l].assign(out_dim(l), 0.0);
        }
    }

    /// He-style initialization: N(0, sqrt(2 / fan_in)) weights, zero biases.
    static Network random(std::vector<int> layer_sizes, std::uint64_t seed) {
        Network net(std::move(layer_sizes));
        Prng rng(seed);
        for (int l = 0; l < net.layer_count(); ++l) {
            const double scale = std::sqrt(2.0 / net.in_dim(l));
            for (auto& w : net.weights_[l]) w = rng.normal() * scale;
        }
        return net;
    }

    int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
    int in_dim(int layer) const { return sizes_[layer]; }
    int out_dim(int layer) const { return sizes_[layer + 1]; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    const std::vector<int>& layer_sizes() const { return sizes_; }

    std::vector<double>& weights(int layer) { return weights_[layer]; }
    const std::vector<double>& weights(int layer) const { return weights_[layer]; }
    std::vector<double>& biases(int layer) { return biases_[layer]; }
    const std::vector<double>& biases(int layer) const { return biases_[layer]; }

    /// Softmax class probabilities for one input. Deterministic and pure.
    std::vector<double> forward(std::span<const double> input) const {
        if (static_cast<int>(input.size()) != input_size()) {
            throw std::invalid_argument("forward: wrong input length");
        }
        std::vector<double> cur(input.begin(), input.end());
        std::vector<double> next;
        for (int l = 0; l < layer_count(); ++l) {
            affine(l, cur, next);
            if (l + 1 < layer_count()) {
                for (auto& v : next) v = std::max(0.0, v);
            }
            cur.swap(next);
        }
        softmax_inplace(cur);
        return cur;
    }

    bool operator==(const Network& other) const {
        return sizes_ == other.sizes_ && weights_ == other.weights_ && biases_ == other.biases_;
    }

  private:
    void affine(int l, const std::vector<double>& x, std::vector<double>& out) const {
        const int in = in_dim(l), on = out_dim(l);
        out.assign(on, 0.0);
        const double* w = weights_[l].data();
        for (int o = 0; o < on; ++o) {
            double acc = biases_[l][o];
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * x[i];
            out[o] = acc;
        }
    }

    static void softmax_inplace(std::vector<double>& z) {
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (auto& v : z) {
            v = std::exp(v - m);
            sum += v;
        }
        for (auto& v : z) v /= sum;
    }

    std::vector<int> sizes_;
    std::vector<std::vector<double>> weights_;  // [layer][out * in_dim + in]
    std::vector<std::vector<double>> biases_;   // [layer][out]

    friend struct NetworkGradients;
};

/// Per-parameter gradient buffers matching a network's layout.
struct NetworkGradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    explicit NetworkGradients(const Network& net) {
        weights.resize(net.layer_count());
        biases.resize(net.layer_count());
        for (int l = 0; l < net.layer_count(); ++l) {
            weights[l].assign(net.weights(l).size(), 0.0);
            biases[l].assign(net.biases(l).size(), 0.0);
        }
    }

    void zero() {
        for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
        for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
    }
};

namespace detail {

// Forward with stored activations, then backprop of the NLL loss. Returns the
// per-sample loss and accumulates gradients. `scratch` holds per-layer
// activations to avoid reallocation in training loops.
struct BackpropScratch {
    std::vector<std::vector<double>> act;    // act[0] = input, act[l+1] = post-activation
    std::vector<std::vector<double>> delta;  // dL/dz per layer
};

inline double backprop_sample(const Network& net, std::span<const double> input, int label,
                              NetworkGradients& grads, BackpropScratch& s) {
    const int layers = net.layer_count();
    s.act.resize(layers + 1);
    s.delta.resize(layers);
    s.act[0].assign(input.begin(), input.end());

    for (int l = 0; l < layers; ++l) {
        const int in = net.in_dim(l), on = net.out_dim(l);
        s.act[l + 1].assign(on, 0.0);
        const double* w = net.weights(l).data();
        for (int o = 0; o < on; ++o) {
            double acc = net.biases(l)[o];
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * s.act[l][i];
            s.act[l + 1][o] = (l + 1 < layers) ? std::max(0.0, acc) : acc;
        }
    }

    // Stable log-softmax loss and dL/dz for the output layer.
    auto& logits = s.act[layers];
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    const double log_sum = m + std::log(sum);
    const double loss = log_sum - logits[label];

    auto& out_delta = s.delta[layers - 1];
    out_delta.assign(logits.size(), 0.0);
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out_delta[c] = std::exp(logits[c] - log_sum) - (static_cast<int>(c) == label ? 1.0 : 0.0);
    }

    for (int l = layers - 1; l >= 0; --l) {
        const int in = net.in_dim(l), on = net.out_dim(l);
        const auto& dz = s.delta[l];
        double* gw = grads.weights[l].data();
        for (int o = 0; o < on; ++o) {
            const double d = dz[o];
            grads.biases[l][o] += d;
            double* row = gw + static_cast<std::size_t>(o) * in;
            const double* a = s.act[l].data();
            for (int i = 0; i < in; ++i) row[i] += d * a[i];
        }
        if (l > 0) {
            auto& dprev = s.delta[l - 1];
            dprev.assign(in, 0.0);
            const double* w = net.weights(l).data();
            for (int o = 0; o < on; ++o) {
                const double d = dz[o];
                const double* row = w + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) dprev[i] += d * row[i];
            }
            // ReLU gate: the stored activation is max(0, z), so z > 0 iff act > 0
            for (int i = 0; i < in; ++i) {
                if (s.act[l][i] <= 0.0) dprev[i] = 0.0;
            }
        }
    }
    return loss;
}

}  // namespace detail

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 128;
    int epochs = 100;
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = -1.0;  // negative when no validation set was given
};

using TrainLog = std::vector<EpochStats>;

/// Mean NLL loss and accuracy of the network over a dataset.
inline std::pair<double, double> evaluate_dataset(const Network& net, const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("evaluate_dataset: empty dataset");
    double loss = 0.0;
    std::size_t correct = 0;
    std::vector<double> input(net.input_size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float* f = ds.sample(i);
        for (int j = 0; j < net.input_size(); ++j) input[j] = f[j];
        const auto probs = net.forward(input);
        const int pred = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        correct += (pred == ds.labels[i]);
        loss += -std::log(std::max(probs[ds.labels[i]], 1e-300));
    }
    return {loss / static_cast<double>(ds.size()),
            static_cast<double>(correct) / static_cast<double>(ds.size())};
}

/// Plain SGD (no momentum) on the negative log likelihood of the softmax
/// output. Samples are shuffled every epoch with the seeded generator. The
/// log records loss and accuracy accumulated during each pass; validation
/// accuracy is evaluated at epoch end when `val` is given.
inline TrainLog train(Network& net, const Dataset& ds, const TrainConfig& cfg,
                      const Dataset* val = nullptr) {
    if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("train: bad config");
    if (ds.feature_len != net.input_size()) throw std::invalid_argument("train: feature length mismatch");

    Prng rng(cfg.seed);
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    NetworkGradients grads(net);
    detail::BackpropScratch scratch;
    std::vector<double> input(net.input_size());
    TrainLog log;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            grads.zero();
            for (std::size_t idx = start; idx < stop; ++idx) {
                const std::size_t i = order[idx];
                const float* f = ds.sample(i);
                for (int j = 0; j < net.input_size(); ++j) input[j] = f[j];
                epoch_loss += detail::backprop_sample(net, input, ds.labels[i], grads, scratch);
                const auto& logits = scratch.act.back();
                const int pred =
                    static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
                correct += (pred == ds.labels[i]);
            }
            const double step = cfg.learning_rate / static_cast<double>(stop - start);
            for (int l = 0; l < net.layer_count(); ++l) {
                auto& w = net.weights(l);
                const auto& gw = grads.weights[l];
                for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * gw[j];
                auto& b = net.biases(l);
                const auto& gb = grads.biases[l];
                for (std::size_t j = 0; j < b.size(); ++j) b[j] -= step * gb[j];
            }
        }

        EpochStats st;
        st.epoch = epoch;
        st.loss = epoch_loss / static_cast<double>(ds.size());
        st.train_accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
        if (val && val->size() > 0) st.val_accuracy = evaluate_dataset(net, *val).second;
        log.push_back(st);
    }
    return log;
}

namespace detail {

// Finite-difference side of the gradient check. Accumulates in long double:
// the check subtracts two nearly equal losses, so plain double rounding noise
// of ~1e-16/epsilon would swamp small gradients.
inline long double forward_loss_extended(const Network& net, std::span<const double> input,
                                         int label) {
    std::vector<long double> cur(input.begin(), input.end());
    std::vector<long double> next;
    const int layers = net.layer_count();
    for (int l = 0; l < layers; ++l) {
        const int in = net.in_dim(l), on = net.out_dim(l);
        next.assign(on, 0.0L);
        const double* w = net.weights(l).data();
        for (int o = 0; o < on; ++o) {
            long double acc = net.biases(l)[o];
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += static_cast<long double>(row[i]) * cur[i];
            next[o] = (l + 1 < layers) ? std::max(0.0L, acc) : acc;
        }
        cur.swap(next);
    }
    const long double m = *std::max_element(cur.begin(), cur.end());
    long double sum = 0.0L;
    for (long double z : cur) sum += std::exp(z - m);
    return m + std::log(sum) - cur[label];
}

}  // namespace detail

/// Backpropagated gradients vs. central finite differences of the single-sample
/// loss, over every weight and bias. Returns the maximum relative error, with
/// an absolute fallback when both magnitudes are below 1e-8.
inline double gradient_check(const Network& net, std::span<const double> input, int label,
                             double epsilon = 1e-5) {
    if (epsilon <= 0.0) throw std::invalid_argument("gradient_check: epsilon must be positive");
    NetworkGradients grads(net);
    detail::BackpropScratch scratch;
    detail::backprop_sample(net, input, label, grads, scratch);

    Network probe = net;
    auto relative_error = [](double analytic, double numeric) {
        const double denom = std::max(std::fabs(analytic), std::fabs(numeric));
        if (denom < 1e-8) return std::fabs(analytic - numeric);
        return std::fabs(analytic - numeric) / denom;
    };

    double max_err = 0.0;
    for (int l = 0; l < net.layer_count(); ++l) {
        for (int part = 0; part < 2; ++part) {
            auto& params = part == 0 ? probe.weights(l) : probe.biases(l);
            const auto& analytic = part == 0 ? grads.weights[l] : grads.biases[l];
            for (std::size_t j = 0; j < params.size(); ++j) {
                const double saved = params[j];
                params[j] = saved + epsilon;
                const long double up = detail::forward_loss_extended(probe, input, label);
                params[j] = saved - epsilon;
                const long double down = detail::forward_loss_extended(probe, input, label);
                params[j] = saved;
                const double numeric =
                    static_cast<double>((up - down) / (2.0L * static_cast<long double>(epsilon)));
                max_err = std::max(max_err, relative_error(analytic[j], numeric));
            }
        }
    }
    return max_err;
}

// Weights file: magic "JNET", u32 version, u32 layer count, per layer
// (u32 in, u32 out), then per layer row-major f64 weights followed by f64
// biases. Round-trips bit-exactly.
inline void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_network: cannot write " + path);
    out.write("JNET", 4);
    const std::uint32_t version = 1;
    const std::uint32_t layers = static_cast<std::uint32_t>(net.layer_count());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&layers), sizeof(layers));
    for (int l = 0; l < net.layer_count(); ++l) {
        const std::uint32_t in = static_cast<std::uint32_t>(net.in_dim(l));
        const std::uint32_t on = static_cast<std::uint32_t>(net.out_dim(l));
        out.write(reinterpret_cast<const char*>(&in), sizeof(in));
        out.write(reinterpret_cast<const char*>(&on), sizeof(on));
    }
    for (int l = 0; l < net.layer_count(); ++l) {
        out.write(reinterpret_cast<const char*>(net.weights(l).data()),
                  static_cast<std::streamsize>(net.weights(l).size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(net.biases(l).data()),
                  static_cast<std::streamsize>(net.biases(l).size() * sizeof(double)));
    }
    if (!out) throw FormatError("save_network: write failed for " + path);
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_network: cannot open " + path);
    char magic[4];
    std::uint32_t version = 0, layers = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&layers), sizeof(layers));
    if (!in || std::string(magic, 4) != "JNET") throw FormatError(path + ": not a weights file");
    if (version != 1) throw FormatError(path + ": unsupported weights version");
    if (layers == 0 || layers > 64) throw FormatError(path + ": implausible layer count");

    std::vector<int> sizes;
    for (std::uint32_t l = 0; l < layers; ++l) {
        std::uint32_t ind = 0, ond = 0;
        in.read(reinterpret_cast<char*>(&ind), sizeof(ind));
        in.read(reinterpret_cast<char*>(&ond), sizeof(ond));
        if (!in || ind == 0 || ond == 0) throw FormatError(path + ": corrupt layer shapes");
        if (l == 0) {
            sizes.push_back(static_cast<int>(ind));
        } else if (sizes.back() != static_cast<int>(ind)) {
            throw FormatError(path + ": layer shapes do not chain");
        }
        sizes.push_back(static_cast<int>(ond));
    }
    Network net(sizes);
    for (int l = 0; l < net.layer_count(); ++l) {
        in.read(reinterpret_cast<char*>(net.weights(l).data()),
                static_cast<std::streamsize>(net.weights(l).size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(net.biases(l).data()),
                static_cast<std::streamsize>(net.biases(l).size() * sizeof(double)));
        if (!in) throw FormatError(path + ": truncated weights file");
    }
    return net;
}

/// The edge-pair classifier must take 336 inputs and emit 2 classes.
inline void require_classifier_shape(const Network& net) {
    if (net.input_size() != kFeatureLength || net.output_size() != 2) {
        throw ShapeMismatchError("network shape mismatch: expected 336 inputs and 2 outputs, got " +
                                 std::to_string(net.input_size()) + " inputs and " +
                                 std::to_string(net.output_size()) + " outputs");
    }
}

/// Training log as CSV (epoch, loss, train_acc, val_acc).
inline void save_train_log_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_train_log_csv: cannot write " + path);
    out << "epoch,loss,train_acc,val_acc\n";
    out.precision(10);
    for (const auto& e : log) {
        out << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ',';
        if (e.val_accuracy >= 0.0) out << e.val_accuracy;
        out << '\n';
    }
}

}  // namespace jigsaw
