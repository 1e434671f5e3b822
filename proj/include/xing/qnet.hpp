#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "xing/mdp.hpp"
#include "xing/rng.hpp"

namespace xing {

struct NetworkSpec {
    std::size_t input_dim = kUnawareDim;
    std::vector<std::size_t> hidden{32, 32};
    std::size_t output_dim = kActionCount;

    // Layer widths from input to output.
    std::vector<std::size_t> widths() const;
    std::size_t parameter_count() const;
    bool operator==(const NetworkSpec&) const = default;
};

// Fully connected layer. Weights are row-major out x in:
// w[o * in + i] connects input i to output o.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;
    std::vector<double> b;

    bool operator==(const DenseLayer&) const = default;
};

/// Parameters of a feedforward Q-network: rectifier on every hidden layer,
/// identity on the output layer.
struct NetworkParams {
    NetworkSpec spec;
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return spec.input_dim; }
    std::size_t output_dim() const { return spec.output_dim; }
    std::size_t parameter_count() const;
    bool all_finite() const;
    bool operator==(const NetworkParams&) const = default;
};

// dLoss/dparams, shape-congruent with the network it was computed for.
struct GradientBundle {
    std::vector<DenseLayer> layers;

    static GradientBundle zeros_like(const NetworkParams& net);
    bool all_finite() const;
};

using QValues = std::array<double, kActionCount>;

// Glorot-uniform weights, zero biases.
NetworkParams init_network(const NetworkSpec& spec, Rng& rng);

// Network with every weight and bias set to zero.
NetworkParams zero_network(const NetworkSpec& spec);

// Throws std::invalid_argument when x does not have input_dim entries or the
// output width is not kActionCount.
QValues forward(const NetworkParams& net, std::span<const double> x);
inline QValues forward(const NetworkParams& net, const StateVector& x) {
    return forward(net, x.features());
}

struct BackwardResult {
    double loss = 0.0;
    GradientBundle grads;
};

// Squared error (q[action] - target)^2; only the chosen output receives
// gradient. Throws std::invalid_argument on a non-finite target.
BackwardResult backward(const NetworkParams& net, std::span<const double> x,
                        std::size_t action_index, double target);

// Same as above, writing into a caller-owned bundle (overwritten, not
// accumulated). Returns the loss.
double backward_into(const NetworkParams& net, std::span<const double> x,
                     std::size_t action_index, double target, GradientBundle& grads);

// params <- params - lr * grads
void sgd_step(NetworkParams& net, const GradientBundle& grads, double lr);

// Versioned little-endian binary checkpoint; see docs/checkpoint-format.md.
void save_checkpoint(const NetworkParams& net, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace xing
