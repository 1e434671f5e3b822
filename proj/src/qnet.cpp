#include "xing/qnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace xing {

namespace {

constexpr char kMagic[8] = {'X', 'I', 'N', 'G', 'Q', 'N', 'E', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

bool finite_layers(const std::vector<DenseLayer>& layers) {
    for (const auto& l : layers) {
        for (double v : l.w) if (!std::isfinite(v)) return false;
        for (double v : l.b) if (!std::isfinite(v)) return false;
    }
    return true;
}

// Per-thread activation buffers, reused across calls.
struct Scratch {
    std::vector<std::vector<double>> act;  // act[0] = input, act[l + 1] = output of layer l
    std::vector<double> delta;
    std::vector<double> delta_prev;
};

Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

void run_forward(const NetworkParams& net, std::span<const double> x, Scratch& s) {
    if (x.size() != net.spec.input_dim) {
        throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                    " features, network expects " +
                                    std::to_string(net.spec.input_dim));
    }
    if (net.spec.output_dim != kActionCount) {
        throw std::invalid_argument("forward: network output width must equal the action count");
    }
    const std::size_t n_layers = net.layers.size();
    s.act.resize(n_layers + 1);
    s.act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = net.layers[l];
        const std::vector<double>& in = s.act[l];
        std::vector<double>& out = s.act[l + 1];
        out.resize(layer.out);
        const bool hidden = l + 1 < n_layers;
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* row = layer.w.data() + o * layer.in;
            double z = layer.b[o];
            for (std::size_t i = 0; i < layer.in; ++i) z += row[i] * in[i];
            out[o] = hidden ? std::max(z, 0.0) : z;
        }
    }
}

template <typename T>
void write_le(std::ofstream& os, T value) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return value;
}

}  // namespace

std::vector<std::size_t> NetworkSpec::widths() const {
    std::vector<std::size_t> w;
    w.push_back(input_dim);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(output_dim);
    return w;
}

std::size_t NetworkSpec::parameter_count() const {
    const auto w = widths();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) n += w[l] * w[l + 1] + w[l + 1];
    return n;
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

bool NetworkParams::all_finite() const { return finite_layers(layers); }

GradientBundle GradientBundle::zeros_like(const NetworkParams& net) {
    GradientBundle g;
    g.layers.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        g.layers.push_back(DenseLayer{l.in, l.out, std::vector<double>(l.w.size(), 0.0),
                                      std::vector<double>(l.b.size(), 0.0)});
    }
    return g;
}

bool GradientBundle::all_finite() const { return finite_layers(layers); }

NetworkParams zero_network(const NetworkSpec& spec) {
    const auto w = spec.widths();
    for (auto d : w) {
        if (d == 0) throw std::invalid_argument("network spec: every width must be positive");
    }
    NetworkParams net;
    net.spec = spec;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        net.layers.push_back(DenseLayer{w[l], w[l + 1], std::vector<double>(w[l] * w[l + 1], 0.0),
                                        std::vector<double>(w[l + 1], 0.0)});
    }
    return net;
}

NetworkParams init_network(const NetworkSpec& spec, Rng& rng) {
    NetworkParams net = zero_network(spec);
    for (auto& layer : net.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        for (double& v : layer.w) v = uniform(rng, -limit, limit);
    }
    return net;
}

QValues forward(const NetworkParams& net, std::span<const double> x) {
    Scratch& s = scratch();
    run_forward(net, x, s);
    const auto& out = s.act.back();
    return QValues{out[0], out[1], out[2]};
}

double backward_into(const NetworkParams& net, std::span<const double> x,
                     std::size_t action_index, double target, GradientBundle& grads) {
    if (!std::isfinite(target)) throw std::invalid_argument("backward: target is not finite");
    if (action_index >= net.spec.output_dim) {
        throw std::invalid_argument("backward: action index out of range");
    }
    Scratch& s = scratch();
    run_forward(net, x, s);
    if (grads.layers.size() != net.layers.size()) grads = GradientBundle::zeros_like(net);

    const double err = s.act.back()[action_index] - target;
    const std::size_t n_layers = net.layers.size();
    s.delta.assign(net.spec.output_dim, 0.0);
    s.delta[action_index] = 2.0 * err;

    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        DenseLayer& g = grads.layers[l];
        const std::vector<double>& in = s.act[l];
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = s.delta[o];
            double* grow = g.w.data() + o * layer.in;
            g.b[o] = d;
            if (d == 0.0) {
                std::fill(grow, grow + layer.in, 0.0);
            } else {
                for (std::size_t i = 0; i < layer.in; ++i) grow[i] = d * in[i];
            }
        }
        if (l == 0) break;
        s.delta_prev.assign(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = s.delta[o];
            if (d == 0.0) continue;
            const double* row = layer.w.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) s.delta_prev[i] += row[i] * d;
        }
        // Rectifier derivative; the stored activation is positive iff its
        // pre-activation was.
        for (std::size_t i = 0; i < layer.in; ++i) {
            if (in[i] <= 0.0) s.delta_prev[i] = 0.0;
        }
        std::swap(s.delta, s.delta_prev);
    }
    return err * err;
}

BackwardResult backward(const NetworkParams& net, std::span<const double> x,
                        std::size_t action_index, double target) {
    BackwardResult r;
    r.grads = GradientBundle::zeros_like(net);
    r.loss = backward_into(net, x, action_index, target, r.grads);
    return r;
}

void sgd_step(NetworkParams& net, const GradientBundle& grads, double lr) {
    if (grads.layers.size() != net.layers.size()) {
        throw std::invalid_argument("sgd_step: gradient bundle does not match network");
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        DenseLayer& p = net.layers[l];
        const DenseLayer& g = grads.layers[l];
        if (p.w.size() != g.w.size() || p.b.size() != g.b.size()) {
            throw std::invalid_argument("sgd_step: gradient bundle does not match network");
        }
        for (std::size_t k = 0; k < p.w.size(); ++k) p.w[k] -= lr * g.w[k];
        for (std::size_t k = 0; k < p.b.size(); ++k) p.b[k] -= lr * g.b[k];
    }
}

void save_checkpoint(const NetworkParams& net, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
    os.write(kMagic, sizeof kMagic);
    write_le<std::uint32_t>(os, kCheckpointVersion);
    const auto widths = net.spec.widths();
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(widths.size()));
    for (auto w : widths) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(w));
    for (const auto& layer : net.layers) {
        for (double v : layer.w) write_le<double>(os, v);
        for (double v : layer.b) write_le<double>(os, v);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
    char magic[sizeof kMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path.string());
    }
    const auto version = read_le<std::uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto n_widths = read_le<std::uint32_t>(is);
    if (n_widths < 2 || n_widths > 64) throw std::runtime_error("checkpoint: bad layer count");
    std::vector<std::size_t> widths(n_widths);
    for (auto& w : widths) w = read_le<std::uint32_t>(is);

    NetworkSpec spec;
    spec.input_dim = widths.front();
    spec.output_dim = widths.back();
    spec.hidden.assign(widths.begin() + 1, widths.end() - 1);
    NetworkParams net = zero_network(spec);
    for (auto& layer : net.layers) {
        for (double& v : layer.w) v = read_le<double>(is);
        for (double& v : layer.b) v = read_le<double>(is);
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("checkpoint: trailing bytes in " + path.string());
    }
    return net;
}

}  // namespace xing
