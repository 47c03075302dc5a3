#pragma once
// Finite-difference gradient verification shared by the unit tests and the
// acceptance suite. The loss is sum over the batch and outputs of squared
// differences against fixed random targets; analytic gradients from the
// backward pass are compared against central differences.

#include <cmath>
#include <string>
#include <vector>

#include "vreg/net.hpp"
#include "vreg/rng.hpp"

namespace vreg::testutil {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
    std::string worst;  // tensor/index of the worst deviation
};

inline double loss_of(net::Network& network, const net::Tensor& in,
                      const std::vector<double>& targets, bool training) {
    net::Tensor out = network.forward(in, training);
    double l = 0.0;
    for (size_t i = 0; i < out.v.size(); ++i) {
        const double d = out.v[i] - targets[i];
        l += d * d;
    }
    return l;
}

// Checks analytic parameter gradients against central differences on
// `probes` randomly chosen weights per tensor. fd step 1e-4.
inline GradCheckResult gradcheck_params(const net::ArchDescriptor& arch,
                                        uint64_t seed, int batch, int probes) {
    net::Network network(arch, seed);
    Rng rng(splitmix64(seed) ^ 0x67636b31ULL);

    net::Tensor in(network.input_shape(batch));
    for (auto& v : in.v) v = rng.uniform(-1.0, 1.0);
    std::vector<double> targets(static_cast<size_t>(batch) * network.arity());
    for (auto& t : targets) t = rng.uniform(-1.0, 1.0);

    // analytic gradients
    net::Tensor out = network.forward(in, true);
    net::Tensor grad(out.shape);
    for (size_t i = 0; i < out.v.size(); ++i) {
        grad.v[i] = 2.0 * (out.v[i] - targets[i]);
    }
    network.zero_grads();
    network.backward(grad, false);

    GradCheckResult res;
    int tensor_idx = 0;
    for (auto* p : network.params()) {
        ++tensor_idx;
        if (!p->trainable || p->w.empty()) continue;
        for (int k = 0; k < probes; ++k) {
            const size_t i = rng.uniform_int(p->w.size());
            const float w0 = p->w[i];
            const double an = p->g[i];

            // h ladder: a kink (relu / pool argmax flip) inside the probe
            // interval contaminates the central difference; shrinking h
            // removes the artifact, while a genuine backward bug keeps the
            // mismatch at every h.
            double rel = std::numeric_limits<double>::infinity();
            for (const double h : {1e-4, 1e-6, 5e-8}) {
                p->w[i] = static_cast<float>(w0 + h);
                const double actual_hi = static_cast<double>(p->w[i]);
                const double lp = loss_of(network, in, targets, true);
                p->w[i] = static_cast<float>(w0 - h);
                const double actual_lo = static_cast<double>(p->w[i]);
                const double lm = loss_of(network, in, targets, true);
                p->w[i] = w0;
                if (actual_hi == actual_lo) continue;  // below float32 ulp

                const double fd = (lp - lm) / (actual_hi - actual_lo);
                rel = std::abs(an - fd) /
                      std::max({std::abs(an), std::abs(fd), 1e-3});
                if (rel < 1e-3) break;
            }
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = p->name + "[" + std::to_string(i) + "] t" +
                            std::to_string(tensor_idx);
            }
        }
    }
    return res;
}

// Checks the input gradient of the summed outputs (the saliency signal)
// against central differences on `probes` random input voxels.
inline GradCheckResult gradcheck_input(const net::ArchDescriptor& arch,
                                       uint64_t seed, int probes) {
    net::Network network(arch, seed);
    Rng rng(splitmix64(seed) ^ 0x67636b32ULL);

    net::Tensor in(network.input_shape(1));
    for (auto& v : in.v) v = rng.uniform(-1.0, 1.0);

    net::Tensor out = network.forward(in, false);
    net::Tensor ones(out.shape);
    std::fill(ones.v.begin(), ones.v.end(), 1.0);
    network.zero_grads();
    net::Tensor gin = network.backward(ones, true);

    auto sum_outputs = [&](const net::Tensor& x) {
        net::Tensor o = network.forward(x, false);
        double s = 0.0;
        for (double v : o.v) s += v;
        return s;
    };

    GradCheckResult res;
    for (int k = 0; k < probes; ++k) {
        const size_t i = rng.uniform_int(in.v.size());
        const double an = gin.v[i];
        double rel = std::numeric_limits<double>::infinity();
        for (const double h : {1e-4, 1e-6}) {  // same kink ladder as above
            net::Tensor probe = in;
            probe.v[i] = in.v[i] + h;
            const double sp = sum_outputs(probe);
            probe.v[i] = in.v[i] - h;
            const double sm = sum_outputs(probe);
            const double fd = (sp - sm) / (2.0 * h);
            rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
            if (rel < 1e-3) break;
        }
        ++res.checked;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst = "input[" + std::to_string(i) + "]";
        }
    }
    return res;
}

// The layer-coverage catalogue used by both test tiers.
inline std::vector<net::ArchDescriptor> gradcheck_catalogue() {
    using net::ArchDescriptor;
    using net::LayerSpec;
    std::vector<ArchDescriptor> cat;

    auto push = [&](std::array<int, 4> input, std::vector<LayerSpec> layers) {
        ArchDescriptor a;
        a.input = input;
        a.layers = std::move(layers);
        cat.push_back(a);
    };

    const std::array<int, 3> k2{1, 3, 3};
    const std::array<int, 3> k3{3, 3, 3};

    // dense stacks
    push({1, 1, 1, 6}, {{"dense", 0, {}, 4}});
    push({1, 1, 1, 8}, {{"dense", 0, {}, 8}, {"relu", 0, {}, 0}, {"dense", 0, {}, 3}});
    push({1, 1, 1, 8},
         {{"dense", 0, {}, 8}, {"bn", 0, {}, 0}, {"relu", 0, {}, 0}, {"dense", 0, {}, 3}});

    // 2-D conv paths
    push({1, 1, 8, 8}, {{"conv", 3, k2, 0}, {"dense", 0, {}, 4}});
    push({1, 1, 8, 8},
         {{"conv", 4, k2, 0}, {"relu", 0, {}, 0}, {"pool", 0, {}, 0}, {"dense", 0, {}, 6}});
    push({1, 1, 8, 8},
         {{"conv", 4, k2, 0}, {"bn", 0, {}, 0}, {"relu", 0, {}, 0},
          {"pool", 0, {}, 0}, {"conv", 6, k2, 0}, {"relu", 0, {}, 0},
          {"dense", 0, {}, 6}});
    push({2, 1, 7, 9},  // multi-channel, odd dims exercise pool edges
         {{"conv", 3, k2, 0}, {"pool", 0, {}, 0}, {"relu", 0, {}, 0},
          {"dense", 0, {}, 5}});

    // 3-D conv paths
    push({1, 4, 6, 6}, {{"conv", 2, k3, 0}, {"dense", 0, {}, 4}});
    push({1, 6, 6, 6},
         {{"conv", 3, k3, 0}, {"relu", 0, {}, 0}, {"pool", 0, {}, 0},
          {"conv", 4, k3, 0}, {"dense", 0, {}, 12}});
    push({1, 5, 5, 5},
         {{"conv", 2, k3, 0}, {"bn", 0, {}, 0}, {"relu", 0, {}, 0},
          {"pool", 0, {}, 0}, {"dense", 0, {}, 12}});

    // canned architectures at reduced input sizes
    cat.push_back(net::desk_arch({1, 1, 16, 16}, 6, false));
    cat.push_back(net::desk_arch({1, 1, 16, 16}, 6, true));
    cat.push_back(net::desk_arch({1, 8, 8, 8}, 12, false));
    cat.push_back(net::full_arch({1, 1, 12, 12}, 6));
    return cat;
}

}  // namespace vreg::testutil
