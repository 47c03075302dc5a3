#pragma once
// A small convolutional action-value network with explicit forward and
// backward passes. No autodiff framework: each layer implements its own
// gradients, which are verified against finite differences in the tests.
//
// Weights are stored as float32 (the on-disk format) while all arithmetic
// runs in double, so serialization round-trips bit-exactly and gradient
// checks are not limited by storage precision.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vreg/rng.hpp"

namespace vreg::net {

struct TensorShape {
    int b = 1, c = 1, z = 1, y = 1, x = 1;
    size_t count() const {
        return static_cast<size_t>(b) * c * z * y * x;
    }
    size_t per_sample() const { return static_cast<size_t>(c) * z * y * x; }
    bool operator==(const TensorShape&) const = default;
};

struct Tensor {
    TensorShape shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(TensorShape s) : shape(s), v(s.count(), 0.0) {}
    double& at(int b, int c, int z, int y, int x) {
        return v[((((static_cast<size_t>(b) * shape.c + c) * shape.z + z) *
                       shape.y + y) * shape.x + x)];
    }
};

struct ParamTensor {
    std::string name;
    std::vector<float> w;
    std::vector<double> g;  // gradient accumulator, trainable tensors only
    bool trainable = true;
};

struct LayerSpec {
    std::string type;                 // conv | pool | relu | bn | dense
    int out_channels = 0;             // conv
    std::array<int, 3> kernel{0, 0, 0};  // conv, (kz, ky, kx)
    int units = 0;                    // dense
};

struct ArchDescriptor {
    std::array<int, 4> input{1, 1, 32, 32};  // (c, z, y, x)
    std::vector<LayerSpec> layers;           // last layer must be dense

    int arity() const;
    std::string to_json() const;
    static ArchDescriptor from_json(const std::string& text);
    bool operator==(const ArchDescriptor&) const = default;
};

bool operator==(const LayerSpec&, const LayerSpec&);

class Layer {
  public:
    virtual ~Layer() = default;
    virtual TensorShape output_shape(const TensorShape& in) const = 0;
    virtual void forward(const Tensor& in, Tensor& out, bool training) = 0;
    // Consumes the gradient w.r.t. the output, accumulates parameter
    // gradients, and produces the gradient w.r.t. the input. Uses state
    // cached by the preceding forward call.
    virtual void backward(const Tensor& grad_out, Tensor& grad_in) = 0;
    virtual std::vector<ParamTensor*> params() { return {}; }
    virtual void init_weights(Rng&) {}
};

class Network {
  public:
    Network(const ArchDescriptor& arch, uint64_t seed);

    const ArchDescriptor& arch() const { return arch_; }
    int arity() const { return arch_.arity(); }
    TensorShape input_shape(int batch = 1) const {
        return {batch, arch_.input[0], arch_.input[1], arch_.input[2],
                arch_.input[3]};
    }

    // Batch forward. Input shape must match the descriptor (any batch).
    // Not thread-safe: forward/backward share per-layer caches.
    Tensor forward(const Tensor& in, bool training);
    // Backward from dL/doutput. Returns dL/dinput when requested.
    Tensor backward(const Tensor& grad_out, bool need_input_grad);

    // Single observation in, action values out (inference mode).
    std::vector<double> evaluate(const std::vector<float>& obs);

    void zero_grads();
    std::vector<ParamTensor*> params();  // declaration order, stable
    size_t trainable_count() const;

    Network clone() const;

  private:
    ArchDescriptor arch_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Tensor> activations_;  // forward cache, one per layer output
    Tensor input_cache_;
};

// RMS-propagation adaptive update without momentum.
class RmsProp {
  public:
    explicit RmsProp(double rho = 0.9, double eps = 1e-8)
        : rho_(rho), eps_(eps) {}
    void step(const std::vector<ParamTensor*>& params, double lr);

  private:
    double rho_, eps_;
    std::vector<std::vector<double>> cache_;
};

// Canned architectures. Desk scale keeps the conv/pool/fc structure of the
// full network at a size that trains in minutes on a CPU.
ArchDescriptor desk_arch(std::array<int, 4> input_czyx, int arity,
                         bool batch_norm = false);
ArchDescriptor full_arch(std::array<int, 4> input_czyx, int arity);

// Params file: magic "VPOL", version u32, descriptor JSON, then each
// parameter tensor as raw little-endian float32 in declaration order.
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace vreg::net
