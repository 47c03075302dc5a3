#include "vreg/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "vreg/errors.hpp"

namespace vreg::net {

using json = nlohmann::json;

bool operator==(const LayerSpec& a, const LayerSpec& b) {
    return a.type == b.type && a.out_channels == b.out_channels &&
           a.kernel == b.kernel && a.units == b.units;
}

int ArchDescriptor::arity() const {
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        if (it->type == "dense") return it->units;
    }
    return 0;
}

std::string ArchDescriptor::to_json() const {
    json j;
    j["input"] = input;
    j["layers"] = json::array();
    for (const auto& l : layers) {
        json jl;
        jl["type"] = l.type;
        if (l.type == "conv") {
            jl["out_channels"] = l.out_channels;
            jl["kernel"] = l.kernel;
        } else if (l.type == "dense") {
            jl["units"] = l.units;
        }
        j["layers"].push_back(jl);
    }
    return j.dump();
}

ArchDescriptor ArchDescriptor::from_json(const std::string& text) {
    json j = json::parse(text);
    ArchDescriptor a;
    a.input = j.at("input").get<std::array<int, 4>>();
    for (const auto& jl : j.at("layers")) {
        LayerSpec l;
        l.type = jl.at("type").get<std::string>();
        if (l.type == "conv") {
            l.out_channels = jl.at("out_channels").get<int>();
            l.kernel = jl.at("kernel").get<std::array<int, 3>>();
        } else if (l.type == "dense") {
            l.units = jl.at("units").get<int>();
        }
        a.layers.push_back(l);
    }
    return a;
}

namespace {

class ConvLayer : public Layer {
  public:
    ConvLayer(int in_channels, int out_channels, std::array<int, 3> kernel)
        : cin_(in_channels), cout_(out_channels), k_(kernel) {
        w_.name = "conv.w";
        w_.w.assign(static_cast<size_t>(cout_) * cin_ * k_[0] * k_[1] * k_[2],
                    0.0f);
        w_.g.assign(w_.w.size(), 0.0);
        b_.name = "conv.b";
        b_.w.assign(cout_, 0.0f);
        b_.g.assign(cout_, 0.0);
    }

    TensorShape output_shape(const TensorShape& in) const override {
        TensorShape s = in;
        s.c = cout_;
        return s;  // same padding, stride 1
    }

    void init_weights(Rng& rng) override {
        const double a = 1.0 / std::sqrt(static_cast<double>(cin_) * k_[0] *
                                         k_[1] * k_[2]);
        for (auto& w : w_.w) w = static_cast<float>(rng.uniform(-a, a));
    }

    std::vector<ParamTensor*> params() override { return {&w_, &b_}; }

    void forward(const Tensor& in, Tensor& out, bool) override {
        in_cache_ = in;
        const auto s = in.shape;
        out = Tensor(output_shape(s));
        const int pz = k_[0] / 2, py = k_[1] / 2, px = k_[2] / 2;
        const size_t plane = static_cast<size_t>(s.z) * s.y * s.x;

        for (int b = 0; b < s.b; ++b) {
            for (int k = 0; k < cout_; ++k) {
                double* op0 = out.v.data() +
                              (static_cast<size_t>(b) * cout_ + k) * plane;
                std::fill(op0, op0 + plane, static_cast<double>(b_.w[k]));
                for (int c = 0; c < cin_; ++c) {
                    const double* ip0 = in.v.data() +
                                        (static_cast<size_t>(b) * cin_ + c) * plane;
                    for (int dz = 0; dz < k_[0]; ++dz) {
                        for (int dy = 0; dy < k_[1]; ++dy) {
                            for (int dx = 0; dx < k_[2]; ++dx) {
                                const double wv = w_.w[(((static_cast<size_t>(k) * cin_ + c) * k_[0] + dz) * k_[1] + dy) * k_[2] + dx];
                                accumulate_shifted(op0, ip0, wv, s, dz - pz,
                                                   dy - py, dx - px);
                            }
                        }
                    }
                }
            }
        }
    }

    void backward(const Tensor& grad_out, Tensor& grad_in) override {
        const auto s = in_cache_.shape;
        grad_in = Tensor(s);
        const int pz = k_[0] / 2, py = k_[1] / 2, px = k_[2] / 2;
        const size_t plane = static_cast<size_t>(s.z) * s.y * s.x;

        for (int b = 0; b < s.b; ++b) {
            for (int k = 0; k < cout_; ++k) {
                const double* gp0 = grad_out.v.data() +
                                    (static_cast<size_t>(b) * cout_ + k) * plane;
                for (size_t i = 0; i < plane; ++i) b_.g[k] += gp0[i];
                for (int c = 0; c < cin_; ++c) {
                    const double* ip0 = in_cache_.v.data() +
                                        (static_cast<size_t>(b) * cin_ + c) * plane;
                    double* dip0 = grad_in.v.data() +
                                   (static_cast<size_t>(b) * cin_ + c) * plane;
                    for (int dz = 0; dz < k_[0]; ++dz) {
                        for (int dy = 0; dy < k_[1]; ++dy) {
                            for (int dx = 0; dx < k_[2]; ++dx) {
                                const size_t wi = (((static_cast<size_t>(k) * cin_ + c) * k_[0] + dz) * k_[1] + dy) * k_[2] + dx;
                                const double wv = w_.w[wi];
                                w_.g[wi] += dot_shifted(gp0, ip0, s, dz - pz,
                                                        dy - py, dx - px);
                                scatter_shifted(dip0, gp0, wv, s, dz - pz,
                                                dy - py, dx - px);
                            }
                        }
                    }
                }
            }
        }
    }

  private:
    struct Range {
        int z0, z1, y0, y1, x0, x1;
        bool empty;
    };

    static Range valid_range(const TensorShape& s, int sz, int sy, int sx) {
        Range r;
        r.z0 = std::max(0, -sz);
        r.z1 = std::min(s.z, s.z - sz);
        r.y0 = std::max(0, -sy);
        r.y1 = std::min(s.y, s.y - sy);
        r.x0 = std::max(0, -sx);
        r.x1 = std::min(s.x, s.x - sx);
        r.empty = r.z0 >= r.z1 || r.y0 >= r.y1 || r.x0 >= r.x1;
        return r;
    }

    // out(z,y,x) += w * in(z+sz, y+sy, x+sx) over the valid window
    static void accumulate_shifted(double* out, const double* in, double w,
                                   const TensorShape& s, int sz, int sy, int sx) {
        const Range r = valid_range(s, sz, sy, sx);
        if (r.empty) return;
        const int nx = r.x1 - r.x0;
        for (int z = r.z0; z < r.z1; ++z) {
            const double* ip = in + (static_cast<size_t>(z + sz) * s.y + (r.y0 + sy)) * s.x + (r.x0 + sx);
            double* op = out + (static_cast<size_t>(z) * s.y + r.y0) * s.x + r.x0;
            for (int y = r.y0; y < r.y1; ++y) {
                for (int x = 0; x < nx; ++x) op[x] += w * ip[x];
                ip += s.x;
                op += s.x;
            }
        }
    }

    // in-gradient scatter: din(z+sz, y+sy, x+sx) += w * gout(z,y,x)
    static void scatter_shifted(double* din, const double* gout, double w,
                                const TensorShape& s, int sz, int sy, int sx) {
        const Range r = valid_range(s, sz, sy, sx);
        if (r.empty) return;
        const int nx = r.x1 - r.x0;
        for (int z = r.z0; z < r.z1; ++z) {
            double* dp = din + (static_cast<size_t>(z + sz) * s.y + (r.y0 + sy)) * s.x + (r.x0 + sx);
            const double* gp = gout + (static_cast<size_t>(z) * s.y + r.y0) * s.x + r.x0;
            for (int y = r.y0; y < r.y1; ++y) {
                for (int x = 0; x < nx; ++x) dp[x] += w * gp[x];
                dp += s.x;
                gp += s.x;
            }
        }
    }

    // sum over window of gout(z,y,x) * in(z+sz, y+sy, x+sx)
    static double dot_shifted(const double* gout, const double* in,
                              const TensorShape& s, int sz, int sy, int sx) {
        const Range r = valid_range(s, sz, sy, sx);
        if (r.empty) return 0.0;
        const int nx = r.x1 - r.x0;
        double acc = 0.0;
        for (int z = r.z0; z < r.z1; ++z) {
            const double* ip = in + (static_cast<size_t>(z + sz) * s.y + (r.y0 + sy)) * s.x + (r.x0 + sx);
            const double* gp = gout + (static_cast<size_t>(z) * s.y + r.y0) * s.x + r.x0;
            for (int y = r.y0; y < r.y1; ++y) {
                for (int x = 0; x < nx; ++x) acc += gp[x] * ip[x];
                ip += s.x;
                gp += s.x;
            }
        }
        return acc;
    }

    int cin_, cout_;
    std::array<int, 3> k_;
    ParamTensor w_, b_;
    Tensor in_cache_;
};

class PoolLayer : public Layer {
  public:
    TensorShape output_shape(const TensorShape& in) const override {
        TensorShape s = in;
        s.z = in.z > 1 ? (in.z + 1) / 2 : 1;
        s.y = (in.y + 1) / 2;
        s.x = (in.x + 1) / 2;
        return s;
    }

    void forward(const Tensor& in, Tensor& out, bool) override {
        in_shape_ = in.shape;
        out = Tensor(output_shape(in.shape));
        argmax_.assign(out.v.size(), 0);
        const auto& s = in.shape;
        const int fz = s.z > 1 ? 2 : 1;
        size_t oi = 0;
        for (int b = 0; b < s.b; ++b) {
            for (int c = 0; c < s.c; ++c) {
                const size_t base = (static_cast<size_t>(b) * s.c + c) *
                                    s.z * s.y * s.x;
                for (int z = 0; z < out.shape.z; ++z) {
                    for (int y = 0; y < out.shape.y; ++y) {
                        for (int x = 0; x < out.shape.x; ++x, ++oi) {
                            double best = -std::numeric_limits<double>::infinity();
                            size_t best_i = 0;
                            for (int dz = 0; dz < fz; ++dz) {
                                const int iz = z * fz + dz;
                                if (iz >= s.z) break;
                                for (int dy = 0; dy < 2; ++dy) {
                                    const int iy = y * 2 + dy;
                                    if (iy >= s.y) break;
                                    for (int dx = 0; dx < 2; ++dx) {
                                        const int ix = x * 2 + dx;
                                        if (ix >= s.x) break;
                                        const size_t ii = base +
                                            (static_cast<size_t>(iz) * s.y + iy) * s.x + ix;
                                        if (in.v[ii] > best) {
                                            best = in.v[ii];
                                            best_i = ii;
                                        }
                                    }
                                }
                            }
                            out.v[oi] = best;
                            argmax_[oi] = best_i;
                        }
                    }
                }
            }
        }
    }

    void backward(const Tensor& grad_out, Tensor& grad_in) override {
        grad_in = Tensor(in_shape_);
        for (size_t i = 0; i < grad_out.v.size(); ++i) {
            grad_in.v[argmax_[i]] += grad_out.v[i];
        }
    }

  private:
    TensorShape in_shape_;
    std::vector<size_t> argmax_;
};

class ReluLayer : public Layer {
  public:
    TensorShape output_shape(const TensorShape& in) const override { return in; }

    void forward(const Tensor& in, Tensor& out, bool) override {
        out = in;
        mask_.assign(in.v.size(), 0);
        for (size_t i = 0; i < in.v.size(); ++i) {
            if (in.v[i] > 0.0) {
                mask_[i] = 1;
            } else {
                out.v[i] = 0.0;
            }
        }
    }

    void backward(const Tensor& grad_out, Tensor& grad_in) override {
        grad_in = grad_out;
        for (size_t i = 0; i < grad_in.v.size(); ++i) {
            if (!mask_[i]) grad_in.v[i] = 0.0;
        }
    }

  private:
    std::vector<uint8_t> mask_;
};

class BatchNormLayer : public Layer {
  public:
    explicit BatchNormLayer(int channels) : c_(channels) {
        gamma_.name = "bn.gamma";
        gamma_.w.assign(c_, 1.0f);
        gamma_.g.assign(c_, 0.0);
        beta_.name = "bn.beta";
        beta_.w.assign(c_, 0.0f);
        beta_.g.assign(c_, 0.0);
        run_mean_.name = "bn.run_mean";
        run_mean_.w.assign(c_, 0.0f);
        run_mean_.trainable = false;
        run_var_.name = "bn.run_var";
        run_var_.w.assign(c_, 1.0f);
        run_var_.trainable = false;
    }

    TensorShape output_shape(const TensorShape& in) const override { return in; }

    std::vector<ParamTensor*> params() override {
        return {&gamma_, &beta_, &run_mean_, &run_var_};
    }

    void forward(const Tensor& in, Tensor& out, bool training) override {
        const auto& s = in.shape;
        const size_t plane = static_cast<size_t>(s.z) * s.y * s.x;
        const double n = static_cast<double>(s.b) * plane;
        out = Tensor(s);
        xhat_ = Tensor(s);
        invstd_.assign(c_, 0.0);
        training_ = training;

        for (int c = 0; c < c_; ++c) {
            double mean, var;
            if (training) {
                double sum = 0.0, sq = 0.0;
                for (int b = 0; b < s.b; ++b) {
                    const double* p = in.v.data() +
                                      (static_cast<size_t>(b) * s.c + c) * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        sum += p[i];
                        sq += p[i] * p[i];
                    }
                }
                mean = sum / n;
                var = std::max(0.0, sq / n - mean * mean);
                run_mean_.w[c] = static_cast<float>(0.9 * run_mean_.w[c] + 0.1 * mean);
                run_var_.w[c] = static_cast<float>(0.9 * run_var_.w[c] + 0.1 * var);
            } else {
                mean = run_mean_.w[c];
                var = run_var_.w[c];
            }
            const double inv = 1.0 / std::sqrt(var + 1e-5);
            invstd_[c] = inv;
            const double g = gamma_.w[c], bta = beta_.w[c];
            for (int b = 0; b < s.b; ++b) {
                const size_t off = (static_cast<size_t>(b) * s.c + c) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    const double xh = (in.v[off + i] - mean) * inv;
                    xhat_.v[off + i] = xh;
                    out.v[off + i] = g * xh + bta;
                }
            }
        }
    }

    void backward(const Tensor& grad_out, Tensor& grad_in) override {
        const auto& s = xhat_.shape;
        const size_t plane = static_cast<size_t>(s.z) * s.y * s.x;
        const double n = static_cast<double>(s.b) * plane;
        grad_in = Tensor(s);

        for (int c = 0; c < c_; ++c) {
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (int b = 0; b < s.b; ++b) {
                const size_t off = (static_cast<size_t>(b) * s.c + c) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    sum_dy += grad_out.v[off + i];
                    sum_dy_xh += grad_out.v[off + i] * xhat_.v[off + i];
                }
            }
            gamma_.g[c] += sum_dy_xh;
            beta_.g[c] += sum_dy;
            const double g_inv = gamma_.w[c] * invstd_[c];
            for (int b = 0; b < s.b; ++b) {
                const size_t off = (static_cast<size_t>(b) * s.c + c) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    if (training_) {
                        grad_in.v[off + i] = g_inv * (grad_out.v[off + i] -
                            sum_dy / n - xhat_.v[off + i] * sum_dy_xh / n);
                    } else {
                        // frozen statistics: a pure affine map
                        grad_in.v[off + i] = g_inv * grad_out.v[off + i];
                    }
                }
            }
        }
    }

  private:
    int c_;
    ParamTensor gamma_, beta_, run_mean_, run_var_;
    Tensor xhat_;
    std::vector<double> invstd_;
    bool training_ = false;
};

class DenseLayer : public Layer {
  public:
    DenseLayer(int in_features, int units) : n_(in_features), m_(units) {
        w_.name = "dense.w";
        w_.w.assign(static_cast<size_t>(m_) * n_, 0.0f);
        w_.g.assign(w_.w.size(), 0.0);
        b_.name = "dense.b";
        b_.w.assign(m_, 0.0f);
        b_.g.assign(m_, 0.0);
    }

    TensorShape output_shape(const TensorShape& in) const override {
        return {in.b, m_, 1, 1, 1};
    }

    void init_weights(Rng& rng) override {
        const double a = 1.0 / std::sqrt(static_cast<double>(n_));
        for (auto& w : w_.w) w = static_cast<float>(rng.uniform(-a, a));
    }

    std::vector<ParamTensor*> params() override { return {&w_, &b_}; }

    void forward(const Tensor& in, Tensor& out, bool) override {
        if (in.shape.per_sample() != static_cast<size_t>(n_)) {
            throw ShapeMismatchError("dense: input feature count mismatch");
        }
        in_cache_ = in;
        out = Tensor({in.shape.b, m_, 1, 1, 1});
        for (int b = 0; b < in.shape.b; ++b) {
            const double* ip = in.v.data() + static_cast<size_t>(b) * n_;
            double* op = out.v.data() + static_cast<size_t>(b) * m_;
            for (int m = 0; m < m_; ++m) {
                const float* wr = w_.w.data() + static_cast<size_t>(m) * n_;
                double acc = b_.w[m];
                for (int i = 0; i < n_; ++i) acc += static_cast<double>(wr[i]) * ip[i];
                op[m] = acc;
            }
        }
    }

    void backward(const Tensor& grad_out, Tensor& grad_in) override {
        grad_in = Tensor(in_cache_.shape);
        const int bsz = in_cache_.shape.b;
        for (int b = 0; b < bsz; ++b) {
            const double* ip = in_cache_.v.data() + static_cast<size_t>(b) * n_;
            const double* gp = grad_out.v.data() + static_cast<size_t>(b) * m_;
            double* dip = grad_in.v.data() + static_cast<size_t>(b) * n_;
            for (int m = 0; m < m_; ++m) {
                const double g = gp[m];
                b_.g[m] += g;
                double* wg = w_.g.data() + static_cast<size_t>(m) * n_;
                const float* wr = w_.w.data() + static_cast<size_t>(m) * n_;
                for (int i = 0; i < n_; ++i) {
                    wg[i] += g * ip[i];
                    dip[i] += g * static_cast<double>(wr[i]);
                }
            }
        }
    }

  private:
    int n_, m_;
    ParamTensor w_, b_;
    Tensor in_cache_;
};

}  // namespace

Network::Network(const ArchDescriptor& arch, uint64_t seed) : arch_(arch) {
    if (arch_.layers.empty() || arch_.layers.back().type != "dense") {
        throw ConfigError("Network: architecture must end with a dense layer");
    }
    TensorShape shape{1, arch_.input[0], arch_.input[1], arch_.input[2],
                      arch_.input[3]};
    for (const auto& spec : arch_.layers) {
        std::unique_ptr<Layer> layer;
        if (spec.type == "conv") {
            layer = std::make_unique<ConvLayer>(shape.c, spec.out_channels,
                                                spec.kernel);
        } else if (spec.type == "pool") {
            layer = std::make_unique<PoolLayer>();
        } else if (spec.type == "relu") {
            layer = std::make_unique<ReluLayer>();
        } else if (spec.type == "bn") {
            layer = std::make_unique<BatchNormLayer>(shape.c);
        } else if (spec.type == "dense") {
            layer = std::make_unique<DenseLayer>(
                static_cast<int>(shape.per_sample()), spec.units);
        } else {
            throw ConfigError("Network: unknown layer type '" + spec.type + "'");
        }
        shape = layer->output_shape(shape);
        layers_.push_back(std::move(layer));
    }
    Rng rng(splitmix64(seed) ^ 0x6e6574696e6974ULL);
    for (auto& l : layers_) l->init_weights(rng);
}

Tensor Network::forward(const Tensor& in, bool training) {
    const TensorShape expect{in.shape.b, arch_.input[0], arch_.input[1],
                             arch_.input[2], arch_.input[3]};
    if (!(in.shape == expect)) {
        throw ShapeMismatchError("Network::forward: input shape mismatch");
    }
    Tensor cur = in;
    Tensor next;
    for (auto& l : layers_) {
        l->forward(cur, next, training);
        cur = std::move(next);
    }
    return cur;
}

Tensor Network::backward(const Tensor& grad_out, bool need_input_grad) {
    Tensor cur = grad_out;
    Tensor prev;
    for (size_t i = layers_.size(); i-- > 0;) {
        if (i == 0 && !need_input_grad && layers_[i]->params().empty()) break;
        layers_[i]->backward(cur, prev);
        cur = std::move(prev);
    }
    return cur;
}

std::vector<double> Network::evaluate(const std::vector<float>& obs) {
    Tensor in(input_shape(1));
    if (obs.size() != in.v.size()) {
        throw ShapeMismatchError("Network::evaluate: observation size mismatch");
    }
    std::copy(obs.begin(), obs.end(), in.v.begin());
    Tensor out = forward(in, false);
    return out.v;
}

void Network::zero_grads() {
    for (auto* p : params()) {
        std::fill(p->g.begin(), p->g.end(), 0.0);
    }
}

std::vector<ParamTensor*> Network::params() {
    std::vector<ParamTensor*> out;
    for (auto& l : layers_) {
        for (auto* p : l->params()) out.push_back(p);
    }
    return out;
}

size_t Network::trainable_count() const {
    size_t n = 0;
    for (auto& l : const_cast<Network*>(this)->layers_) {
        for (auto* p : l->params()) {
            if (p->trainable) n += p->w.size();
        }
    }
    return n;
}

Network Network::clone() const {
    Network copy(arch_, 0);
    auto src = const_cast<Network*>(this)->params();
    auto dst = copy.params();
    for (size_t i = 0; i < src.size(); ++i) dst[i]->w = src[i]->w;
    return copy;
}

void RmsProp::step(const std::vector<ParamTensor*>& params, double lr) {
    std::vector<ParamTensor*> trainable;
    for (auto* p : params) {
        if (p->trainable) trainable.push_back(p);
    }
    if (cache_.empty()) {
        for (auto* p : trainable) cache_.emplace_back(p->w.size(), 0.0);
    }
    for (size_t t = 0; t < trainable.size(); ++t) {
        auto* p = trainable[t];
        auto& c = cache_[t];
        for (size_t i = 0; i < p->w.size(); ++i) {
            const double g = p->g[i];
            c[i] = rho_ * c[i] + (1.0 - rho_) * g * g;
            p->w[i] = static_cast<float>(
                static_cast<double>(p->w[i]) - lr * g / (std::sqrt(c[i]) + eps_));
        }
    }
}

ArchDescriptor desk_arch(std::array<int, 4> input, int arity, bool batch_norm) {
    const bool planar = input[1] == 1;
    const std::array<int, 3> k{planar ? 1 : 3, 3, 3};
    ArchDescriptor a;
    a.input = input;
    auto conv = [&](int ch) {
        a.layers.push_back({"conv", ch, k, 0});
        if (batch_norm) a.layers.push_back({"bn", 0, {}, 0});
        a.layers.push_back({"relu", 0, {}, 0});
    };
    conv(4);
    a.layers.push_back({"pool", 0, {}, 0});
    conv(8);
    a.layers.push_back({"pool", 0, {}, 0});
    conv(16);
    a.layers.push_back({"dense", 0, {}, 64});
    if (batch_norm) a.layers.push_back({"bn", 0, {}, 0});
    a.layers.push_back({"relu", 0, {}, 0});
    a.layers.push_back({"dense", 0, {}, arity});
    return a;
}

ArchDescriptor full_arch(std::array<int, 4> input, int arity) {
    const bool planar = input[1] == 1;
    const std::array<int, 3> k{planar ? 1 : 3, 3, 3};
    ArchDescriptor a;
    a.input = input;
    auto conv = [&](int ch) {
        a.layers.push_back({"conv", ch, k, 0});
        a.layers.push_back({"bn", 0, {}, 0});
        a.layers.push_back({"relu", 0, {}, 0});
    };
    auto dense = [&](int units) {
        a.layers.push_back({"dense", 0, {}, units});
        a.layers.push_back({"bn", 0, {}, 0});
        a.layers.push_back({"relu", 0, {}, 0});
    };
    conv(8);
    a.layers.push_back({"pool", 0, {}, 0});
    conv(32);
    a.layers.push_back({"pool", 0, {}, 0});
    conv(32);
    conv(128);
    conv(128);
    dense(512);
    dense(512);
    dense(64);
    a.layers.push_back({"dense", 0, {}, arity});
    return a;
}

namespace {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

constexpr uint32_t kPolicyVersion = 1;

}  // namespace

void save_network(const std::string& path, const Network& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_network: cannot open " + path);
    os.write("VPOL", 4);
    write_raw(os, kPolicyVersion);
    const std::string arch = net.arch().to_json();
    write_raw(os, static_cast<uint64_t>(arch.size()));
    os.write(arch.data(), static_cast<std::streamsize>(arch.size()));
    auto params = const_cast<Network&>(net).params();
    write_raw(os, static_cast<uint64_t>(params.size()));
    for (auto* p : params) {
        write_raw(os, static_cast<uint64_t>(p->w.size()));
        os.write(reinterpret_cast<const char*>(p->w.data()),
                 static_cast<std::streamsize>(p->w.size() * sizeof(float)));
    }
    if (!os) throw IoError("save_network: write failed for " + path);
}

Network load_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_network: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VPOL", 4) != 0) {
        throw IoError("load_network: bad magic in " + path);
    }
    if (read_raw<uint32_t>(is) != kPolicyVersion) {
        throw IoError("load_network: unsupported version in " + path);
    }
    const uint64_t len = read_raw<uint64_t>(is);
    std::string arch_text(len, '\0');
    is.read(arch_text.data(), static_cast<std::streamsize>(len));
    Network net(ArchDescriptor::from_json(arch_text), 0);
    auto params = net.params();
    const uint64_t count = read_raw<uint64_t>(is);
    if (count != params.size()) {
        throw IoError("load_network: tensor count mismatch in " + path);
    }
    for (auto* p : params) {
        const uint64_t n = read_raw<uint64_t>(is);
        if (n != p->w.size()) {
            throw IoError("load_network: tensor size mismatch in " + path);
        }
        is.read(reinterpret_cast<char*>(p->w.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
    }
    if (!is) throw IoError("load_network: truncated file " + path);
    return net;
}

}  // namespace vreg::net
