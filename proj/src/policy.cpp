#include "vreg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vreg/errors.hpp"
#include "vreg/log.hpp"

namespace vreg::policy {

namespace {

// Stack a batch of samples into one (B, 1, z, y, x) tensor.
net::Tensor stack_batch(const std::vector<const TrainingSample*>& batch,
                        const net::TensorShape& input_shape) {
    net::TensorShape s = input_shape;
    s.b = static_cast<int>(batch.size());
    net::Tensor t(s);
    const size_t per = s.per_sample();
    for (size_t k = 0; k < batch.size(); ++k) {
        if (batch[k]->obs.size() != per) {
            throw ShapeMismatchError("training sample does not match network input");
        }
        std::copy(batch[k]->obs.begin(), batch[k]->obs.end(),
                  t.v.begin() + k * per);
    }
    return t;
}

struct BatchLoss {
    double value = 0.0;
    net::Tensor grad;  // dL/doutput
};

BatchLoss forward_loss(net::Network& network, const net::Tensor& in,
                       const std::vector<const TrainingSample*>& batch,
                       bool training) {
    net::Tensor out = network.forward(in, training);
    const int arity = network.arity();
    BatchLoss bl;
    bl.grad = net::Tensor(out.shape);
    for (size_t k = 0; k < batch.size(); ++k) {
        if (static_cast<int>(batch[k]->targets.size()) != arity) {
            throw ShapeMismatchError("target vector arity mismatch");
        }
        for (int i = 0; i < arity; ++i) {
            const double d = out.v[k * arity + i] - batch[k]->targets[i];
            bl.value += d * d;
            bl.grad.v[k * arity + i] = 2.0 * d;
        }
    }
    return bl;
}

}  // namespace

double loss(const std::vector<TrainingSample>& batch, net::Network& network) {
    if (batch.empty()) throw ConfigError("loss: empty batch");
    std::vector<const TrainingSample*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    net::Tensor in = stack_batch(ptrs, network.input_shape());
    return forward_loss(network, in, ptrs, false).value;
}

net::Network train_dsl(const SampleSource& data, const net::ArchDescriptor& arch,
                       const TrainConfig& cfg, std::vector<LossRecord>* curve,
                       const std::vector<long>& checkpoint_steps,
                       const CheckpointFn& on_checkpoint) {
    if (data.size() == 0) throw ConfigError("train_dsl: empty dataset");
    if (cfg.batch_size < 1) throw ConfigError("train_dsl: batch_size must be >= 1");

    net::Network network(arch, cfg.seed);
    net::RmsProp opt(cfg.rmsprop_rho);
    Rng rng(splitmix64(cfg.seed) ^ 0x64736c5f6f726472ULL);

    std::vector<TrainingSample> holder(cfg.batch_size);
    auto next_checkpoint = checkpoint_steps.begin();

    for (long step = 0; step < cfg.total_steps; ++step) {
        const double lr = cfg.learning_rate *
                          std::pow(cfg.lr_decay,
                                   static_cast<double>(step / cfg.lr_decay_every));
        std::vector<const TrainingSample*> batch;
        for (int k = 0; k < cfg.batch_size; ++k) {
            holder[k] = data.get(rng.uniform_int(data.size()));
            batch.push_back(&holder[k]);
        }
        net::Tensor in = stack_batch(batch, network.input_shape());
        BatchLoss bl = forward_loss(network, in, batch, true);
        if (!std::isfinite(bl.value)) {
            throw NonFiniteLossError("train_dsl: non-finite loss at step " +
                                         std::to_string(step),
                                     step);
        }
        network.zero_grads();
        network.backward(bl.grad, false);
        opt.step(network.params(), lr);

        if (curve) curve->push_back({step, bl.value, lr});
        while (next_checkpoint != checkpoint_steps.end() &&
               *next_checkpoint == step + 1) {
            if (on_checkpoint) on_checkpoint(step + 1, network);
            ++next_checkpoint;
        }
    }
    return network;
}

ImageEnv::ImageEnv(vol::Volume ir_obs, vol::Volume if_obs, env::MdpConfig cfg,
                   int dimensionality, env::Vector6 reset_range)
    : ir_obs_(std::move(ir_obs)), if_obs_(std::move(if_obs)), cfg_(cfg),
      dim_(dimensionality), reset_range_(reset_range) {
    cfg_.validate();
    state_ = env::make_ideal_state(env::Vector6::Zero());
    render();
}

const vol::Observation& ImageEnv::reset(const env::Vector6& v0) {
    state_ = env::make_ideal_state(v0);
    render();
    return obs_;
}

const vol::Observation& ImageEnv::reset_random(Rng& rng) {
    env::Vector6 v;
    for (int i = 0; i < 6; ++i) {
        v[i] = reset_range_[i] > 0.0
                   ? rng.uniform(-reset_range_[i], reset_range_[i])
                   : 0.0;
    }
    return reset(v);
}

ImageEnv::StepOut ImageEnv::apply(const env::Action& a) {
    env::StepResult r = env::step(state_, a, cfg_);
    state_ = r.state;
    render();
    return {r.reward, env::is_terminal(state_, cfg_)};
}

void ImageEnv::render() {
    vol::Volume moved = vol::resample_to(if_obs_, state_.t.m, ir_obs_.dims,
                                         ir_obs_.spacing, ir_obs_.origin);
    obs_ = ir_obs_;
    for (size_t i = 0; i < obs_.data.size(); ++i) obs_.data[i] -= moved.data[i];
}

namespace {

struct Transition {
    std::vector<float> obs;
    int action = 0;
    double reward = 0.0;
    std::vector<float> next_obs;
    bool terminal = false;
};

std::vector<float> to_floats(const vol::Volume& v) { return v.data; }

}  // namespace

net::Network train_drl(const EnvFactory& make_env, const net::ArchDescriptor& arch,
                       const TrainConfig& cfg, const DrlConfig& drl,
                       std::vector<LossRecord>* curve,
                       const std::vector<long>& checkpoint_steps,
                       const CheckpointFn& on_checkpoint, DrlStats* stats) {
    auto environment = make_env();
    const auto actions = env::action_set(environment->dimensionality());
    const int arity = static_cast<int>(actions.size());
    if (arch.arity() != arity) {
        throw ConfigError("train_drl: network arity does not match action set");
    }
    if (stats) {
        *stats = DrlStats{};
        stats->action_counts.assign(arity, 0);
    }

    net::Network qnet(arch, cfg.seed);
    net::Network target = qnet.clone();
    net::RmsProp opt(cfg.rmsprop_rho);
    Rng rng(splitmix64(cfg.seed) ^ 0x64726c5f65787031ULL);

    std::vector<Transition> replay;
    replay.reserve(std::min<size_t>(drl.replay_capacity, 1 << 20));
    size_t replay_next = 0;

    auto next_checkpoint = checkpoint_steps.begin();
    std::vector<float> obs = to_floats(environment->reset_random(rng));
    int episode_steps = 0;
    long env_steps = 0;
    long updates = 0;

    while (updates < cfg.total_steps &&
           (drl.max_env_steps == 0 || env_steps < drl.max_env_steps)) {
        const double frac =
            std::min(1.0, static_cast<double>(updates) /
                              std::max<long>(1, drl.eps_decay_steps));
        const double eps = drl.eps_start + frac * (drl.eps_end - drl.eps_start);

        int a_idx;
        if (rng.uniform() < eps) {
            a_idx = static_cast<int>(rng.uniform_int(arity));
        } else {
            const std::vector<double> q = qnet.evaluate(obs);
            a_idx = static_cast<int>(
                std::max_element(q.begin(), q.end()) - q.begin());
        }
        if (stats) ++stats->action_counts[a_idx];

        ImageEnv::StepOut out = environment->apply(actions[a_idx]);
        Transition tr;
        tr.obs = obs;
        tr.action = a_idx;
        tr.reward = out.reward;
        tr.next_obs = to_floats(environment->observation());
        tr.terminal = out.terminal;
        if (replay.size() < drl.replay_capacity) {
            replay.push_back(std::move(tr));
        } else {
            replay[replay_next] = std::move(tr);
            replay_next = (replay_next + 1) % drl.replay_capacity;
        }
        ++env_steps;
        ++episode_steps;
        if (stats) {
            stats->env_steps = env_steps;
            stats->max_replay_size = std::max(stats->max_replay_size, replay.size());
        }

        if (out.terminal || episode_steps >= drl.max_episode_steps) {
            obs = to_floats(environment->reset_random(rng));
            episode_steps = 0;
        } else {
            obs = to_floats(environment->observation());
        }

        if (env_steps < drl.warmup_steps ||
            replay.size() < static_cast<size_t>(cfg.batch_size)) {
            continue;
        }

        // One gradient update per environment step.
        const double lr = cfg.learning_rate *
                          std::pow(cfg.lr_decay,
                                   static_cast<double>(updates / cfg.lr_decay_every));
        std::vector<const Transition*> batch;
        for (int k = 0; k < cfg.batch_size; ++k) {
            batch.push_back(&replay[rng.uniform_int(replay.size())]);
        }

        // Bootstrapped targets from the frozen copy.
        net::TensorShape in_shape = qnet.input_shape(cfg.batch_size);
        net::Tensor next_in(in_shape);
        const size_t per = in_shape.per_sample();
        for (int k = 0; k < cfg.batch_size; ++k) {
            std::copy(batch[k]->next_obs.begin(), batch[k]->next_obs.end(),
                      next_in.v.begin() + k * per);
        }
        net::Tensor next_q = target.forward(next_in, false);

        net::Tensor in(in_shape);
        for (int k = 0; k < cfg.batch_size; ++k) {
            std::copy(batch[k]->obs.begin(), batch[k]->obs.end(),
                      in.v.begin() + k * per);
        }
        net::Tensor out_q = qnet.forward(in, true);

        net::Tensor grad(out_q.shape);
        double step_loss = 0.0;
        const env::MdpConfig& mdp = environment->mdp();
        for (int k = 0; k < cfg.batch_size; ++k) {
            double y;
            if (batch[k]->terminal) {
                y = batch[k]->reward + mdp.bonus;
            } else {
                double best = -std::numeric_limits<double>::infinity();
                for (int i = 0; i < arity; ++i) {
                    best = std::max(best, next_q.v[k * arity + i]);
                }
                y = batch[k]->reward + mdp.gamma * best;
            }
            const double d = out_q.v[k * arity + batch[k]->action] - y;
            step_loss += d * d;
            grad.v[k * arity + batch[k]->action] = 2.0 * d;
        }
        if (!std::isfinite(step_loss)) {
            throw NonFiniteLossError("train_drl: non-finite loss at update " +
                                         std::to_string(updates),
                                     updates);
        }
        qnet.zero_grads();
        qnet.backward(grad, false);
        opt.step(qnet.params(), lr);
        ++updates;
        if (stats) stats->updates = updates;

        if (curve) curve->push_back({updates - 1, step_loss, lr});
        if (updates % drl.target_refresh == 0) target = qnet.clone();
        while (next_checkpoint != checkpoint_steps.end() &&
               *next_checkpoint == updates) {
            if (on_checkpoint) on_checkpoint(updates, qnet);
            ++next_checkpoint;
        }
    }
    return qnet;
}

vol::Volume ActionPolicy::importance(const vol::Observation& obs) const {
    vol::Volume m = obs;
    for (auto& v : m.data) v = std::abs(v);
    return m;
}

NetworkPolicy::NetworkPolicy(net::Network& network) : net_(network) {
    const int arity = network.arity();
    if (arity == 12) {
        dim_ = 3;
    } else if (arity == 6) {
        dim_ = 2;
    } else {
        throw ConfigError("NetworkPolicy: arity must be 12 (3-D) or 6 (2-D)");
    }
}

std::vector<double> NetworkPolicy::action_values(
    const vol::Observation& obs, const geom::RigidTransform&) const {
    return net_.evaluate(obs.data);
}

vol::Volume NetworkPolicy::importance(const vol::Observation& obs) const {
    net::Tensor in(net_.input_shape(1));
    if (obs.data.size() != in.v.size()) {
        throw ShapeMismatchError("NetworkPolicy::importance: observation size mismatch");
    }
    std::copy(obs.data.begin(), obs.data.end(), in.v.begin());
    net::Tensor out = net_.forward(in, false);
    net::Tensor ones(out.shape);
    std::fill(ones.v.begin(), ones.v.end(), 1.0);
    net_.zero_grads();
    net::Tensor gin = net_.backward(ones, true);
    vol::Volume m = obs;
    for (size_t i = 0; i < m.data.size(); ++i) {
        m.data[i] = static_cast<float>(std::abs(gin.v[i]));
    }
    return m;
}

std::vector<double> OraclePolicy::action_values(
    const vol::Observation&, const geom::RigidTransform& t) const {
    env::EnvState s;
    s.v = geom::params_from_transform(geom::compose(tg_, geom::invert(t)));
    // q_target rather than the discrete recursion: rollout residuals are
    // continuous, where only the continuous-play continuation is total.
    return env::q_targets(s, cfg_, dim_);
}

GreedyResult greedy_register(const vol::Volume& ir_obs, const vol::Volume& if_src,
                             const geom::RigidTransform& t0,
                             const ActionPolicy& policy,
                             const GreedyOptions& options) {
    if (options.steps < 1) {
        throw ConfigError("greedy_register: N must be >= 1");
    }
    const auto actions = env::action_set(policy.dimensionality());
    Rng rng(splitmix64(options.seed) ^ 0x677265656479ULL);

    GreedyResult result;
    geom::RigidTransform t = t0;

    auto residual = [&](const geom::RigidTransform& cur) -> env::Vector6 {
        return geom::params_from_transform(
            geom::compose(*options.ground_truth, geom::invert(cur)));
    };

    double d_cur = 0.0;
    if (options.ground_truth) {
        d_cur = options.mdp.weighted_norm(residual(t));
        if (d_cur < options.mdp.epsilon) {
            result.reached_terminal = true;
            result.steps_to_terminal = 0;
        }
    }

    vol::Observation obs;
    for (int k = 0; k < options.steps; ++k) {
        if (policy.needs_observation()) {
            vol::Volume moved = vol::resample_to(if_src, t.m, ir_obs.dims,
                                                 ir_obs.spacing, ir_obs.origin);
            obs = ir_obs;
            for (size_t i = 0; i < obs.data.size(); ++i) {
                obs.data[i] -= moved.data[i];
            }
        }
        const std::vector<double> q = policy.action_values(obs, t);
        if (q.size() != actions.size()) {
            throw ShapeMismatchError("greedy_register: policy arity mismatch");
        }

        int choice;
        if (options.randomize_top3) {
            std::vector<int> order(q.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return q[a] > q[b]; });
            const double u = rng.uniform();
            const auto& p = options.top3_probs;
            choice = order[u < p[0] ? 0 : (u < p[0] + p[1] ? 1 : 2)];
        } else {
            choice = static_cast<int>(
                std::max_element(q.begin(), q.end()) - q.begin());
        }

        env::TrajectoryStep ts;
        ts.step = k;
        ts.action = actions[choice];
        ts.q_target = q[choice];
        if (options.ground_truth) ts.v = residual(t);

        geom::Vector6 p = geom::params_from_transform(t);
        p[static_cast<int>(actions[choice].axis)] += actions[choice].sign;
        t = geom::transform_from_params(p);

        if (options.ground_truth) {
            const double d_next = options.mdp.weighted_norm(residual(t));
            ts.reward = d_cur - d_next;
            d_cur = d_next;
            if (d_next < options.mdp.epsilon && !result.reached_terminal) {
                result.reached_terminal = true;
                result.steps_to_terminal = k + 1;
            }
        }
        result.trajectory.push_back(std::move(ts));
    }
    result.t_final = t;
    return result;
}

GreedyResult greedy_register(const vol::Volume& ir_obs, const vol::Volume& if_src,
                             const geom::RigidTransform& t0, net::Network& network,
                             const GreedyOptions& options) {
    NetworkPolicy policy(network);
    return greedy_register(ir_obs, if_src, t0, policy, options);
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& curve) {
    std::ofstream os(path);
    if (!os) throw IoError("write_loss_csv: cannot open " + path);
    os << "step,loss,lr\n";
    os.precision(17);
    for (const auto& r : curve) {
        os << r.step << "," << r.loss << "," << r.lr << "\n";
    }
}

}  // namespace vreg::policy
