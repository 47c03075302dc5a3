#pragma once
// Action-value policy training and greedy test-time registration.
//
// The supervised path (DSL) regresses the network on analytic Q-targets
// computed from the recursive target equations; the DRL comparator is a
// plain bootstrapped Q-learner with epsilon-greedy exploration and a
// uniform replay buffer, sharing the network and optimizer.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vreg/env.hpp"
#include "vreg/net.hpp"
#include "vreg/volume.hpp"

namespace vreg::policy {

struct TrainingSample {
    std::vector<float> obs;            // difference image, x-fastest
    std::array<int, 3> obs_dims{0, 0, 0};
    std::vector<double> targets;       // Q(s, a_i) for the full action set
    std::string phantom_id;            // provenance
    uint64_t sample_seed = 0;          // provenance
};

// Deterministic random-access sample stream; get(i) must not depend on
// which other indices were accessed before.
class SampleSource {
  public:
    virtual ~SampleSource() = default;
    virtual size_t size() const = 0;
    virtual TrainingSample get(size_t i) const = 0;
};

class InMemorySamples : public SampleSource {
  public:
    explicit InMemorySamples(std::vector<TrainingSample> samples)
        : samples_(std::move(samples)) {}
    size_t size() const override { return samples_.size(); }
    TrainingSample get(size_t i) const override { return samples_[i]; }

  private:
    std::vector<TrainingSample> samples_;
};

struct TrainConfig {
    double learning_rate = 6e-5;
    double lr_decay = 0.7;
    long lr_decay_every = 10000;  // mini-batches
    int batch_size = 32;
    long total_steps = 1000;
    double rmsprop_rho = 0.9;
    uint64_t seed = 0;
};

struct LossRecord {
    long step;
    double loss;
    double lr;
};

// Sum over samples and all actions of squared output-target differences.
double loss(const std::vector<TrainingSample>& batch, net::Network& network);

// Invoked with (completed update count, network) at each checkpoint step.
using CheckpointFn = std::function<void(long, net::Network&)>;

// Supervised training against analytic Q-targets. Deterministic per seed.
// Throws NonFiniteLossError (with the step index) if the loss diverges.
net::Network train_dsl(const SampleSource& data, const net::ArchDescriptor& arch,
                       const TrainConfig& cfg,
                       std::vector<LossRecord>* curve = nullptr,
                       const std::vector<long>& checkpoint_steps = {},
                       const CheckpointFn& on_checkpoint = nullptr);

// Training environment: a phantom pair held at the observation resolution.
// Dynamics run in ideal mode (exact unit residual changes); observations
// are rendered from the derived pose.
class ImageEnv {
  public:
    ImageEnv(vol::Volume ir_obs, vol::Volume if_obs, env::MdpConfig cfg,
             int dimensionality, env::Vector6 reset_range);

    const vol::Observation& reset(const env::Vector6& v0);
    const vol::Observation& reset_random(Rng& rng);

    struct StepOut {
        double reward = 0.0;
        bool terminal = false;
    };
    StepOut apply(const env::Action& a);

    const vol::Observation& observation() const { return obs_; }
    const env::EnvState& state() const { return state_; }
    int dimensionality() const { return dim_; }
    const env::MdpConfig& mdp() const { return cfg_; }

  private:
    void render();

    vol::Volume ir_obs_, if_obs_;
    env::MdpConfig cfg_;
    int dim_;
    env::Vector6 reset_range_;
    env::EnvState state_;
    vol::Observation obs_;
};

using EnvFactory = std::function<std::unique_ptr<ImageEnv>()>;

struct DrlConfig {
    size_t replay_capacity = 10000;
    int warmup_steps = 500;       // env steps before the first update
    double eps_start = 1.0;
    double eps_end = 0.1;
    long eps_decay_steps = 2000;  // linear schedule, in updates
    long target_refresh = 1000;   // updates between frozen-copy refreshes
    int max_episode_steps = 60;
    long max_env_steps = 0;       // 0 = no cap beyond the update budget
};

struct DrlStats {
    long env_steps = 0;
    long updates = 0;
    size_t max_replay_size = 0;
    std::vector<long> action_counts;  // explored + exploited, per action
};

// DQN-style comparator (2-D configurations). One gradient update per env
// step after warmup, so update counts are comparable with train_dsl steps.
net::Network train_drl(const EnvFactory& make_env, const net::ArchDescriptor& arch,
                       const TrainConfig& cfg, const DrlConfig& drl,
                       std::vector<LossRecord>* curve = nullptr,
                       const std::vector<long>& checkpoint_steps = {},
                       const CheckpointFn& on_checkpoint = nullptr,
                       DrlStats* stats = nullptr);

// Test-time policy: maps an observation (and current pose) to one value per
// action. Network policies ignore the pose; the oracle ignores the image.
class ActionPolicy {
  public:
    virtual ~ActionPolicy() = default;
    virtual int dimensionality() const = 0;
    virtual bool needs_observation() const { return true; }
    virtual std::vector<double> action_values(
        const vol::Observation& obs, const geom::RigidTransform& t) const = 0;
    // Per-voxel importance used for ROI attention. Default: |observation|.
    virtual vol::Volume importance(const vol::Observation& obs) const;
};

class NetworkPolicy : public ActionPolicy {
  public:
    explicit NetworkPolicy(net::Network& network);
    int dimensionality() const override { return dim_; }
    std::vector<double> action_values(const vol::Observation& obs,
                                      const geom::RigidTransform& t) const override;
    vol::Volume importance(const vol::Observation& obs) const override;

  private:
    net::Network& net_;
    int dim_;
};

// Emits the analytic Q pattern for the current pose; requires ground truth.
class OraclePolicy : public ActionPolicy {
  public:
    OraclePolicy(const geom::RigidTransform& tg, env::MdpConfig cfg,
                 int dimensionality)
        : tg_(tg), cfg_(cfg), dim_(dimensionality) {}
    int dimensionality() const override { return dim_; }
    bool needs_observation() const override { return false; }
    std::vector<double> action_values(const vol::Observation&,
                                      const geom::RigidTransform& t) const override;

  private:
    geom::RigidTransform tg_;
    env::MdpConfig cfg_;
    int dim_;
};

struct GreedyOptions {
    int steps = 200;  // N >= 1
    bool randomize_top3 = false;
    std::array<double, 3> top3_probs{0.8, 0.1, 0.1};
    uint64_t seed = 0;
    // When the ground truth is known (training/eval), trajectories carry
    // residuals and rewards and terminal visits are tracked.
    std::optional<geom::RigidTransform> ground_truth;
    env::MdpConfig mdp;
};

struct GreedyResult {
    geom::RigidTransform t_final;
    env::Trajectory trajectory;
    bool reached_terminal = false;  // meaningful when ground truth was given
    int steps_to_terminal = -1;
};

// Repeats N times: render d = Ir - T o If on the grid of `ir_obs`, evaluate
// the policy, apply the argmax action (or sample among the top 3) to the
// pose parameters. `if_src` may live on any grid (e.g. full resolution).
GreedyResult greedy_register(const vol::Volume& ir_obs, const vol::Volume& if_src,
                             const geom::RigidTransform& t0,
                             const ActionPolicy& policy,
                             const GreedyOptions& options);
GreedyResult greedy_register(const vol::Volume& ir_obs, const vol::Volume& if_src,
                             const geom::RigidTransform& t0, net::Network& network,
                             const GreedyOptions& options);

// Loss-curve CSV: step,loss,lr.
void write_loss_csv(const std::string& path, const std::vector<LossRecord>& curve);

}  // namespace vreg::policy
