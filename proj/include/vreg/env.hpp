#pragma once
// The registration MDP. States carry the current transform T_t and, during
// training, the ground truth T_g; the residual vector v_t parameterizes
// T_g * T_t^-1 and D = ||v_t|| is the registration distance.
//
// Two modes are provided. Ideal mode mutates v directly by +-1 in one
// component, which is the setting in which the recursive Q-target and its
// closed form are exact. Image mode mutates the pose parameters of T_t by
// +-1 and recomputes v; translations behave identically, rotations couple
// only approximately because composition is nonlinear.

#include <optional>
#include <string>
#include <vector>

#include "vreg/geometry.hpp"
#include "vreg/rng.hpp"

namespace vreg::env {

using geom::RigidTransform;
using geom::Vector6;

enum class Axis : int { tx = 0, ty = 1, tz = 2, rx = 3, ry = 4, rz = 5 };

struct Action {
    Axis axis = Axis::tx;
    int sign = +1;  // +-1, in the axis's native unit (mm or degrees)
};

const char* axis_name(Axis a);

// 12 actions in 3-D; 6 actions over (tx, ty, rz) in 2-D.
std::vector<Action> action_set(int dimensionality);

struct MdpConfig {
    double gamma = 0.9;
    double epsilon = 0.5;
    double bonus = 10.0;  // terminal bonus R; must exceed gamma / (1 - gamma)
    Vector6 bounds = (Vector6() << 30, 30, 150, 30, 30, 30).finished();
    Vector6 distance_weights = Vector6::Ones();

    void validate() const;  // throws ConfigError on violated invariants
    double weighted_norm(const Vector6& v) const {
        return v.cwiseProduct(distance_weights).norm();
    }
};

enum class Mode { ideal, image };

struct EnvState {
    RigidTransform t;       // current transform T_t
    RigidTransform tg;      // ground truth (training only)
    Vector6 v = Vector6::Zero();  // params(T_g * T_t^-1)
    int step_index = 0;
    Mode mode = Mode::ideal;
};

// Ideal-mode state from a residual vector (tg defaults to identity; T_t is
// derived so that params(tg * T_t^-1) == v).
EnvState make_ideal_state(const Vector6& v,
                          const RigidTransform& tg = RigidTransform::identity());
// Image-mode state; v is recomputed from (tg, t).
EnvState make_image_state(const RigidTransform& t, const RigidTransform& tg);

double state_distance(const EnvState& s, const MdpConfig& cfg);
bool is_terminal(const EnvState& s, const MdpConfig& cfg);

struct StepResult {
    EnvState state;
    double reward = 0.0;
    bool clamped = false;  // action hit the exploration bounds and was undone
};

// Applies one unit action. Reward is D(T_g, T_t) - D(T_g, T_t+1). Actions
// that would leave the exploration box are clamped (per-component in ideal
// mode, reverted in image mode) and reported via `clamped`.
StepResult step(const EnvState& s, const Action& a, const MdpConfig& cfg);

// argmin over the action set of D(T_g, a o T_t); ties within 1e-12 are
// broken uniformly at random.
Action optimal_action(const EnvState& s, const MdpConfig& cfg, Rng& rng,
                      int dimensionality = 3);

// Recursive action-value target. Evaluated with ideal-mode arithmetic and
// without exploration bounds so the recursion is the pure defining
// equations. Throws DepthExceededError after 10 * (initial D + 10) steps.
double q_value(const EnvState& s, const Action& a, const MdpConfig& cfg,
               int dimensionality = 3);

// Q for every action in action_set(dimensionality) order.
std::vector<double> q_values(const EnvState& s, const MdpConfig& cfg,
                             int dimensionality);

// Closed form for axis-aligned optimal play with p + 1 unit steps left:
// (1 - gamma^(p+1)) / (1 - gamma) + gamma^p * R.
double q_closed_form(int p, const MdpConfig& cfg);

// Value of optimal play from distance d under the continuous-action
// idealization (any direction, ||v_{t+1} - v_t|| = 1): straight-line walk
// with ceil(d - epsilon) steps, possibly overshooting into the tolerance
// ball on the last one. Coincides with q_closed_form at integer distances.
double q_star(double d, const MdpConfig& cfg);

// Training target: the discrete action's immediate effect followed by
// continuous-optimal play. Unlike the q_value recursion this is total over
// continuous residuals, where the discrete greedy path need not terminate.
double q_target(const EnvState& s, const Action& a, const MdpConfig& cfg);
std::vector<double> q_targets(const EnvState& s, const MdpConfig& cfg,
                              int dimensionality);

// One recorded step of a rollout or supervised path.
struct TrajectoryStep {
    int step = 0;
    std::optional<Vector6> v;  // residual, when ground truth is known
    Action action;
    std::optional<double> reward;
    std::optional<double> q_target;
};

using Trajectory = std::vector<TrajectoryStep>;

// CSV columns: step,v1..v6,action_axis,action_sign,reward,q_target.
// Unknown optional fields are left empty.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace vreg::env
