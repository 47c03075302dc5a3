#include "vreg/env.hpp"

#include <cmath>
#include <fstream>

#include "vreg/errors.hpp"

namespace vreg::env {

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::tx: return "tx";
        case Axis::ty: return "ty";
        case Axis::tz: return "tz";
        case Axis::rx: return "rx";
        case Axis::ry: return "ry";
        case Axis::rz: return "rz";
    }
    return "?";
}

std::vector<Action> action_set(int dimensionality) {
    std::vector<Axis> axes;
    if (dimensionality == 3) {
        axes = {Axis::tx, Axis::ty, Axis::tz, Axis::rx, Axis::ry, Axis::rz};
    } else if (dimensionality == 2) {
        axes = {Axis::tx, Axis::ty, Axis::rz};
    } else {
        throw ConfigError("action_set: dimensionality must be 2 or 3");
    }
    std::vector<Action> actions;
    for (Axis ax : axes) {
        actions.push_back({ax, +1});
        actions.push_back({ax, -1});
    }
    return actions;
}

void MdpConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("MdpConfig: gamma must be in (0, 1)");
    }
    if (!(bonus > gamma / (1.0 - gamma))) {
        throw ConfigError("MdpConfig: bonus R must exceed gamma / (1 - gamma)");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("MdpConfig: epsilon must be positive");
    }
    for (int i = 0; i < 6; ++i) {
        if (bounds[i] < 0.0) throw ConfigError("MdpConfig: bounds must be >= 0");
        if (distance_weights[i] <= 0.0) {
            throw ConfigError("MdpConfig: distance weights must be positive");
        }
    }
}

EnvState make_ideal_state(const Vector6& v, const RigidTransform& tg) {
    EnvState s;
    s.mode = Mode::ideal;
    s.v = v;
    s.tg = tg;
    // tg * t^-1 == transform(v)  =>  t = transform(v)^-1 * tg
    s.t = geom::compose(geom::invert(geom::transform_from_params(v)), tg);
    return s;
}

EnvState make_image_state(const RigidTransform& t, const RigidTransform& tg) {
    EnvState s;
    s.mode = Mode::image;
    s.t = t;
    s.tg = tg;
    s.v = geom::params_from_transform(geom::compose(tg, geom::invert(t)));
    return s;
}

double state_distance(const EnvState& s, const MdpConfig& cfg) {
    return cfg.weighted_norm(s.v);
}

bool is_terminal(const EnvState& s, const MdpConfig& cfg) {
    return state_distance(s, cfg) < cfg.epsilon;
}

namespace {

// Residual after an ideal-mode action: the agent's +sign move on `axis`
// reduces that component of the residual by sign * 1.
inline Vector6 ideal_next(const Vector6& v, const Action& a) {
    Vector6 out = v;
    out[static_cast<int>(a.axis)] -= a.sign;
    return out;
}

EnvState image_next_state(const EnvState& s, const Action& a) {
    Vector6 p = geom::params_from_transform(s.t);
    p[static_cast<int>(a.axis)] += a.sign;
    EnvState n;
    n.mode = Mode::image;
    n.tg = s.tg;
    n.t = geom::transform_from_params(p);
    n.v = geom::params_from_transform(geom::compose(s.tg, geom::invert(n.t)));
    n.step_index = s.step_index + 1;
    return n;
}

}  // namespace

StepResult step(const EnvState& s, const Action& a, const MdpConfig& cfg) {
    const double d_before = state_distance(s, cfg);
    StepResult res;
    if (s.mode == Mode::ideal) {
        Vector6 next = ideal_next(s.v, a);
        const int i = static_cast<int>(a.axis);
        if (std::abs(next[i]) > cfg.bounds[i]) {
            next[i] = std::clamp(next[i], -cfg.bounds[i], cfg.bounds[i]);
            res.clamped = true;
        }
        res.state = make_ideal_state(next, s.tg);
        res.state.step_index = s.step_index + 1;
    } else {
        EnvState next = image_next_state(s, a);
        for (int i = 0; i < 6; ++i) {
            if (std::abs(next.v[i]) > cfg.bounds[i]) {
                // No exact per-component clamp exists through the nonlinear
                // map; undo the move instead.
                next = s;
                next.step_index = s.step_index + 1;
                res.clamped = true;
                break;
            }
        }
        res.state = next;
    }
    res.reward = d_before - state_distance(res.state, cfg);
    return res;
}

Action optimal_action(const EnvState& s, const MdpConfig& cfg, Rng& rng,
                      int dimensionality) {
    const auto actions = action_set(dimensionality);
    std::vector<double> dist(actions.size());
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < actions.size(); ++i) {
        if (s.mode == Mode::ideal) {
            dist[i] = cfg.weighted_norm(ideal_next(s.v, actions[i]));
        } else {
            dist[i] = cfg.weighted_norm(image_next_state(s, actions[i]).v);
        }
        best = std::min(best, dist[i]);
    }
    std::vector<size_t> minimizers;
    for (size_t i = 0; i < actions.size(); ++i) {
        if (dist[i] <= best + 1e-12) minimizers.push_back(i);
    }
    return actions[minimizers[rng.uniform_int(minimizers.size())]];
}

double q_value(const EnvState& s, const Action& a, const MdpConfig& cfg,
               int dimensionality) {
    // Pure ideal-mode recursion on the residual; exploration bounds do not
    // apply inside the defining equations.
    Vector6 v = s.v;
    const auto actions = action_set(dimensionality);
    const long max_depth =
        10 * (static_cast<long>(std::ceil(cfg.weighted_norm(v))) + 10);

    Action act = a;
    double total = 0.0;
    double discount = 1.0;
    for (long depth = 0; depth <= max_depth; ++depth) {
        const double d_before = cfg.weighted_norm(v);
        const Vector6 next = ideal_next(v, act);
        const double d_after = cfg.weighted_norm(next);
        const double reward = d_before - d_after;
        if (d_after <= cfg.epsilon) {
            return total + discount * (reward + cfg.bonus);
        }
        total += discount * reward;
        discount *= cfg.gamma;
        v = next;
        // Greedy continuation: first minimizer (tied minimizers lead to
        // states of identical value by symmetry).
        double best = std::numeric_limits<double>::infinity();
        size_t best_i = 0;
        for (size_t i = 0; i < actions.size(); ++i) {
            const double d = cfg.weighted_norm(ideal_next(v, actions[i]));
            if (d < best - 1e-15) {
                best = d;
                best_i = i;
            }
        }
        act = actions[best_i];
    }
    throw DepthExceededError(
        "q_value: recursion exceeded depth guard (non-contracting state)");
}

std::vector<double> q_values(const EnvState& s, const MdpConfig& cfg,
                             int dimensionality) {
    const auto actions = action_set(dimensionality);
    std::vector<double> q(actions.size());
    for (size_t i = 0; i < actions.size(); ++i) {
        q[i] = q_value(s, actions[i], cfg, dimensionality);
    }
    return q;
}

double q_closed_form(int p, const MdpConfig& cfg) {
    const double gp = std::pow(cfg.gamma, p);
    return (1.0 - gp * cfg.gamma) / (1.0 - cfg.gamma) + gp * cfg.bonus;
}

double q_star(double d, const MdpConfig& cfg) {
    if (d <= cfg.epsilon) return cfg.bonus;  // degenerate call; already inside
    // The closed form extended to real step counts: d unit-reward steps at
    // the target with the bonus discounted accordingly. This is the smooth
    // completion of q_closed_form (strictly decreasing in d, which keeps
    // the optimal action the target argmax); modelling the final-step
    // overshoot instead would break that monotonicity.
    const double gd = std::pow(cfg.gamma, d);
    return (1.0 - gd) / (1.0 - cfg.gamma) + (gd / cfg.gamma) * cfg.bonus;
}

double q_target(const EnvState& s, const Action& a, const MdpConfig& cfg) {
    const double d_before = cfg.weighted_norm(s.v);
    const Vector6 next = ideal_next(s.v, a);
    const double d_after = cfg.weighted_norm(next);
    const double reward = d_before - d_after;
    if (d_after <= cfg.epsilon) return reward + cfg.bonus;
    return reward + cfg.gamma * q_star(d_after, cfg);
}

std::vector<double> q_targets(const EnvState& s, const MdpConfig& cfg,
                              int dimensionality) {
    const auto actions = action_set(dimensionality);
    std::vector<double> q(actions.size());
    for (size_t i = 0; i < actions.size(); ++i) {
        q[i] = q_target(s, actions[i], cfg);
    }
    return q;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream os(path);
    if (!os) throw IoError("write_trajectory_csv: cannot open " + path);
    os << "step,v1,v2,v3,v4,v5,v6,action_axis,action_sign,reward,q_target\n";
    os.precision(17);
    for (const auto& t : traj) {
        os << t.step << ",";
        for (int i = 0; i < 6; ++i) {
            if (t.v) os << (*t.v)[i];
            os << ",";
        }
        os << axis_name(t.action.axis) << "," << t.action.sign << ",";
        if (t.reward) os << *t.reward;
        os << ",";
        if (t.q_target) os << *t.q_target;
        os << "\n";
    }
}

}  // namespace vreg::env
