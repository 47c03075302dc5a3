#include "vreg/hierarchy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vreg/errors.hpp"

namespace vreg::hier {

using json = nlohmann::json;

SaliencyMap saliency_map(net::Network& network, const vol::Observation& obs) {
    policy::NetworkPolicy p(network);
    return p.importance(obs);
}

Eigen::Vector3d attention_center(const SaliencyMap& omega, double percentile) {
    if (omega.data.empty()) {
        throw ShapeMismatchError("attention_center: empty map");
    }
    if (!(percentile > 0.0 && percentile < 100.0)) {
        throw ConfigError("attention_center: percentile must be in (0, 100)");
    }

    // Nearest-rank percentile threshold.
    std::vector<float> sorted = omega.data;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    size_t rank = static_cast<size_t>(
        std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::min(std::max<size_t>(rank, 1), n);
    const float threshold = sorted[rank - 1];

    if (sorted.front() == sorted.back()) {
        // Degenerate map: every voxel equal; no informative selection.
        return omega.center();
    }

    double wsum = 0.0;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    size_t idx = 0;
    for (int z = 0; z < omega.dims[2]; ++z) {
        for (int y = 0; y < omega.dims[1]; ++y) {
            for (int x = 0; x < omega.dims[0]; ++x, ++idx) {
                const double w = omega.data[idx];
                if (omega.data[idx] < threshold) continue;
                wsum += w;
                centroid += w * omega.physical(x, y, z);
            }
        }
    }
    if (wsum <= 0.0) return omega.center();
    return centroid / wsum;
}

HierReport hierarchical_register(const vol::Volume& ir, const vol::Volume& iff,
                                 const geom::RigidTransform& t0,
                                 const policy::ActionPolicy& coarse_policy,
                                 const policy::ActionPolicy& fine_policy,
                                 const HierConfig& cfg) {
    using clock = std::chrono::steady_clock;
    if (cfg.n1 < 1) throw ConfigError("hierarchical_register: n1 must be >= 1");

    HierReport report;
    report.roi_dims = cfg.roi_dims;

    auto distance_to_gt = [&](const geom::RigidTransform& t) {
        return cfg.rollout.mdp.weighted_norm(geom::params_from_transform(
            geom::compose(*cfg.rollout.ground_truth, geom::invert(t))));
    };

    // Stage 1: coarse alignment on downsampled, full-FOV volumes.
    const vol::Volume ir_coarse = vol::downsample(ir, cfg.coarse_factor);
    const vol::Volume if_coarse = vol::downsample(iff, cfg.coarse_factor);

    policy::GreedyOptions coarse_opt = cfg.rollout;
    coarse_opt.steps = cfg.n1;
    const auto c0 = clock::now();
    policy::GreedyResult coarse = policy::greedy_register(
        ir_coarse, if_coarse, t0, coarse_policy, coarse_opt);
    report.coarse.wallclock_ms =
        std::chrono::duration<double, std::milli>(clock::now() - c0).count();
    report.coarse.trajectory = std::move(coarse.trajectory);
    if (cfg.rollout.ground_truth) {
        report.coarse.d_before = distance_to_gt(t0);
        report.coarse.d_after = distance_to_gt(coarse.t_final);
    }
    report.t_coarse = coarse.t_final;
    report.t_final = coarse.t_final;

    if (cfg.n2 < 1) return report;

    // Attention: saliency of the final coarse observation picks the ROI.
    vol::Volume moved = vol::resample_to(if_coarse, coarse.t_final.m,
                                         ir_coarse.dims, ir_coarse.spacing,
                                         ir_coarse.origin);
    vol::Observation d_coarse = ir_coarse;
    for (size_t i = 0; i < d_coarse.data.size(); ++i) {
        d_coarse.data[i] -= moved.data[i];
    }
    const SaliencyMap omega = coarse_policy.importance(d_coarse);
    report.roi_center = attention_center(omega, cfg.saliency_percentile);

    // Stage 2: refined alignment on the high-resolution ROI.
    const vol::Volume ir_roi = vol::crop_roi(ir, report.roi_center, cfg.roi_dims);
    policy::GreedyOptions fine_opt = cfg.rollout;
    fine_opt.steps = cfg.n2;
    fine_opt.seed = splitmix64(cfg.rollout.seed) ^ 0x66696e65ULL;
    const auto f0 = clock::now();
    policy::GreedyResult fine = policy::greedy_register(
        ir_roi, iff, coarse.t_final, fine_policy, fine_opt);
    report.fine.wallclock_ms =
        std::chrono::duration<double, std::milli>(clock::now() - f0).count();
    report.fine.trajectory = std::move(fine.trajectory);
    if (cfg.rollout.ground_truth) {
        report.fine.d_before = report.coarse.d_after;
        report.fine.d_after = distance_to_gt(fine.t_final);
    }
    report.t_final = fine.t_final;
    report.fine_ran = true;
    return report;
}

HierReport hierarchical_register(const vol::Volume& ir, const vol::Volume& iff,
                                 const geom::RigidTransform& t0,
                                 net::Network& coarse_net, net::Network& fine_net,
                                 const HierConfig& cfg) {
    policy::NetworkPolicy coarse(coarse_net), fine(fine_net);
    return hierarchical_register(ir, iff, t0, coarse, fine, cfg);
}

namespace {

json trajectory_to_json(const env::Trajectory& traj) {
    json rows = json::array();
    for (const auto& t : traj) {
        json r;
        r["step"] = t.step;
        r["action"] = std::string(env::axis_name(t.action.axis)) +
                      (t.action.sign > 0 ? "+" : "-");
        if (t.v) {
            r["v"] = json::array();
            for (int i = 0; i < 6; ++i) r["v"].push_back((*t.v)[i]);
        }
        if (t.reward) r["reward"] = *t.reward;
        if (t.q_target) r["q"] = *t.q_target;
        rows.push_back(r);
    }
    return rows;
}

json stage_to_json(const StageReport& s) {
    json j;
    j["steps"] = s.trajectory.size();
    j["wallclock_ms"] = s.wallclock_ms;
    if (std::isfinite(s.d_before)) j["d_before"] = s.d_before;
    if (std::isfinite(s.d_after)) j["d_after"] = s.d_after;
    j["trajectory"] = trajectory_to_json(s.trajectory);
    return j;
}

}  // namespace

void write_report_json(const std::string& path, const HierReport& report) {
    json j;
    j["coarse"] = stage_to_json(report.coarse);
    if (report.fine_ran) {
        j["fine"] = stage_to_json(report.fine);
        j["roi"]["center_mm"] = {report.roi_center[0], report.roi_center[1],
                                 report.roi_center[2]};
        j["roi"]["size_voxels"] = report.roi_dims;
    }
    const geom::Vector6 p = geom::params_from_transform(report.t_final);
    j["final_params"] = {p[0], p[1], p[2], p[3], p[4], p[5]};
    std::ofstream os(path);
    if (!os) throw IoError("write_report_json: cannot open " + path);
    os << j.dump(2) << "\n";
}

}  // namespace vreg::hier
