#pragma once
// Coarse-to-fine registration: a coarse rollout on downsampled full-FOV
// volumes, a saliency-driven region of interest extracted from the
// high-resolution reference, and a fine rollout on that ROI starting from
// the coarse result.

#include <array>
#include <string>

#include "vreg/policy.hpp"

namespace vreg::hier {

using SaliencyMap = vol::Volume;

// |d(sum of outputs)/d(input voxel)|, from one backward pass.
SaliencyMap saliency_map(net::Network& network, const vol::Observation& obs);

// Importance-weighted centroid of the voxels at or above the given
// percentile (nearest-rank) of the map. Degenerate maps (all values equal
// or zero total weight) fall back to the volume centre.
Eigen::Vector3d attention_center(const SaliencyMap& omega,
                                 double percentile = 95.0);

struct HierConfig {
    int coarse_factor = 2;                // downsample factor for stage 1
    std::array<int, 3> roi_dims{32, 32, 32};
    int n1 = 200;
    int n2 = 100;
    double saliency_percentile = 95.0;
    policy::GreedyOptions rollout;        // steps fields are overridden
};

struct StageReport {
    env::Trajectory trajectory;
    double d_before = std::numeric_limits<double>::quiet_NaN();
    double d_after = std::numeric_limits<double>::quiet_NaN();
    double wallclock_ms = 0.0;
};

struct HierReport {
    StageReport coarse, fine;
    Eigen::Vector3d roi_center{0, 0, 0};
    std::array<int, 3> roi_dims{0, 0, 0};
    geom::RigidTransform t_coarse, t_final;
    bool fine_ran = false;
};

// Policies for the two stages; the fine stage is skipped when n2 == 0.
// D before/after is reported when the rollout options carry ground truth.
HierReport hierarchical_register(const vol::Volume& ir, const vol::Volume& iff,
                                 const geom::RigidTransform& t0,
                                 const policy::ActionPolicy& coarse_policy,
                                 const policy::ActionPolicy& fine_policy,
                                 const HierConfig& cfg);
HierReport hierarchical_register(const vol::Volume& ir, const vol::Volume& iff,
                                 const geom::RigidTransform& t0,
                                 net::Network& coarse_net, net::Network& fine_net,
                                 const HierConfig& cfg);

void write_report_json(const std::string& path, const HierReport& report);

}  // namespace vreg::hier
