#pragma once
// Classical comparator: mutual information over a 50x50 joint histogram and
// a multi-resolution local optimizer (finite-difference gradient ascent with
// backtracking step halving).

#include <string>
#include <vector>

#include "vreg/volume.hpp"

namespace vreg::baseline {

struct JointHistogram {
    int bins = 50;
    std::vector<double> counts;  // bins x bins, row = image 1 bin
    double min1 = 0, max1 = 0, min2 = 0, max2 = 0;
    double total = 0;

    double at(int b1, int b2) const { return counts[b1 * bins + b2]; }
};

// Histogram over voxels where mask (when given) is nonzero. Bin edges span
// each image's observed min/max over the counted voxels.
JointHistogram joint_histogram(const vol::Volume& i1, const vol::Volume& i2,
                               int bins = 50,
                               const std::vector<uint8_t>* mask = nullptr);

// Shannon entropy of the 50-bin marginal histogram, in nats.
double entropy(const vol::Volume& v, int bins = 50);

// MI = sum p(a,b) log(p(a,b) / (p(a) p(b))). Throws EmptyOverlapError when
// no voxels are counted.
double mutual_information(const vol::Volume& i1, const vol::Volume& i2,
                          int bins = 50,
                          const std::vector<uint8_t>* mask = nullptr);

struct LevelConfig {
    int factor = 1;        // pyramid downsample factor
    double step = 2.0;     // initial line-search step (mm / degrees)
    int max_iters = 50;    // accepted-step cap
};

struct OptimizeConfig {
    std::vector<LevelConfig> schedule{{4, 4.0, 50}, {2, 2.0, 50}, {1, 1.0, 50}};
    double fd_step = 0.5;   // central-difference probe, mm / degrees
    double min_step = 1e-3; // line search stops below this
    int bins = 50;
};

struct TraceRow {
    int level = 0;
    int iter = 0;
    double mi = 0.0;
    geom::Vector6 params = geom::Vector6::Zero();
};

struct OptimizeResult {
    geom::RigidTransform t;
    std::vector<TraceRow> trace;
};

// Maximizes MI(Ir, T o If) over the pose parameters, coarse to fine.
// 2-D volumes optimize (tx, ty, rz) only. Returns the best pose seen; the
// MI trace never decreases across accepted steps within a level.
OptimizeResult optimize_registration(const vol::Volume& ir, const vol::Volume& iff,
                                     const geom::RigidTransform& t0,
                                     const OptimizeConfig& cfg = {});

// Trace CSV: level,iter,MI,tx,ty,tz,rx,ry,rz.
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

}  // namespace vreg::baseline
