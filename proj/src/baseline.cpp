#include "vreg/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "vreg/errors.hpp"

namespace vreg::baseline {

namespace {

void min_max(const vol::Volume& v, const std::vector<uint8_t>* mask,
             double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (size_t i = 0; i < v.data.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        lo = std::min(lo, static_cast<double>(v.data[i]));
        hi = std::max(hi, static_cast<double>(v.data[i]));
    }
}

inline int bin_of(double v, double lo, double hi, int bins) {
    if (hi <= lo) return 0;
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
}

}  // namespace

JointHistogram joint_histogram(const vol::Volume& i1, const vol::Volume& i2,
                               int bins, const std::vector<uint8_t>* mask) {
    if (i1.dims != i2.dims) {
        throw DimMismatchError("joint_histogram: volume dims differ");
    }
    JointHistogram h;
    h.bins = bins;
    h.counts.assign(static_cast<size_t>(bins) * bins, 0.0);
    min_max(i1, mask, h.min1, h.max1);
    min_max(i2, mask, h.min2, h.max2);
    if (!std::isfinite(h.min1)) {
        throw EmptyOverlapError("joint_histogram: no voxels in overlap");
    }
    for (size_t i = 0; i < i1.data.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        const int b1 = bin_of(i1.data[i], h.min1, h.max1, bins);
        const int b2 = bin_of(i2.data[i], h.min2, h.max2, bins);
        h.counts[static_cast<size_t>(b1) * bins + b2] += 1.0;
        h.total += 1.0;
    }
    return h;
}

double entropy(const vol::Volume& v, int bins) {
    const JointHistogram h = joint_histogram(v, v, bins, nullptr);
    double out = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double p = h.at(b, b) / h.total;
        if (p > 0.0) out -= p * std::log(p);
    }
    return out;
}

double mutual_information(const vol::Volume& i1, const vol::Volume& i2,
                          int bins, const std::vector<uint8_t>* mask) {
    const JointHistogram h = joint_histogram(i1, i2, bins, mask);
    std::vector<double> p1(bins, 0.0), p2(bins, 0.0);
    for (int a = 0; a < bins; ++a) {
        for (int b = 0; b < bins; ++b) {
            p1[a] += h.at(a, b);
            p2[b] += h.at(a, b);
        }
    }
    double mi = 0.0;
    for (int a = 0; a < bins; ++a) {
        for (int b = 0; b < bins; ++b) {
            const double pab = h.at(a, b);
            if (pab <= 0.0) continue;
            mi += (pab / h.total) *
                  std::log(pab * h.total / (p1[a] * p2[b]));
        }
    }
    return mi;
}

namespace {

// MI of the overlap at pose params p; -inf when the overlap is empty.
double metric(const vol::Volume& ir, const vol::Volume& iff,
              const geom::Vector6& p, int bins) {
    const geom::RigidTransform t = geom::transform_from_params(p);
    std::vector<uint8_t> mask;
    const vol::Volume moved =
        vol::resample_to(iff, t.m, ir.dims, ir.spacing, ir.origin, &mask);
    bool any = false;
    for (uint8_t m : mask) {
        if (m) {
            any = true;
            break;
        }
    }
    if (!any) return -std::numeric_limits<double>::infinity();
    return mutual_information(ir, moved, bins, &mask);
}

}  // namespace

OptimizeResult optimize_registration(const vol::Volume& ir, const vol::Volume& iff,
                                     const geom::RigidTransform& t0,
                                     const OptimizeConfig& cfg) {
    const bool two_d = ir.is_2d();
    const std::vector<int> active =
        two_d ? std::vector<int>{0, 1, 5} : std::vector<int>{0, 1, 2, 3, 4, 5};

    OptimizeResult result;
    geom::Vector6 p = geom::params_from_transform(t0);

    for (size_t li = 0; li < cfg.schedule.size(); ++li) {
        const LevelConfig& level = cfg.schedule[li];
        const vol::Volume irl = vol::downsample(ir, level.factor);
        const vol::Volume ifl = vol::downsample(iff, level.factor);

        double cur = metric(irl, ifl, p, cfg.bins);
        result.trace.push_back({static_cast<int>(li), 0, cur, p});

        double alpha = level.step;
        for (int iter = 1; iter <= level.max_iters && alpha >= cfg.min_step;) {
            // Central-difference gradient over the active parameters.
            geom::Vector6 g = geom::Vector6::Zero();
            for (int i : active) {
                geom::Vector6 pp = p, pm = p;
                pp[i] += cfg.fd_step;
                pm[i] -= cfg.fd_step;
                g[i] = (metric(irl, ifl, pp, cfg.bins) -
                        metric(irl, ifl, pm, cfg.bins)) /
                       (2.0 * cfg.fd_step);
            }
            const double gn = g.norm();
            if (!(gn > 0.0) || !std::isfinite(gn)) break;
            g /= gn;

            // Backtracking: halve until the step improves the metric.
            bool accepted = false;
            while (alpha >= cfg.min_step) {
                const geom::Vector6 trial = p + alpha * g;
                const double m = metric(irl, ifl, trial, cfg.bins);
                if (m > cur) {
                    p = trial;
                    cur = m;
                    result.trace.push_back({static_cast<int>(li), iter, cur, p});
                    ++iter;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;
        }
    }
    result.t = geom::transform_from_params(p);
    return result;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream os(path);
    if (!os) throw IoError("write_trace_csv: cannot open " + path);
    os << "level,iter,MI,tx,ty,tz,rx,ry,rz\n";
    os.precision(17);
    for (const auto& r : trace) {
        os << r.level << "," << r.iter << "," << r.mi;
        for (int i = 0; i < 6; ++i) os << "," << r.params[i];
        os << "\n";
    }
}

}  // namespace vreg::baseline
