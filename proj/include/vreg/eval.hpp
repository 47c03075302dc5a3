#pragma once
// Accuracy metrics and the benchmark harness: target registration error
// over landmarks, mesh-to-mesh error via exact point-to-triangle distances,
// success rates, and Table-style aggregation with nearest-rank percentiles.

#include <functional>
#include <string>
#include <vector>

#include "vreg/phantom.hpp"

namespace vreg::eval {

using LandmarkSet = std::vector<vol::Landmark>;

// Mean over landmarks of || T_est p - T_gt p ||.
double tre(const LandmarkSet& landmarks, const geom::RigidTransform& t_est,
           const geom::RigidTransform& t_gt);

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;

    void validate() const;  // index range and non-degeneracy
};

// Closest point on triangle (a, b, c) to p; face, edge and vertex regions.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p,
                                          const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b,
                                          const Eigen::Vector3d& c);

// Mean over transformed floating vertices of the distance to the nearest
// reference triangle.
double mme(const TriangleMesh& mesh_ref, const TriangleMesh& mesh_float,
           const geom::RigidTransform& t);

// Fraction of errors <= threshold. Defaults per the evaluation protocol:
// TRE <= 10 mm, MME <= 20 mm.
double success_rate(const std::vector<double>& errors, double threshold);

constexpr double kTreSuccessMm = 10.0;
constexpr double kMmeSuccessMm = 20.0;

// Nearest-rank percentile: the ceil(p/100 * N)-th order statistic.
double percentile_nearest_rank(std::vector<double> values, double pct);

struct BenchmarkCase {
    std::string id;
    vol::PhantomPair pair;
};

struct MethodResult {
    geom::RigidTransform t;
    int steps = 0;
};

struct Method {
    std::string name;
    // (case, initial transform, per-run seed) -> estimated transform
    std::function<MethodResult(const BenchmarkCase&, const geom::RigidTransform&,
                               uint64_t)> run;
};

struct BenchmarkConfig {
    int perturbations = 10;  // random de-alignments per test pair
    geom::Vector6 range = (geom::Vector6() << 10, 10, 10, 10, 10, 10).finished();
    double success_threshold = kTreSuccessMm;
    uint64_t seed = 0;
};

struct CaseRow {
    std::string method;
    std::string case_id;
    uint64_t seed = 0;
    double init_err = 0.0;
    double final_err = 0.0;
    bool success = false;
    int steps = 0;
    double wallclock_ms = 0.0;
};

struct MethodSummary {
    std::string method;
    double success = 0.0;
    double p10 = 0.0, p50 = 0.0, p90 = 0.0;
};

struct BenchmarkReport {
    std::vector<CaseRow> rows;
    std::vector<MethodSummary> summary;
};

// Runs every method on every (case, perturbation) pair. Method exceptions
// are recorded as failed cases scored at the initial pose; the suite never
// aborts. Errors are TRE over the pair's landmarks.
BenchmarkReport benchmark(const std::vector<Method>& methods,
                          const std::vector<BenchmarkCase>& cases,
                          const BenchmarkConfig& cfg);

// CSV columns: method,case,seed,init_err,final_err,success,steps,wallclock_ms.
void write_report_csv(const std::string& path, const BenchmarkReport& report);
void write_summary_csv(const std::string& path, const BenchmarkReport& report);
void write_summary_svg(const std::string& path, const BenchmarkReport& report);

}  // namespace vreg::eval
