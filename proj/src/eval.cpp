#include "vreg/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "vreg/errors.hpp"
#include "vreg/log.hpp"
#include "vreg/rng.hpp"

namespace vreg::eval {

double tre(const LandmarkSet& landmarks, const geom::RigidTransform& t_est,
           const geom::RigidTransform& t_gt) {
    if (landmarks.empty()) throw ConfigError("tre: empty landmark set");
    double sum = 0.0;
    for (const auto& lm : landmarks) {
        sum += (t_est.apply(lm.p) - t_gt.apply(lm.p)).norm();
    }
    return sum / static_cast<double>(landmarks.size());
}

void TriangleMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles) {
        for (int i : t) {
            if (i < 0 || i >= n) {
                throw ConfigError("TriangleMesh: vertex index out of range");
            }
        }
        const Eigen::Vector3d ab = vertices[t[1]] - vertices[t[0]];
        const Eigen::Vector3d ac = vertices[t[2]] - vertices[t[0]];
        if (0.5 * ab.cross(ac).norm() <= 1e-9) {
            throw DegenerateError("TriangleMesh: zero-area triangle");
        }
    }
}

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p,
                                          const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b,
                                          const Eigen::Vector3d& c) {
    const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        return a + (d1 / (d1 - d3)) * ab;
    }

    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        return a + (d2 / (d2 - d6)) * ac;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    }

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double mme(const TriangleMesh& mesh_ref, const TriangleMesh& mesh_float,
           const geom::RigidTransform& t) {
    if (mesh_ref.triangles.empty() || mesh_float.vertices.empty()) {
        throw ConfigError("mme: empty mesh");
    }
    double sum = 0.0;
    for (const auto& v : mesh_float.vertices) {
        const Eigen::Vector3d q = t.apply(v);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& tri : mesh_ref.triangles) {
            const Eigen::Vector3d cp = closest_point_on_triangle(
                q, mesh_ref.vertices[tri[0]], mesh_ref.vertices[tri[1]],
                mesh_ref.vertices[tri[2]]);
            best = std::min(best, (q - cp).norm());
        }
        sum += best;
    }
    return sum / static_cast<double>(mesh_float.vertices.size());
}

double success_rate(const std::vector<double>& errors, double threshold) {
    if (errors.empty()) throw ConfigError("success_rate: empty error list");
    size_t n = 0;
    for (double e : errors) {
        if (e <= threshold) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(errors.size());
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
    if (values.empty()) throw ConfigError("percentile: empty list");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    size_t rank = static_cast<size_t>(
        std::ceil(pct / 100.0 * static_cast<double>(n)));
    rank = std::min(std::max<size_t>(rank, 1), n);
    return values[rank - 1];
}

BenchmarkReport benchmark(const std::vector<Method>& methods,
                          const std::vector<BenchmarkCase>& cases,
                          const BenchmarkConfig& cfg) {
    if (cases.empty()) throw ConfigError("benchmark: no test cases");
    if (methods.empty()) throw ConfigError("benchmark: no methods");
    using clock = std::chrono::steady_clock;

    BenchmarkReport report;
    for (size_t ci = 0; ci < cases.size(); ++ci) {
        const BenchmarkCase& tc = cases[ci];
        for (int k = 0; k < cfg.perturbations; ++k) {
            const uint64_t run_seed =
                splitmix64(cfg.seed) ^ splitmix64(ci * 1000003ULL + k);
            Rng rng(run_seed);
            geom::Vector6 v0;
            for (int i = 0; i < 6; ++i) {
                v0[i] = cfg.range[i] > 0.0
                            ? rng.uniform(-cfg.range[i], cfg.range[i])
                            : 0.0;
            }
            const geom::RigidTransform t0 = geom::compose(
                geom::invert(geom::transform_from_params(v0)), tc.pair.ground_truth);
            const double init_err = tre(tc.pair.landmarks, t0, tc.pair.ground_truth);

            for (const auto& method : methods) {
                CaseRow row;
                row.method = method.name;
                row.case_id = tc.id;
                row.seed = run_seed;
                row.init_err = init_err;
                const auto start = clock::now();
                try {
                    const MethodResult res = method.run(tc, t0, run_seed);
                    row.final_err =
                        tre(tc.pair.landmarks, res.t, tc.pair.ground_truth);
                    row.steps = res.steps;
                } catch (const std::exception& e) {
                    log::warn("benchmark: ", method.name, " failed on ", tc.id,
                              ": ", e.what());
                    row.final_err = init_err;  // scored at the achieved pose
                    row.steps = 0;
                }
                row.wallclock_ms = std::chrono::duration<double, std::milli>(
                                       clock::now() - start)
                                       .count();
                row.success = row.final_err <= cfg.success_threshold;
                report.rows.push_back(std::move(row));
            }
        }
    }

    for (const auto& method : methods) {
        std::vector<double> errors;
        for (const auto& row : report.rows) {
            if (row.method == method.name) errors.push_back(row.final_err);
        }
        MethodSummary s;
        s.method = method.name;
        s.success = success_rate(errors, cfg.success_threshold);
        s.p10 = percentile_nearest_rank(errors, 10);
        s.p50 = percentile_nearest_rank(errors, 50);
        s.p90 = percentile_nearest_rank(errors, 90);
        report.summary.push_back(s);
    }
    return report;
}

void write_report_csv(const std::string& path, const BenchmarkReport& report) {
    std::ofstream os(path);
    if (!os) throw IoError("write_report_csv: cannot open " + path);
    os << "method,case,seed,init_err,final_err,success,steps,wallclock_ms\n";
    os.precision(17);
    for (const auto& r : report.rows) {
        os << r.method << "," << r.case_id << "," << r.seed << "," << r.init_err
           << "," << r.final_err << "," << (r.success ? 1 : 0) << "," << r.steps
           << "," << r.wallclock_ms << "\n";
    }
}

void write_summary_csv(const std::string& path, const BenchmarkReport& report) {
    std::ofstream os(path);
    if (!os) throw IoError("write_summary_csv: cannot open " + path);
    os << "method,success,p10,p50,p90\n";
    os.precision(17);
    for (const auto& s : report.summary) {
        os << s.method << "," << s.success << "," << s.p10 << "," << s.p50 << ","
           << s.p90 << "\n";
    }
}

void write_summary_svg(const std::string& path, const BenchmarkReport& report) {
    const int bar_w = 80, gap = 40, height = 260, base = 220;
    const int width =
        gap + static_cast<int>(report.summary.size()) * (bar_w + gap) + gap;
    std::ofstream os(path);
    if (!os) throw IoError("write_summary_svg: cannot open " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
       << "' height='" << height << "'>\n";
    os << "<text x='10' y='20' font-size='14'>success rate (bar) and "
          "p10/p50/p90 error (dots, scaled)</text>\n";

    double max_err = 1e-9;
    for (const auto& s : report.summary) max_err = std::max(max_err, s.p90);

    int x = gap;
    for (const auto& s : report.summary) {
        const int h = static_cast<int>(s.success * 160);
        os << "<rect x='" << x << "' y='" << base - h << "' width='" << bar_w
           << "' height='" << h << "' fill='#4878a8'/>\n";
        for (double p : {s.p10, s.p50, s.p90}) {
            const int py = base - static_cast<int>(p / max_err * 160);
            os << "<circle cx='" << x + bar_w / 2 << "' cy='" << py
               << "' r='3' fill='#d05050'/>\n";
        }
        os << "<text x='" << x << "' y='" << base + 16 << "' font-size='12'>"
           << s.method << "</text>\n";
        os << "<text x='" << x << "' y='" << base - h - 6 << "' font-size='11'>"
           << static_cast<int>(s.success * 100 + 0.5) << "%</text>\n";
        x += bar_w + gap;
    }
    os << "</svg>\n";
}

}  // namespace vreg::eval
