#include "vreg/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "vreg/errors.hpp"
#include "vreg/rng.hpp"

namespace vreg::vol {

namespace {

struct Blob {
    Eigen::Vector3d center;
    Eigen::Vector3d semi;  // semi-axes, mm
    double amp;
};

// Smooth compact bump: amp * (1 - rho^2)^2 inside the ellipsoid, 0 outside.
double blob_value(const Blob& b, const Eigen::Vector3d& p) {
    Eigen::Vector3d d = (p - b.center).cwiseQuotient(b.semi);
    const double r2 = d.squaredNorm();
    if (r2 >= 1.0) return 0.0;
    const double t = 1.0 - r2;
    return b.amp * t * t;
}

struct Streak {
    Eigen::Vector2d point;
    Eigen::Vector2d dir;  // unit
    double amp;
    double width;
};

double scene_value(const std::vector<Blob>& blobs, const Eigen::Vector3d& p) {
    double v = 0.0;
    for (const auto& b : blobs) v += blob_value(b, p);
    return v;
}

// Grid with the physical origin at the volume centre, so rotations in the
// parameterization pivot about the middle of the image.
Volume centered_volume(std::array<int, 3> dims, const Eigen::Vector3d& spacing) {
    Eigen::Vector3d origin;
    for (int i = 0; i < 3; ++i) origin[i] = -(dims[i] - 1) / 2.0 * spacing[i];
    return Volume(dims, spacing, origin);
}

void render(Volume& v, const std::vector<Blob>& blobs,
            const std::vector<Streak>& streaks, double gain, double clamp_lo,
            double clamp_hi) {
    size_t idx = 0;
    for (int z = 0; z < v.dims[2]; ++z) {
        for (int y = 0; y < v.dims[1]; ++y) {
            for (int x = 0; x < v.dims[0]; ++x, ++idx) {
                const Eigen::Vector3d p = v.physical(x, y, z);
                double val = gain * scene_value(blobs, p);
                for (const auto& s : streaks) {
                    const Eigen::Vector2d q(p[0] - s.point[0], p[1] - s.point[1]);
                    const double d = q[0] * s.dir[1] - q[1] * s.dir[0];
                    val += s.amp * std::exp(-(d * d) / (s.width * s.width));
                }
                v.data[idx] = static_cast<float>(
                    std::clamp(val, clamp_lo, clamp_hi));
            }
        }
    }
}

// Landmarks on the boundary (rho = 1) of an ellipsoid blob.
void add_boundary_landmarks(std::vector<Landmark>& out, const Blob& b,
                            bool two_d, const std::string& prefix) {
    std::vector<Eigen::Vector3d> dirs = {
        {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    if (!two_d) {
        dirs.push_back({0, 0, 1});
        dirs.push_back({0, 0, -1});
    }
    const double inv_sqrt2 = 0.7071067811865476;
    dirs.push_back({inv_sqrt2, inv_sqrt2, 0});
    dirs.push_back({-inv_sqrt2, inv_sqrt2, 0});
    dirs.push_back({inv_sqrt2, -inv_sqrt2, 0});
    dirs.push_back({-inv_sqrt2, -inv_sqrt2, 0});
    int k = 0;
    for (const auto& d : dirs) {
        Landmark lm;
        lm.id = prefix + std::to_string(k++);
        lm.p = b.center + d.cwiseProduct(b.semi);
        out.push_back(lm);
    }
}

PhantomPair make_simple(const PhantomSpec& spec, Rng& rng) {
    const bool two_d = spec.dims[2] == 1;
    PhantomPair pair;
    pair.reference = centered_volume(spec.dims, spec.spacing);
    pair.floating = centered_volume(spec.dims, spec.spacing);

    const Eigen::Vector3d extent(
        spec.dims[0] * spec.spacing[0], spec.dims[1] * spec.spacing[1],
        spec.dims[2] * spec.spacing[2]);

    Blob b;
    b.center = Eigen::Vector3d(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                               two_d ? 0.0 : rng.uniform(-2.0, 2.0));
    b.semi = Eigen::Vector3d(0.32 * extent[0], 0.20 * extent[1],
                             two_d ? 1.0 : 0.26 * extent[2]);
    b.amp = 1.0;

    render(pair.reference, {b}, {}, 1.0, 0.0, 1.0);
    // Floating image is the same scene under a linear intensity remap.
    render(pair.floating, {b}, {}, 0.85, 0.0, 1.0);
    add_boundary_landmarks(pair.landmarks, b, two_d, "simple_");
    return pair;
}

constexpr double kSpinePeriodMm = 12.0;

PhantomPair make_spine(const PhantomSpec& spec, Rng& rng) {
    const bool two_d = spec.dims[2] == 1;
    const int axis = two_d ? 1 : 2;

    PhantomPair pair;
    pair.reference = centered_volume(spec.dims, spec.spacing);

    // Floating grid: same resolution, smaller field of view along the
    // periodic axis (the CBCT-versus-CT situation).
    std::array<int, 3> fdims = spec.dims;
    fdims[axis] = spec.dims[axis] / 2;
    pair.floating = centered_volume(fdims, spec.spacing);

    const double ref_half = spec.dims[axis] * spec.spacing[axis] / 2.0;
    const double float_half = fdims[axis] * spec.spacing[axis] / 2.0;

    std::vector<Blob> blobs;
    Eigen::Vector3d vert_semi =
        two_d ? Eigen::Vector3d(9.0, 4.0, 1.0) : Eigen::Vector3d(10.0, 8.0, 4.0);
    const double period = kSpinePeriodMm;
    // Vertebra row centred on the volume, filling the reference FOV.
    const int n_half = static_cast<int>((ref_half - vert_semi[axis]) / period);
    for (int i = -n_half; i <= n_half; ++i) {
        Blob b;
        b.center = Eigen::Vector3d::Zero();
        b.center[axis] = i * period;
        b.semi = vert_semi;
        b.amp = 0.9;
        blobs.push_back(b);
    }

    // Distractor objects off the spine axis (organ-like, not periodic).
    const int n_distract = 2 + static_cast<int>(rng.uniform_int(2));
    for (int i = 0; i < n_distract; ++i) {
        Blob d;
        d.center[0] = rng.uniform(0.30, 0.42) * spec.dims[0] * spec.spacing[0] *
                      (rng.uniform() < 0.5 ? -1.0 : 1.0);
        d.center[1] = two_d ? rng.uniform(-float_half * 0.5, float_half * 0.5)
                            : rng.uniform(-6.0, 6.0);
        d.center[2] = two_d ? 0.0 : rng.uniform(-float_half * 0.5, float_half * 0.5);
        d.semi = Eigen::Vector3d(6.0 + rng.uniform(0.0, 3.0),
                                 5.0 + rng.uniform(0.0, 3.0),
                                 two_d ? 1.0 : 7.0 + rng.uniform(0.0, 4.0));
        d.amp = 0.45 + rng.uniform(0.0, 0.1);
        blobs.push_back(d);
    }

    render(pair.reference, blobs, {}, 1.0, 0.0, 1.0);
    render(pair.floating, blobs, {}, 0.9, 0.0, 1.0);

    // Landmarks on the edges of the vertebrae visible in both volumes.
    for (const auto& b : blobs) {
        if (b.center[0] != 0.0) continue;  // skip distractors
        if (std::abs(b.center[axis]) + vert_semi[axis] > float_half) continue;
        add_boundary_landmarks(pair.landmarks, b, two_d,
                               "vert" + std::to_string(static_cast<int>(
                                   std::llround(b.center[axis]))) + "_");
    }
    return pair;
}

PhantomPair make_cardiac(const PhantomSpec& spec, Rng& rng) {
    const bool two_d = spec.dims[2] == 1;
    PhantomPair pair;
    pair.reference = centered_volume(spec.dims, spec.spacing);
    pair.floating = centered_volume(spec.dims, spec.spacing);

    const Eigen::Vector3d extent(
        spec.dims[0] * spec.spacing[0], spec.dims[1] * spec.spacing[1],
        spec.dims[2] * spec.spacing[2]);

    Blob heart;
    heart.center = Eigen::Vector3d(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                   two_d ? 0.0 : rng.uniform(-2.0, 2.0));
    heart.semi = Eigen::Vector3d(0.30 * extent[0], 0.24 * extent[1],
                                 two_d ? 1.0 : 0.27 * extent[2]);
    heart.amp = 0.95;

    render(pair.reference, {heart}, {}, 1.0, 0.0, 1.0);

    // Floating: reduced contrast plus streak artifacts across the axial plane.
    std::vector<Streak> streaks;
    const int n_streaks = 6;
    for (int i = 0; i < n_streaks; ++i) {
        Streak s;
        const double theta = rng.uniform(0.0, 3.141592653589793);
        s.dir = Eigen::Vector2d(std::cos(theta), std::sin(theta));
        s.point = Eigen::Vector2d(rng.uniform(-0.3, 0.3) * extent[0],
                                  rng.uniform(-0.3, 0.3) * extent[1]);
        s.amp = 0.12 + rng.uniform(0.0, 0.08);
        s.width = 1.0 + rng.uniform(0.0, 0.8);
        streaks.push_back(s);
    }
    render(pair.floating, {heart}, streaks, 0.45, 0.0, 1.0);

    add_boundary_landmarks(pair.landmarks, heart, two_d, "epi_");
    return pair;
}

}  // namespace

double spine_period_mm() { return kSpinePeriodMm; }

int spine_periodic_axis(const PhantomSpec& spec) {
    return spec.dims[2] == 1 ? 1 : 2;
}

PhantomPair generate_phantom(const PhantomSpec& spec, uint64_t seed) {
    Rng rng(splitmix64(seed) ^ 0x7064686e74616d70ULL);
    if (spec.kind == "simple") return make_simple(spec, rng);
    if (spec.kind == "spine-like") return make_spine(spec, rng);
    if (spec.kind == "cardiac-like") return make_cardiac(spec, rng);
    throw UnknownSpecError("generate_phantom: unknown kind '" + spec.kind + "'");
}

PhantomSpec default_phantom_spec(const std::string& kind, int dimensionality) {
    PhantomSpec spec;
    spec.kind = kind;
    if (dimensionality == 2) {
        spec.dims = {64, 64, 1};
        spec.spacing = {1.0, 1.0, 1.0};
        if (kind == "spine-like") spec.dims = {64, 72, 1};
    } else {
        spec.dims = {32, 32, 32};
        spec.spacing = {1.5, 1.5, 1.5};
        if (kind == "spine-like") spec.dims = {40, 40, 64};
    }
    return spec;
}

}  // namespace vreg::vol
