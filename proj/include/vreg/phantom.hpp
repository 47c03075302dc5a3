#pragma once
// Synthetic phantom pairs for registration experiments. Each kind encodes
// one registration challenge archetype:
//   "simple"       - a single smooth ellipsoid, floating image is an
//                    intensity-remapped copy; the easy sanity case.
//   "spine-like"   - a row of equally spaced bright blobs plus distractor
//                    objects; the floating image has a smaller field of
//                    view along the periodic axis, so a one-period shift
//                    is a convincing wrong alignment.
//   "cardiac-like" - a smooth ellipsoid; the floating image has reduced
//                    contrast and additive streak noise.
// Pairs are aligned at the identity transform and come with landmarks on
// structure boundaries. Intensities are in [0, 1].

#include <cstdint>
#include <string>
#include <vector>

#include "vreg/volume.hpp"

namespace vreg::vol {

struct PhantomSpec {
    std::string kind = "simple";
    std::array<int, 3> dims{32, 32, 32};  // reference grid; nz = 1 for 2-D
    Eigen::Vector3d spacing{1.5, 1.5, 1.5};
};

struct PhantomPair {
    Volume reference;
    Volume floating;
    std::vector<Landmark> landmarks;
    geom::RigidTransform ground_truth;  // identity by construction
};

// Deterministic per (spec, seed). Throws UnknownSpecError for other kinds.
PhantomPair generate_phantom(const PhantomSpec& spec, uint64_t seed);

// Catalogue defaults sized for desk-scale runs (dimensionality 2 or 3).
PhantomSpec default_phantom_spec(const std::string& kind, int dimensionality);

// Structural period (mm) of the spine-like phantom along its repetitive
// axis, and that axis index (z in 3-D, y in 2-D).
double spine_period_mm();
int spine_periodic_axis(const PhantomSpec& spec);

}  // namespace vreg::vol
