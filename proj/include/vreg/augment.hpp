#pragma once
// Training-set synthesis: random de-alignment of aligned phantom pairs
// within configured parameter ranges (with denser sampling near the ground
// truth), affine co-deformation of pairs, and materialized datasets with a
// manifest that reproduces them bit-exactly.

#include <cstdint>
#include <string>
#include <vector>

#include "vreg/env.hpp"
#include "vreg/phantom.hpp"
#include "vreg/policy.hpp"

namespace vreg::augment {

struct PerturbRange {
    env::Vector6 bounds = env::Vector6::Zero();  // symmetric, mm / degrees

    static PerturbRange coarse_e1() {  // spine ranges, wide tz
        PerturbRange r;
        r.bounds << 30, 30, 150, 30, 30, 30;
        return r;
    }
    static PerturbRange coarse_e2() {
        PerturbRange r;
        r.bounds << 30, 30, 30, 30, 30, 30;
        return r;
    }
    static PerturbRange fine() {
        PerturbRange r;
        r.bounds << 5, 5, 5, 5, 5, 5;
        return r;
    }
};

struct DealignConfig {
    PerturbRange coarse;
    PerturbRange fine = PerturbRange::fine();
    double near_truth_fraction = 0.5;  // probability of drawing from `fine`
    int dimensionality = 3;
    int obs_downsample = 1;            // pair resolution -> observation resolution
    double codeform_shear = 0.0;       // 0 disables affine co-deformation
    env::MdpConfig mdp;
};

// Both volumes of a pair resampled under the same affine map; landmarks are
// mapped along. The rigid alignment of the pair is untouched since both
// sides deform identically.
vol::PhantomPair co_deform(const vol::PhantomPair& pair,
                           const geom::AffineTransform& t_a);

// Deterministic per-index sample stream over one or more phantom pairs.
// Sample i derives its generator from (seed, i), so access order and
// parallel generation cannot change the output.
class DealignSampleSource : public policy::SampleSource {
  public:
    DealignSampleSource(std::vector<vol::PhantomPair> pairs, DealignConfig cfg,
                        size_t count, uint64_t seed);

    size_t size() const override { return count_; }
    policy::TrainingSample get(size_t i) const override;

    // Residual vector drawn for sample i (the mixture draw).
    env::Vector6 sample_residual(size_t i) const;
    std::array<int, 3> observation_dims() const;

  private:
    std::vector<vol::PhantomPair> pairs_;
    std::vector<vol::Volume> ref_obs_, float_obs_;  // cached when no co-deform
    DealignConfig cfg_;
    size_t count_;
    uint64_t seed_;
};

struct DatasetManifest {
    std::vector<vol::PhantomSpec> phantoms;
    std::vector<uint64_t> phantom_seeds;
    PerturbRange coarse, fine;
    double near_truth_fraction = 0.5;
    size_t count = 0;           // total samples
    uint64_t seed = 0;
    int dimensionality = 3;
    int obs_downsample = 1;
    double codeform_shear = 0.0;
    env::MdpConfig mdp;
    bool materialize = true;    // sample volumes written to disk

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
};

// Writes manifest.json, targets.csv and (when materialized) one volume file
// per sample into out_dir. Returns the manifest path.
std::string build_dataset(const DatasetManifest& manifest,
                          const std::string& out_dir);

// Sample stream described by a manifest (regenerates, never reads samples).
std::unique_ptr<DealignSampleSource> open_dataset(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::string& path);

}  // namespace vreg::augment
