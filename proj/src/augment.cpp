#include "vreg/augment.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vreg/errors.hpp"

namespace vreg::augment {

using json = nlohmann::json;

vol::PhantomPair co_deform(const vol::PhantomPair& pair,
                           const geom::AffineTransform& t_a) {
    if (std::abs(t_a.m.topLeftCorner<3, 3>().determinant()) <= 1e-6) {
        throw DegenerateError("co_deform: affine transform is singular");
    }
    vol::PhantomPair out;
    out.reference = vol::resample_to(pair.reference, t_a.m, pair.reference.dims,
                                     pair.reference.spacing, pair.reference.origin);
    out.floating = vol::resample_to(pair.floating, t_a.m, pair.floating.dims,
                                    pair.floating.spacing, pair.floating.origin);
    out.ground_truth = pair.ground_truth;
    out.landmarks = pair.landmarks;
    for (auto& lm : out.landmarks) lm.p = t_a.apply(lm.p);
    return out;
}

DealignSampleSource::DealignSampleSource(std::vector<vol::PhantomPair> pairs,
                                         DealignConfig cfg, size_t count,
                                         uint64_t seed)
    : pairs_(std::move(pairs)), cfg_(cfg), count_(count), seed_(seed) {
    if (pairs_.empty()) throw ConfigError("DealignSampleSource: no phantom pairs");
    cfg_.mdp.validate();
    for (const auto& p : pairs_) {
        if (p.reference.dims != pairs_[0].reference.dims) {
            throw DimMismatchError(
                "DealignSampleSource: phantom reference grids must agree");
        }
    }
    if (cfg_.codeform_shear == 0.0) {
        for (const auto& p : pairs_) {
            ref_obs_.push_back(vol::downsample(p.reference, cfg_.obs_downsample));
            float_obs_.push_back(vol::downsample(p.floating, cfg_.obs_downsample));
        }
    }
}

std::array<int, 3> DealignSampleSource::observation_dims() const {
    if (!ref_obs_.empty()) return ref_obs_[0].dims;
    return vol::downsample(pairs_[0].reference, cfg_.obs_downsample).dims;
}

namespace {

env::Vector6 draw_residual(Rng& rng, const PerturbRange& coarse,
                           const PerturbRange& fine, double near_fraction) {
    const bool near = rng.uniform() < near_fraction;
    const env::Vector6& b = near ? fine.bounds : coarse.bounds;
    env::Vector6 v;
    for (int i = 0; i < 6; ++i) {
        v[i] = b[i] > 0.0 ? rng.uniform(-b[i], b[i]) : 0.0;
    }
    return v;
}

}  // namespace

env::Vector6 DealignSampleSource::sample_residual(size_t i) const {
    Rng rng = Rng::child(seed_, i);
    rng.uniform_int(pairs_.size());  // pair pick
    if (cfg_.codeform_shear > 0.0) {
        geom::random_affine(cfg_.codeform_shear, rng);
    }
    return draw_residual(rng, cfg_.coarse, cfg_.fine, cfg_.near_truth_fraction);
}

policy::TrainingSample DealignSampleSource::get(size_t i) const {
    Rng rng = Rng::child(seed_, i);
    const size_t pick = rng.uniform_int(pairs_.size());

    vol::Volume ref_obs, float_obs;
    if (cfg_.codeform_shear > 0.0) {
        const geom::AffineTransform t_a =
            geom::random_affine(cfg_.codeform_shear, rng);
        const vol::PhantomPair deformed = co_deform(pairs_[pick], t_a);
        ref_obs = vol::downsample(deformed.reference, cfg_.obs_downsample);
        float_obs = vol::downsample(deformed.floating, cfg_.obs_downsample);
    } else {
        ref_obs = ref_obs_[pick];
        float_obs = float_obs_[pick];
    }

    const env::Vector6 v =
        draw_residual(rng, cfg_.coarse, cfg_.fine, cfg_.near_truth_fraction);

    // tg = identity: the pose with residual v is T_t = transform(v)^-1.
    const geom::RigidTransform t_t =
        geom::invert(geom::transform_from_params(v));
    vol::Volume moved = vol::resample_to(float_obs, t_t.m, ref_obs.dims,
                                         ref_obs.spacing, ref_obs.origin);

    policy::TrainingSample s;
    s.obs_dims = ref_obs.dims;
    s.obs.resize(ref_obs.data.size());
    for (size_t k = 0; k < s.obs.size(); ++k) {
        s.obs[k] = ref_obs.data[k] - moved.data[k];
    }
    env::EnvState state = env::make_ideal_state(v);
    s.targets = env::q_targets(state, cfg_.mdp, cfg_.dimensionality);
    s.phantom_id = "phantom" + std::to_string(pick);
    s.sample_seed = splitmix64(seed_) ^ splitmix64(i);
    return s;
}

namespace {

json range_to_json(const PerturbRange& r) {
    return json::array({r.bounds[0], r.bounds[1], r.bounds[2], r.bounds[3],
                        r.bounds[4], r.bounds[5]});
}

PerturbRange range_from_json(const json& j) {
    PerturbRange r;
    for (int i = 0; i < 6; ++i) r.bounds[i] = j.at(i).get<double>();
    return r;
}

json mdp_to_json(const env::MdpConfig& m) {
    json j;
    j["gamma"] = m.gamma;
    j["epsilon"] = m.epsilon;
    j["bonus"] = m.bonus;
    j["bounds"] = json::array();
    j["distance_weights"] = json::array();
    for (int i = 0; i < 6; ++i) {
        j["bounds"].push_back(m.bounds[i]);
        j["distance_weights"].push_back(m.distance_weights[i]);
    }
    return j;
}

env::MdpConfig mdp_from_json(const json& j) {
    env::MdpConfig m;
    if (j.contains("gamma")) m.gamma = j.at("gamma").get<double>();
    if (j.contains("epsilon")) m.epsilon = j.at("epsilon").get<double>();
    if (j.contains("bonus")) m.bonus = j.at("bonus").get<double>();
    if (j.contains("bounds")) {
        for (int i = 0; i < 6; ++i) m.bounds[i] = j.at("bounds").at(i).get<double>();
    }
    if (j.contains("distance_weights")) {
        for (int i = 0; i < 6; ++i) {
            m.distance_weights[i] = j.at("distance_weights").at(i).get<double>();
        }
    }
    m.validate();
    return m;
}

}  // namespace

std::string DatasetManifest::to_json() const {
    json j;
    j["phantoms"] = json::array();
    for (const auto& spec : phantoms) {
        json js;
        js["kind"] = spec.kind;
        js["dims"] = spec.dims;
        js["spacing"] = {spec.spacing[0], spec.spacing[1], spec.spacing[2]};
        j["phantoms"].push_back(js);
    }
    j["phantom_seeds"] = phantom_seeds;
    j["ranges"]["coarse"] = range_to_json(coarse);
    j["ranges"]["fine"] = range_to_json(fine);
    j["near_truth_fraction"] = near_truth_fraction;
    j["counts"] = count;
    j["seed"] = seed;
    j["dimensionality"] = dimensionality;
    j["obs_downsample"] = obs_downsample;
    j["codeform_shear"] = codeform_shear;
    j["mdp"] = mdp_to_json(mdp);
    j["materialize"] = materialize;
    return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    json j = json::parse(text);
    DatasetManifest m;
    for (const auto& js : j.at("phantoms")) {
        vol::PhantomSpec spec;
        spec.kind = js.at("kind").get<std::string>();
        spec.dims = js.at("dims").get<std::array<int, 3>>();
        for (int i = 0; i < 3; ++i) spec.spacing[i] = js.at("spacing").at(i).get<double>();
        m.phantoms.push_back(spec);
    }
    m.phantom_seeds = j.at("phantom_seeds").get<std::vector<uint64_t>>();
    m.coarse = range_from_json(j.at("ranges").at("coarse"));
    m.fine = range_from_json(j.at("ranges").at("fine"));
    m.near_truth_fraction = j.at("near_truth_fraction").get<double>();
    m.count = j.at("counts").get<size_t>();
    m.seed = j.at("seed").get<uint64_t>();
    m.dimensionality = j.at("dimensionality").get<int>();
    m.obs_downsample = j.at("obs_downsample").get<int>();
    m.codeform_shear = j.at("codeform_shear").get<double>();
    m.mdp = mdp_from_json(j.at("mdp"));
    m.materialize = j.at("materialize").get<bool>();
    return m;
}

std::unique_ptr<DealignSampleSource> open_dataset(const DatasetManifest& m) {
    if (m.phantoms.size() != m.phantom_seeds.size()) {
        throw ConfigError("dataset manifest: phantoms and phantom_seeds differ");
    }
    std::vector<vol::PhantomPair> pairs;
    for (size_t i = 0; i < m.phantoms.size(); ++i) {
        pairs.push_back(vol::generate_phantom(m.phantoms[i], m.phantom_seeds[i]));
    }
    DealignConfig cfg;
    cfg.coarse = m.coarse;
    cfg.fine = m.fine;
    cfg.near_truth_fraction = m.near_truth_fraction;
    cfg.dimensionality = m.dimensionality;
    cfg.obs_downsample = m.obs_downsample;
    cfg.codeform_shear = m.codeform_shear;
    cfg.mdp = m.mdp;
    return std::make_unique<DealignSampleSource>(std::move(pairs), cfg, m.count,
                                                 m.seed);
}

std::string build_dataset(const DatasetManifest& manifest,
                          const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("build_dataset: cannot create " + out_dir);

    auto source = open_dataset(manifest);

    const std::string manifest_path = out_dir + "/manifest.json";
    {
        std::ofstream os(manifest_path);
        if (!os) throw IoError("build_dataset: cannot write " + manifest_path);
        os << manifest.to_json() << "\n";
    }

    std::ofstream targets(out_dir + "/targets.csv");
    if (!targets) throw IoError("build_dataset: cannot write targets.csv");
    targets.precision(17);
    targets << "sample,phantom,sample_seed";
    const size_t arity = manifest.dimensionality == 3 ? 12 : 6;
    for (size_t i = 0; i < arity; ++i) targets << ",q" << i;
    targets << "\n";

    // Observation grid, shared across samples.
    vol::Volume grid = vol::downsample(
        vol::generate_phantom(manifest.phantoms[0], manifest.phantom_seeds[0])
            .reference,
        manifest.obs_downsample);

    char name[32];
    for (size_t i = 0; i < manifest.count; ++i) {
        const policy::TrainingSample s = source->get(i);
        targets << i << "," << s.phantom_id << "," << s.sample_seed;
        for (double q : s.targets) targets << "," << q;
        targets << "\n";
        if (manifest.materialize) {
            vol::Volume obs(grid.dims, grid.spacing, grid.origin);
            obs.data = s.obs;
            std::snprintf(name, sizeof(name), "sample_%06zu.vreg", i);
            vol::save_volume(out_dir + "/" + name, obs);
        }
    }
    return manifest_path;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("load_manifest: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    try {
        return DatasetManifest::from_json(text);
    } catch (const json::exception& e) {
        throw ConfigError("load_manifest: " + std::string(e.what()));
    }
}

}  // namespace vreg::augment
