#include "vreg/phantom.hpp"

#include <cmath>

#include "doctest.h"
#include "vreg/baseline.hpp"
#include "vreg/errors.hpp"

using namespace vreg;

TEST_CASE("phantoms are deterministic per seed") {
    for (const char* kind : {"simple", "spine-like", "cardiac-like"}) {
        const auto spec = vol::default_phantom_spec(kind, 3);
        const auto a = vol::generate_phantom(spec, 77);
        const auto b = vol::generate_phantom(spec, 77);
        CHECK(a.reference.data == b.reference.data);
        CHECK(a.floating.data == b.floating.data);
        REQUIRE(a.landmarks.size() == b.landmarks.size());
        for (size_t i = 0; i < a.landmarks.size(); ++i) {
            CHECK(a.landmarks[i].p == b.landmarks[i].p);
        }
        const auto c = vol::generate_phantom(spec, 78);
        CHECK(a.reference.data != c.reference.data);
    }
}

TEST_CASE("phantom contract: intensities, landmarks, ground truth") {
    for (const char* kind : {"simple", "spine-like", "cardiac-like"}) {
        for (int dim : {2, 3}) {
            const auto spec = vol::default_phantom_spec(kind, dim);
            const auto pair = vol::generate_phantom(spec, 5);
            CHECK(pair.reference.min_value() >= 0.0);
            CHECK(pair.reference.max_value() <= 1.0);
            CHECK(pair.floating.min_value() >= 0.0);
            CHECK(pair.floating.max_value() <= 1.0);
            CHECK(pair.landmarks.size() >= 8);
            CHECK(pair.ground_truth.m.isApprox(Eigen::Matrix4d::Identity()));
            // landmarks live inside the reference domain
            for (const auto& lm : pair.landmarks) {
                for (int i = 0; i < 3; ++i) {
                    const double idx =
                        (lm.p[i] - pair.reference.origin[i]) / pair.reference.spacing[i];
                    CHECK(idx >= 0.0);
                    CHECK(idx <= pair.reference.dims[i] - 1);
                }
            }
        }
    }
}

TEST_CASE("simple phantom floating image is a pure intensity remap") {
    const auto pair =
        vol::generate_phantom(vol::default_phantom_spec("simple", 2), 3);
    for (size_t i = 0; i < pair.reference.data.size(); ++i) {
        CHECK(pair.floating.data[i] ==
              doctest::Approx(0.85 * pair.reference.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("unknown phantom kind") {
    vol::PhantomSpec spec;
    spec.kind = "nope";
    CHECK_THROWS_AS(vol::generate_phantom(spec, 1), UnknownSpecError);
}

TEST_CASE("spine-like metric landscape is multi-modal along the spine axis") {
    const auto spec = vol::default_phantom_spec("spine-like", 3);
    const auto pair = vol::generate_phantom(spec, 21);
    const int axis = vol::spine_periodic_axis(spec);
    CHECK(axis == 2);
    CHECK(pair.floating.dims[axis] < pair.reference.dims[axis]);

    // 1-D sweep of MI against translation along the periodic axis.
    std::vector<double> mi;
    for (double s = -vol::spine_period_mm() * 1.5; s <= vol::spine_period_mm() * 1.5;
         s += 1.0) {
        geom::Vector6 v = geom::Vector6::Zero();
        v[axis] = s;
        std::vector<uint8_t> mask;
        const vol::Volume moved = vol::resample_to(
            pair.floating, geom::transform_from_params(v).m, pair.reference.dims,
            pair.reference.spacing, pair.reference.origin, &mask);
        mi.push_back(baseline::mutual_information(pair.reference, moved, 50, &mask));
    }
    int maxima = 0;
    for (size_t i = 1; i + 1 < mi.size(); ++i) {
        if (mi[i] > mi[i - 1] && mi[i] > mi[i + 1]) ++maxima;
    }
    CHECK(maxima >= 2);
}
