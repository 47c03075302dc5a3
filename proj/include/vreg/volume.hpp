#pragma once
// Scalar image grids and the resampling/observation machinery. A Volume is
// a regular 2-D/3-D grid (nz = 1 for 2-D) with per-axis spacing in mm and
// a physical origin at voxel (0,0,0). Data is float32, x-fastest.
//
// Resampling follows the pull-back convention: the output voxel at physical
// point p takes the interpolated value of the source at T^-1 p, with
// bi/trilinear interpolation and fill value 0 outside the source domain.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vreg/geometry.hpp"

namespace vreg::vol {

struct Volume {
    std::array<int, 3> dims{0, 0, 0};
    Eigen::Vector3d spacing{1.0, 1.0, 1.0};
    Eigen::Vector3d origin{0.0, 0.0, 0.0};
    std::vector<float> data;  // dims[0]*dims[1]*dims[2] values, x-fastest

    Volume() = default;
    Volume(std::array<int, 3> d, Eigen::Vector3d sp, Eigen::Vector3d org)
        : dims(d), spacing(sp), origin(org),
          data(static_cast<size_t>(d[0]) * d[1] * d[2], 0.0f) {}

    size_t voxel_count() const {
        return static_cast<size_t>(dims[0]) * dims[1] * dims[2];
    }
    size_t index(int x, int y, int z) const {
        return static_cast<size_t>(z) * dims[1] * dims[0] +
               static_cast<size_t>(y) * dims[0] + static_cast<size_t>(x);
    }
    float at(int x, int y, int z) const { return data[index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }

    bool is_2d() const { return dims[2] == 1; }

    Eigen::Vector3d physical(double ix, double iy, double iz) const {
        return origin + Eigen::Vector3d(ix * spacing[0], iy * spacing[1],
                                        iz * spacing[2]);
    }
    // Physical position of the grid centre.
    Eigen::Vector3d center() const {
        return physical((dims[0] - 1) / 2.0, (dims[1] - 1) / 2.0,
                        (dims[2] - 1) / 2.0);
    }
    bool same_grid(const Volume& o) const {
        return dims == o.dims && (spacing - o.spacing).norm() < 1e-12 &&
               (origin - o.origin).norm() < 1e-12;
    }

    // Interpolated value at physical point p (zero outside the domain).
    double interp(const Eigen::Vector3d& p) const;

    double mean() const;
    double min_value() const;
    double max_value() const;
};

// An Observation is a difference image; it shares the Volume representation.
using Observation = Volume;

struct Landmark {
    std::string id;
    Eigen::Vector3d p;  // mm
};

// Pull-back resampling of `v` under rigid T onto v's own grid.
Volume resample(const Volume& v, const geom::RigidTransform& t);

// Pull-back resampling onto an arbitrary output grid under any homogeneous
// transform (rigid or affine). If `mask` is non-null it receives one byte
// per output voxel: 1 where the pulled-back sample fell inside the source
// domain, 0 where the fill value was used.
Volume resample_to(const Volume& v, const Eigen::Matrix4d& t,
                   std::array<int, 3> dims, const Eigen::Vector3d& spacing,
                   const Eigen::Vector3d& origin,
                   std::vector<uint8_t>* mask = nullptr);

// d = Ir - resample(If, T). Throws DimMismatchError if grids differ.
Observation difference_image(const Volume& ir, const Volume& iff,
                             const geom::RigidTransform& t);

// Box-average pooling by `factor` per axis (trailing partial blocks are
// averaged over their actual members). Spacing scales by factor and the
// origin moves to the centre of the first block.
Volume downsample(const Volume& v, int factor);

// Axis-aligned crop of `size` voxels centred at the voxel nearest
// `center_mm`, zero-padded outside the source domain. The origin is updated
// so physical coordinates are preserved.
Volume crop_roi(const Volume& v, const Eigen::Vector3d& center_mm,
                std::array<int, 3> size);

// File format: magic "VREG", version u32, dtype u32 (1 = float32),
// dims 3xu32, spacing 3xf64, origin 3xf64, little-endian, then the raw
// x-fastest float32 raster.
void save_volume(const std::string& path, const Volume& v);
Volume load_volume(const std::string& path);

// Landmarks CSV: header "id,x_mm,y_mm,z_mm", one row per landmark.
void save_landmarks_csv(const std::string& path,
                        const std::vector<Landmark>& lms);
std::vector<Landmark> load_landmarks_csv(const std::string& path);

}  // namespace vreg::vol
