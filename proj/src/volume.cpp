#include "vreg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vreg/errors.hpp"

namespace vreg::vol {

namespace {

// Snap an index coordinate to the nearest integer when it is within 1e-7
// voxels, so identity and whole-voxel shifts reproduce grid values exactly.
inline double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-7 ? r : x;
}

struct InterpResult {
    double value;
    bool inside;
};

inline InterpResult interp_index(const Volume& v, double ix, double iy,
                                 double iz) {
    ix = snap(ix);
    iy = snap(iy);
    iz = snap(iz);
    const bool inside = ix >= 0.0 && ix <= v.dims[0] - 1 && iy >= 0.0 &&
                        iy <= v.dims[1] - 1 && iz >= 0.0 && iz <= v.dims[2] - 1;
    if (ix <= -1.0 || ix >= v.dims[0] || iy <= -1.0 || iy >= v.dims[1] ||
        iz <= -1.0 || iz >= v.dims[2]) {
        return {0.0, false};
    }
    const int x0 = static_cast<int>(std::floor(ix));
    const int y0 = static_cast<int>(std::floor(iy));
    const int z0 = static_cast<int>(std::floor(iz));
    const double fx = ix - x0, fy = iy - y0, fz = iz - z0;

    auto sample = [&](int x, int y, int z) -> double {
        if (x < 0 || x >= v.dims[0] || y < 0 || y >= v.dims[1] || z < 0 ||
            z >= v.dims[2]) {
            return 0.0;  // zero fill
        }
        return v.at(x, y, z);
    };

    const double c00 = sample(x0, y0, z0) * (1 - fx) + sample(x0 + 1, y0, z0) * fx;
    const double c10 = sample(x0, y0 + 1, z0) * (1 - fx) + sample(x0 + 1, y0 + 1, z0) * fx;
    const double c01 = sample(x0, y0, z0 + 1) * (1 - fx) + sample(x0 + 1, y0, z0 + 1) * fx;
    const double c11 = sample(x0, y0 + 1, z0 + 1) * (1 - fx) + sample(x0 + 1, y0 + 1, z0 + 1) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return {c0 * (1 - fz) + c1 * fz, inside};
}

}  // namespace

double Volume::interp(const Eigen::Vector3d& p) const {
    return interp_index(*this, (p[0] - origin[0]) / spacing[0],
                        (p[1] - origin[1]) / spacing[1],
                        (p[2] - origin[2]) / spacing[2])
        .value;
}

double Volume::mean() const {
    double s = 0.0;
    for (float f : data) s += f;
    return data.empty() ? 0.0 : s / static_cast<double>(data.size());
}

double Volume::min_value() const {
    return data.empty() ? 0.0 : *std::min_element(data.begin(), data.end());
}

double Volume::max_value() const {
    return data.empty() ? 0.0 : *std::max_element(data.begin(), data.end());
}

Volume resample_to(const Volume& v, const Eigen::Matrix4d& t,
                   std::array<int, 3> dims, const Eigen::Vector3d& spacing,
                   const Eigen::Vector3d& origin, std::vector<uint8_t>* mask) {
    Volume out(dims, spacing, origin);
    if (mask) mask->assign(out.voxel_count(), 0);

    const Eigen::Matrix4d tinv = t.inverse();
    const Eigen::Matrix3d a = tinv.topLeftCorner<3, 3>();
    const Eigen::Vector3d b = tinv.topRightCorner<3, 1>();

    size_t idx = 0;
    for (int z = 0; z < dims[2]; ++z) {
        for (int y = 0; y < dims[1]; ++y) {
            for (int x = 0; x < dims[0]; ++x, ++idx) {
                const Eigen::Vector3d p = out.physical(x, y, z);
                const Eigen::Vector3d q = a * p + b;
                const InterpResult r =
                    interp_index(v, (q[0] - v.origin[0]) / v.spacing[0],
                                 (q[1] - v.origin[1]) / v.spacing[1],
                                 (q[2] - v.origin[2]) / v.spacing[2]);
                out.data[idx] = static_cast<float>(r.value);
                if (mask && r.inside) (*mask)[idx] = 1;
            }
        }
    }
    return out;
}

Volume resample(const Volume& v, const geom::RigidTransform& t) {
    return resample_to(v, t.m, v.dims, v.spacing, v.origin);
}

Observation difference_image(const Volume& ir, const Volume& iff,
                             const geom::RigidTransform& t) {
    if (!ir.same_grid(iff)) {
        throw DimMismatchError("difference_image: reference and floating grids differ");
    }
    Volume moved = resample(iff, t);
    Observation d = ir;
    for (size_t i = 0; i < d.data.size(); ++i) d.data[i] -= moved.data[i];
    return d;
}

Volume downsample(const Volume& v, int factor) {
    if (factor < 1) throw DimMismatchError("downsample: factor must be >= 1");
    if (factor == 1) return v;

    std::array<int, 3> nd;
    for (int i = 0; i < 3; ++i) nd[i] = (v.dims[i] + factor - 1) / factor;
    Volume out(nd, v.spacing * factor,
               v.origin + (factor - 1) / 2.0 * v.spacing);
    for (int z = 0; z < nd[2]; ++z) {
        for (int y = 0; y < nd[1]; ++y) {
            for (int x = 0; x < nd[0]; ++x) {
                double sum = 0.0;
                int n = 0;
                for (int dz = 0; dz < factor; ++dz) {
                    const int sz = z * factor + dz;
                    if (sz >= v.dims[2]) break;
                    for (int dy = 0; dy < factor; ++dy) {
                        const int sy = y * factor + dy;
                        if (sy >= v.dims[1]) break;
                        for (int dx = 0; dx < factor; ++dx) {
                            const int sx = x * factor + dx;
                            if (sx >= v.dims[0]) break;
                            sum += v.at(sx, sy, sz);
                            ++n;
                        }
                    }
                }
                out.at(x, y, z) = static_cast<float>(sum / n);
            }
        }
    }
    return out;
}

Volume crop_roi(const Volume& v, const Eigen::Vector3d& center_mm,
                std::array<int, 3> size) {
    std::array<int, 3> start;
    for (int i = 0; i < 3; ++i) {
        const int c = static_cast<int>(
            std::llround((center_mm[i] - v.origin[i]) / v.spacing[i]));
        start[i] = c - size[i] / 2;
    }
    Volume out(size, v.spacing,
               v.physical(start[0], start[1], start[2]));
    for (int z = 0; z < size[2]; ++z) {
        const int sz = start[2] + z;
        for (int y = 0; y < size[1]; ++y) {
            const int sy = start[1] + y;
            for (int x = 0; x < size[0]; ++x) {
                const int sx = start[0] + x;
                const bool in = sx >= 0 && sx < v.dims[0] && sy >= 0 &&
                                sy < v.dims[1] && sz >= 0 && sz < v.dims[2];
                out.at(x, y, z) = in ? v.at(sx, sy, sz) : 0.0f;
            }
        }
    }
    return out;
}

namespace {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

constexpr uint32_t kVolumeVersion = 1;
constexpr uint32_t kDtypeFloat32 = 1;

}  // namespace

void save_volume(const std::string& path, const Volume& v) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_volume: cannot open " + path);
    os.write("VREG", 4);
    write_raw(os, kVolumeVersion);
    write_raw(os, kDtypeFloat32);
    for (int i = 0; i < 3; ++i) write_raw(os, static_cast<uint32_t>(v.dims[i]));
    for (int i = 0; i < 3; ++i) write_raw(os, v.spacing[i]);
    for (int i = 0; i < 3; ++i) write_raw(os, v.origin[i]);
    os.write(reinterpret_cast<const char*>(v.data.data()),
             static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (!os) throw IoError("save_volume: write failed for " + path);
}

Volume load_volume(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_volume: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VREG", 4) != 0) {
        throw IoError("load_volume: bad magic in " + path);
    }
    const uint32_t version = read_raw<uint32_t>(is);
    const uint32_t dtype = read_raw<uint32_t>(is);
    if (version != kVolumeVersion || dtype != kDtypeFloat32) {
        throw IoError("load_volume: unsupported version/dtype in " + path);
    }
    Volume v;
    for (int i = 0; i < 3; ++i) v.dims[i] = static_cast<int>(read_raw<uint32_t>(is));
    for (int i = 0; i < 3; ++i) v.spacing[i] = read_raw<double>(is);
    for (int i = 0; i < 3; ++i) v.origin[i] = read_raw<double>(is);
    if (v.dims[0] <= 0 || v.dims[1] <= 0 || v.dims[2] <= 0) {
        throw IoError("load_volume: bad dims in " + path);
    }
    v.data.resize(v.voxel_count());
    is.read(reinterpret_cast<char*>(v.data.data()),
            static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (!is) throw IoError("load_volume: truncated raster in " + path);
    return v;
}

void save_landmarks_csv(const std::string& path,
                        const std::vector<Landmark>& lms) {
    std::ofstream os(path);
    if (!os) throw IoError("save_landmarks_csv: cannot open " + path);
    os << "id,x_mm,y_mm,z_mm\n";
    os.precision(17);
    for (const auto& lm : lms) {
        os << lm.id << "," << lm.p[0] << "," << lm.p[1] << "," << lm.p[2] << "\n";
    }
}

std::vector<Landmark> load_landmarks_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("load_landmarks_csv: cannot open " + path);
    std::vector<Landmark> lms;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        Landmark lm;
        std::string tok;
        std::getline(ss, lm.id, ',');
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(ss, tok, ',')) {
                throw IoError("load_landmarks_csv: malformed row: " + line);
            }
            lm.p[i] = std::stod(tok);
        }
        lms.push_back(std::move(lm));
    }
    return lms;
}

}  // namespace vreg::vol
