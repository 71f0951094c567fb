#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "premonn/point_cloud.hpp"
#include "premonn/raster.hpp"

namespace premonn::synthetic {

using geom3d::Vec3;

/// Seeded generator with platform-independent uniform/normal draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
    double normal();

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// --- time series -----------------------------------------------------------

/// Bank of nonlinear AR(2) sources y_t = F_n(y_{t-1}, y_{t-2}) + noise.
constexpr std::size_t kNarSources = 5;
double nar_map(std::size_t source, double y1, double y2);
/// `length` samples after a burn-in from a random start.
std::vector<double> nar_series(std::size_t source, std::size_t length, double noise_std, Rng& rng);
/// Source `first` for `switch_at` samples, then source `second`, continuing the same state.
std::vector<double> nar_switching_series(std::size_t first, std::size_t second, std::size_t length,
                                         std::size_t switch_at, double noise_std, Rng& rng);

// --- binary shapes ---------------------------------------------------------

BinaryMask disk_mask(int width, int height, double cx, double cy, double r);
/// Axis-aligned filled rectangle [x0, x1] x [y0, y1] (inclusive pixels).
BinaryMask rectangle_mask(int width, int height, int x0, int y0, int x1, int y1);

/// Closed star-shaped outline r(t) = r0 * (1 + sum_k a_k cos(k t + phi_k)).
struct ShapeOutline {
    double r0 = 30.0;
    std::vector<double> amp;    // harmonic k = index + 2
    std::vector<double> phase;

    double radius(double t) const;
};

ShapeOutline random_outline(Rng& rng, double r0, std::size_t harmonics = 3, double max_amp = 0.12);

/// Silhouette under a view rotation `angle` (radians) about the vertical
/// axis, emulated by a horizontal foreshortening and a shear that both
/// depend on the angle, so distinct views have distinct outlines.
BinaryMask render_outline(const ShapeOutline& shape, double angle, int size = 128);

/// Silhouette under x -> squash * x + shear * y about the image centre.
BinaryMask render_slanted(const ShapeOutline& shape, double squash, double shear, int size = 128);

// --- textures --------------------------------------------------------------

enum class TextureKind { grating_h, grating_d, checkerboard, blue_noise };
constexpr std::size_t kTextureKinds = 4;

/// Texture sample on [0, 1]. Random phase for periodic kinds; colour adds
/// three channels with channel-specific modulations.
RasterField texture(TextureKind kind, int width, int height, bool colour, Rng& rng);

// --- point clouds ----------------------------------------------------------

/// Cylinder about the z axis: |z| <= half_height, roughly uniform spacing h.
std::vector<Vec3> cylinder_points(double radius, double half_height, double h, double jitter, Rng& rng);
/// Torus about the z axis with tube radius r.
std::vector<Vec3> torus_points(double big_r, double r, double h, double jitter, Rng& rng);
/// z = x^2 - y^2 (scaled) over |x|, |y| <= half_extent.
std::vector<Vec3> saddle_points(double scale, double half_extent, double h, double jitter, Rng& rng);
/// Axis-aligned ellipsoid with semi-axes (a, b, c); about `n` points.
std::vector<Vec3> ellipsoid_points(double a, double b, double c, std::size_t n, double jitter, Rng& rng);
std::vector<Vec3> sphere_points(double radius, std::size_t n, double jitter, Rng& rng);
/// z = 0 over |x|, |y| <= half_extent.
std::vector<Vec3> plane_points(double half_extent, double h, double jitter, Rng& rng);

struct RigidMotion {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

RigidMotion random_motion(Rng& rng, double max_translation = 10.0);
std::vector<Vec3> transform(const std::vector<Vec3>& pts, const RigidMotion& m);

}  // namespace premonn::synthetic
