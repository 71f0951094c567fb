#include "premonn/synthetic.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "premonn/error.hpp"

namespace premonn::synthetic {

namespace {
constexpr double kPi = std::numbers::pi;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 kept away from 0.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

double nar_map(std::size_t source, double y1, double y2) {
    switch (source) {
        case 0: return 1.2 * std::tanh(y1) - 0.5 * y2;
        case 1: return -0.9 * std::tanh(1.5 * y1) + 0.3 * y2;
        case 2: return std::sin(3.0 * y1) - 0.4 * y2 + 0.5;
        case 3: return 0.9 * std::cos(2.2 * y1) - 0.3 * y2;
        case 4: return 0.5 * y1 - 0.7 * y2 + 0.4 * y1 * y1 - 0.2;
        default: throw InvalidArgument("nar_map: unknown source");
    }
}

std::vector<double> nar_switching_series(std::size_t first, std::size_t second, std::size_t length,
                                         std::size_t switch_at, double noise_std, Rng& rng) {
    if (first >= kNarSources || second >= kNarSources) throw InvalidArgument("nar series: unknown source");
    double y1 = rng.uniform(-0.5, 0.5), y2 = rng.uniform(-0.5, 0.5);
    for (int k = 0; k < 50; ++k) {
        const double y = nar_map(first, y1, y2) + noise_std * rng.normal();
        y2 = y1;
        y1 = y;
    }
    std::vector<double> out;
    out.reserve(length);
    for (std::size_t t = 0; t < length; ++t) {
        const double y = nar_map(t < switch_at ? first : second, y1, y2) + noise_std * rng.normal();
        out.push_back(y);
        y2 = y1;
        y1 = y;
    }
    return out;
}

std::vector<double> nar_series(std::size_t source, std::size_t length, double noise_std, Rng& rng) {
    return nar_switching_series(source, source, length, length, noise_std, rng);
}

BinaryMask disk_mask(int width, int height, double cx, double cy, double r) {
    BinaryMask m(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
    return m;
}

BinaryMask rectangle_mask(int width, int height, int x0, int y0, int x1, int y1) {
    BinaryMask m(width, height);
    for (int y = std::max(0, y0); y <= std::min(height - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(width - 1, x1); ++x) m.set(x, y);
    return m;
}

double ShapeOutline::radius(double t) const {
    double f = 1.0;
    for (std::size_t k = 0; k < amp.size(); ++k) f += amp[k] * std::cos(static_cast<double>(k + 2) * t + phase[k]);
    return r0 * f;
}

ShapeOutline random_outline(Rng& rng, double r0, std::size_t harmonics, double max_amp) {
    ShapeOutline s;
    s.r0 = r0;
    for (std::size_t k = 0; k < harmonics; ++k) {
        s.amp.push_back(rng.uniform(0.25, 1.0) * max_amp);
        s.phase.push_back(rng.uniform(0.0, 2.0 * kPi));
    }
    return s;
}

BinaryMask render_outline(const ShapeOutline& shape, double angle, int size) {
    return render_slanted(shape, 0.7 + 0.3 * std::cos(angle), 0.35 * std::sin(angle), size);
}

BinaryMask render_slanted(const ShapeOutline& shape, double squash, double shear, int size) {
    if (!(squash > 0.0) || size < 1) throw InvalidArgument("render_slanted: bad squash or size");
    const double c = 0.5 * (size - 1);
    BinaryMask m(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double v = y - c;
            const double u = (x - c - shear * v) / squash;
            if (std::hypot(u, v) <= shape.radius(std::atan2(v, u))) m.set(x, y);
        }
    return m;
}

RasterField texture(TextureKind kind, int width, int height, bool colour, Rng& rng) {
    if (width < 1 || height < 1) throw InvalidArgument("texture: empty size");
    const int channels = colour ? 3 : 1;
    RasterField f(width, height, channels);
    constexpr double period = 8.0;
    for (int c = 0; c < channels; ++c) {
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        const int ox = static_cast<int>(rng.index(8)), oy = static_cast<int>(rng.index(8));
        // Colour channels differ in contrast and polarity.
        const double gain = c == 0 ? 1.0 : (c == 1 ? -0.7 : 0.45);
        std::vector<double> noise;
        if (kind == TextureKind::blue_noise) {
            std::vector<double> white(static_cast<std::size_t>(width + 2) * static_cast<std::size_t>(height + 2));
            for (double& w : white) w = rng.uniform();
            const auto at = [&](int x, int y) { return white[static_cast<std::size_t>(y + 1) * (width + 2) + (x + 1)]; };
            noise.resize(static_cast<std::size_t>(width) * height);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    double box = 0.0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) box += at(x + dx, y + dy);
                    noise[static_cast<std::size_t>(y) * width + x] = at(x, y) - box / 9.0;
                }
        }
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double v = 0.0;  // on [-0.5, 0.5]
                switch (kind) {
                    case TextureKind::grating_h: v = 0.5 * std::sin(2.0 * kPi * x / period + phase); break;
                    case TextureKind::grating_d: v = 0.5 * std::sin(2.0 * kPi * (x + y) / period + phase); break;
                    case TextureKind::checkerboard: v = (((x + ox) / 4 + (y + oy) / 4) % 2 == 0) ? 0.4 : -0.4; break;
                    case TextureKind::blue_noise: v = 1.2 * noise[static_cast<std::size_t>(y) * width + x]; break;
                }
                f.at(x, y, c) = std::clamp(0.5 + gain * v, 0.0, 1.0);
            }
    }
    return f;
}

std::vector<Vec3> cylinder_points(double radius, double half_height, double h, double jitter, Rng& rng) {
    if (!(radius > 0.0) || !(h > 0.0)) throw InvalidArgument("cylinder_points: bad size");
    const int nt = std::max(8, static_cast<int>(std::lround(2.0 * kPi * radius / h)));
    const int nz = static_cast<int>(std::floor(half_height / h));
    std::vector<Vec3> pts;
    for (int k = -nz; k <= nz; ++k)
        for (int i = 0; i < nt; ++i) {
            const double t = (i + jitter * rng.uniform(-0.5, 0.5)) * 2.0 * kPi / nt;
            const double z = (k + jitter * rng.uniform(-0.5, 0.5)) * h;
            pts.emplace_back(radius * std::cos(t), radius * std::sin(t), z);
        }
    return pts;
}

std::vector<Vec3> torus_points(double big_r, double r, double h, double jitter, Rng& rng) {
    if (!(r > 0.0) || !(big_r > r) || !(h > 0.0)) throw InvalidArgument("torus_points: bad size");
    const int nv = std::max(8, static_cast<int>(std::lround(2.0 * kPi * r / h)));
    std::vector<Vec3> pts;
    for (int j = 0; j < nv; ++j) {
        const double v = (j + jitter * rng.uniform(-0.5, 0.5)) * 2.0 * kPi / nv;
        const double ring = big_r + r * std::cos(v);
        const int nu = std::max(8, static_cast<int>(std::lround(2.0 * kPi * ring / h)));
        const double u0 = rng.uniform(0.0, 2.0 * kPi / nu);
        for (int i = 0; i < nu; ++i) {
            const double u = u0 + (i + jitter * rng.uniform(-0.5, 0.5)) * 2.0 * kPi / nu;
            pts.emplace_back(ring * std::cos(u), ring * std::sin(u), r * std::sin(v));
        }
    }
    return pts;
}

std::vector<Vec3> saddle_points(double scale, double half_extent, double h, double jitter, Rng& rng) {
    const int n = static_cast<int>(std::floor(half_extent / h));
    std::vector<Vec3> pts;
    for (int j = -n; j <= n; ++j)
        for (int i = -n; i <= n; ++i) {
            const double x = (i + jitter * rng.uniform(-0.5, 0.5)) * h;
            const double y = (j + jitter * rng.uniform(-0.5, 0.5)) * h;
            pts.emplace_back(x, y, scale * (x * x - y * y));
        }
    return pts;
}

std::vector<Vec3> ellipsoid_points(double a, double b, double c, std::size_t n, double jitter, Rng& rng) {
    if (n < 6) throw InvalidArgument("ellipsoid_points: need at least 6 points");
    // Fibonacci lattice on the unit sphere, then scaled.
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k) + 0.5 + jitter * rng.uniform(-0.5, 0.5);
        const double z = 1.0 - 2.0 * kk / static_cast<double>(n);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double t = golden * static_cast<double>(k) + jitter * rng.uniform(-0.5, 0.5) * 0.1;
        pts.emplace_back(a * rho * std::cos(t), b * rho * std::sin(t), c * z);
    }
    return pts;
}

std::vector<Vec3> sphere_points(double radius, std::size_t n, double jitter, Rng& rng) {
    return ellipsoid_points(radius, radius, radius, n, jitter, rng);
}

std::vector<Vec3> plane_points(double half_extent, double h, double jitter, Rng& rng) {
    return saddle_points(0.0, half_extent, h, jitter, rng);
}

RigidMotion random_motion(Rng& rng, double max_translation) {
    // Uniform random unit quaternion.
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const Eigen::Quaterniond q(std::sqrt(u1) * std::cos(2.0 * kPi * u3), std::sqrt(1.0 - u1) * std::sin(2.0 * kPi * u2),
                               std::sqrt(1.0 - u1) * std::cos(2.0 * kPi * u2), std::sqrt(u1) * std::sin(2.0 * kPi * u3));
    RigidMotion m;
    m.rotation = q.normalized().toRotationMatrix();
    for (int k = 0; k < 3; ++k) m.translation[k] = rng.uniform(-max_translation, max_translation);
    return m;
}

std::vector<Vec3> transform(const std::vector<Vec3>& pts, const RigidMotion& m) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(m.apply(p));
    return out;
}

}  // namespace premonn::synthetic
