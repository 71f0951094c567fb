#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>

#include "premonn/point_cloud.hpp"

namespace premonn::geom3d {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// z = c0 + cx*x + cy*y + cxx*x^2 + cxy*x*y + cyy*y^2 in a local frame whose
/// columns are the local x, y and z (normal) axes in world coordinates.
struct LocalQuadric {
    Vec3 origin = Vec3::Zero();
    Mat3 frame = Mat3::Identity();
    std::array<double, 6> coeffs{};  // c0, cx, cy, cxx, cxy, cyy
    double fit_rms = 0.0;

    double value(double x, double y) const;
    /// gx, gy, gxx, gxy, gyy at local (x, y).
    std::array<double, 5> partials(double x, double y) const;
    Vec3 normal() const { return frame.col(2); }
    Vec3 to_world(const Vec3& local) const { return origin + frame * local; }
    Vec3 to_local(const Vec3& world) const { return frame.transpose() * (world - origin); }
    /// Surface point above the local origin, i.e. origin + c0 * normal.
    Vec3 projected_origin() const { return to_world(Vec3(0.0, 0.0, coeffs[0])); }
};

struct FundamentalForms {
    Mat2 a = Mat2::Identity();  // first form (metric)
    Mat2 b = Mat2::Zero();      // second form
};

struct PrincipalCurvatures {
    double kappa1 = 0.0;  // kappa1 >= kappa2
    double kappa2 = 0.0;
    Vec2 lambda1 = Vec2::UnitX();  // unit length in the a-metric
    Vec2 lambda2 = Vec2::UnitY();
    bool umbilic = false;
};

struct PrincipalData {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    Vec3 dir1 = Vec3::UnitX();
    Vec3 dir2 = Vec3::UnitY();
    Vec3 normal = Vec3::UnitZ();
    bool umbilic = false;
};

constexpr double kDefaultUmbilicTol = 1e-3;

/// Least-squares quadric over the neighbors of `p` within `radius`. The local
/// normal is the smallest-variance direction of the neighborhood, oriented
/// along `reference_normal` when given, otherwise away from the neighborhood
/// centroid (outward on convex patches).
LocalQuadric fit_local_quadric(const PointCloud& cloud, const Vec3& p, double radius,
                               const std::optional<Vec3>& reference_normal = std::nullopt);

/// Monge-patch forms with u1 = x, u2 = y.
FundamentalForms fundamental_forms(const LocalQuadric& q, double x = 0.0, double y = 0.0);

/// Roots of det(b - kappa a) = 0 and their directions.
PrincipalCurvatures principal_curvatures(const FundamentalForms& f, double umbilic_tol = kDefaultUmbilicTol);

/// Principal directions lifted to 3-space ([l1, l2, l1*gx + l2*gy], normalized)
/// and rotated into world coordinates.
std::array<Vec3, 2> embed_directions(const LocalQuadric& q, const Vec2& lambda1, const Vec2& lambda2,
                                     double x = 0.0, double y = 0.0);

/// Surface normal of the quadric at local (x, y), in world coordinates.
Vec3 surface_normal(const LocalQuadric& q, double x = 0.0, double y = 0.0);

/// forms -> principal curvatures -> embedded directions at local (0, 0).
PrincipalData principal_data(const LocalQuadric& q, double umbilic_tol = kDefaultUmbilicTol);

}  // namespace premonn::geom3d
