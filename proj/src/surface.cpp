#include "premonn/surface.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "premonn/error.hpp"

namespace premonn::geom3d {

double LocalQuadric::value(double x, double y) const {
    const auto& c = coeffs;
    return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
}

std::array<double, 5> LocalQuadric::partials(double x, double y) const {
    const auto& c = coeffs;
    return {c[1] + 2.0 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2.0 * c[5] * y, 2.0 * c[3], c[4], 2.0 * c[5]};
}

LocalQuadric fit_local_quadric(const PointCloud& cloud, const Vec3& p, double radius,
                               const std::optional<Vec3>& reference_normal) {
    if (!(radius > 0.0)) throw InvalidArgument("fit_local_quadric: radius must be > 0");
    const auto idx = cloud.radius_search(p, radius);
    if (idx.size() < 6) throw InvalidArgument("fit_local_quadric: fewer than 6 neighbors within radius");

    Vec3 centroid = Vec3::Zero();
    for (auto i : idx) centroid += cloud.points()[i];
    centroid /= static_cast<double>(idx.size());
    Mat3 cov = Mat3::Zero();
    for (auto i : idx) {
        const Vec3 d = cloud.points()[i] - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 n = eig.eigenvectors().col(0).normalized();

    if (reference_normal) {
        if (n.dot(*reference_normal) < 0.0) n = -n;
    } else {
        const double lean = n.dot(p - centroid);
        if (std::abs(lean) > 1e-9 * radius) {
            if (lean < 0.0) n = -n;
        } else {
            int k = 0;
            n.cwiseAbs().maxCoeff(&k);
            if (n[k] < 0.0) n = -n;
        }
    }

    // Complete the frame with the world axis least aligned with the normal.
    int least = 0;
    n.cwiseAbs().minCoeff(&least);
    Vec3 e = Vec3::Zero();
    e[least] = 1.0;
    const Vec3 ex = (e - e.dot(n) * n).normalized();
    const Vec3 ey = n.cross(ex);

    LocalQuadric q;
    q.origin = p;
    q.frame.col(0) = ex;
    q.frame.col(1) = ey;
    q.frame.col(2) = n;

    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd a(m, 6);
    Eigen::VectorXd rhs(m);
    const double inv_r = 1.0 / radius;
    for (Eigen::Index r = 0; r < m; ++r) {
        const Vec3 l = q.to_local(cloud.points()[idx[static_cast<std::size_t>(r)]]) * inv_r;
        a.row(r) << 1.0, l.x(), l.y(), l.x() * l.x(), l.x() * l.y(), l.y() * l.y();
        rhs[r] = l.z();
    }
    const auto qr = a.colPivHouseholderQr();
    if (qr.rank() < 6) throw NumericalError("fit_local_quadric: degenerate neighborhood (rank-deficient fit)");
    const Eigen::VectorXd sol = qr.solve(rhs);
    // Undo the 1/radius scaling: z/r = sum s_k (x/r)^i (y/r)^j.
    q.coeffs = {sol[0] * radius, sol[1], sol[2], sol[3] * inv_r, sol[4] * inv_r, sol[5] * inv_r};
    const Eigen::VectorXd resid = a * sol - rhs;
    q.fit_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(m)) * radius;
    return q;
}

FundamentalForms fundamental_forms(const LocalQuadric& q, double x, double y) {
    const auto [gx, gy, gxx, gxy, gyy] = q.partials(x, y);
    const double w = std::sqrt(1.0 + gx * gx + gy * gy);
    FundamentalForms f;
    f.a << 1.0 + gx * gx, gx * gy, gx * gy, 1.0 + gy * gy;
    f.b << gxx / w, gxy / w, gxy / w, gyy / w;
    return f;
}

namespace {

// Null vector of a (nearly) singular symmetric 2x2 matrix from its larger row.
Vec2 null_vector(const Mat2& m) {
    const Vec2 r0(m(0, 0), m(0, 1));
    const Vec2 r1(m(1, 0), m(1, 1));
    const Vec2& r = r0.squaredNorm() >= r1.squaredNorm() ? r0 : r1;
    return Vec2(-r.y(), r.x());
}

Vec2 a_normalize(const Vec2& v, const Mat2& a) { return v / std::sqrt(v.dot(a * v)); }

// The a-orthogonal complement of v: (a v) rotated by 90 degrees.
Vec2 a_complement(const Vec2& v, const Mat2& a) {
    const Vec2 av = a * v;
    return Vec2(-av.y(), av.x());
}

}  // namespace

PrincipalCurvatures principal_curvatures(const FundamentalForms& f, double umbilic_tol) {
    const Mat2& a = f.a;
    const Mat2& b = f.b;
    const double det_a = a.determinant();
    if (!(a(0, 0) > 0.0) || !(det_a > 0.0)) throw InvalidArgument("principal_curvatures: first form is not positive definite");

    // det a * k^2 - (a11 b22 + a22 b11 - 2 a12 b12) k + det b = 0
    const double qa = det_a;
    const double qb = -(a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - 2.0 * a(0, 1) * b(0, 1));
    const double qc = b.determinant();
    double disc = qb * qb - 4.0 * qa * qc;
    const double scale = qb * qb + std::abs(4.0 * qa * qc);
    if (disc < 0.0) {
        if (disc < -1e-10 * scale - 1e-300) throw NumericalError("principal_curvatures: negative discriminant");
        disc = 0.0;
    }
    const double sq = std::sqrt(disc);
    double k1, k2;
    const double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
    if (qq == 0.0) {
        k1 = k2 = 0.0;
    } else {
        const double r1 = qq / qa, r2 = qc / qq;
        k1 = std::max(r1, r2);
        k2 = std::min(r1, r2);
    }

    PrincipalCurvatures out;
    out.kappa1 = k1;
    out.kappa2 = k2;
    out.umbilic = std::abs(k1 - k2) <= umbilic_tol * (1.0 + std::abs(k1) + std::abs(k2));
    if (out.umbilic) {
        out.lambda1 = a_normalize(Vec2::UnitX(), a);
    } else {
        const Vec2 v = null_vector(b - k1 * a);
        if (v.squaredNorm() == 0.0) throw NumericalError("principal_curvatures: degenerate principal direction");
        out.lambda1 = a_normalize(v, a);
    }
    // Deterministic sign: first nonzero component positive.
    if (out.lambda1.x() < 0.0 || (out.lambda1.x() == 0.0 && out.lambda1.y() < 0.0)) out.lambda1 = -out.lambda1;
    out.lambda2 = a_normalize(a_complement(out.lambda1, a), a);
    return out;
}

std::array<Vec3, 2> embed_directions(const LocalQuadric& q, const Vec2& lambda1, const Vec2& lambda2, double x,
                                     double y) {
    if (lambda1.squaredNorm() == 0.0 || lambda2.squaredNorm() == 0.0)
        throw InvalidArgument("embed_directions: zero direction vector");
    const auto g = q.partials(x, y);
    auto lift = [&](const Vec2& l) {
        const Vec3 local(l.x(), l.y(), l.x() * g[0] + l.y() * g[1]);
        return Vec3(q.frame * local.normalized());
    };
    return {lift(lambda1), lift(lambda2)};
}

Vec3 surface_normal(const LocalQuadric& q, double x, double y) {
    const auto g = q.partials(x, y);
    return q.frame * Vec3(-g[0], -g[1], 1.0).normalized();
}

PrincipalData principal_data(const LocalQuadric& q, double umbilic_tol) {
    const auto pc = principal_curvatures(fundamental_forms(q), umbilic_tol);
    const auto dirs = embed_directions(q, pc.lambda1, pc.lambda2);
    PrincipalData d;
    d.kappa1 = pc.kappa1;
    d.kappa2 = pc.kappa2;
    d.dir1 = dirs[0];
    d.dir2 = dirs[1];
    d.normal = surface_normal(q);
    d.umbilic = pc.umbilic;
    return d;
}

}  // namespace premonn::geom3d
