#include <doctest.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "premonn/curvature_mesh.hpp"
#include "premonn/error.hpp"
#include "premonn/point_cloud.hpp"
#include "premonn/surface.hpp"
#include "premonn/synthetic.hpp"

using namespace premonn;
using namespace premonn::geom3d;

namespace {

LocalQuadric quadric(double cx, double cy, double cxx, double cxy, double cyy) {
    LocalQuadric q;
    q.coeffs = {0.0, cx, cy, cxx, cxy, cyy};
    return q;
}

MeshConfig small_mesh() {
    MeshConfig mc;
    mc.extent_u1 = mc.extent_u2 = 4;
    mc.ds = 0.5;
    return mc;
}

CurvatureMesh cylinder_mesh(double r, std::uint64_t seed) {
    synthetic::Rng rng(seed);
    const PointCloud cloud(synthetic::cylinder_points(r, 5.0, 0.12, 0.3, rng));
    return build_curvature_mesh(cloud, Vec3(r, 0.0, 0.0), small_mesh());
}

}  // namespace

TEST_SUITE("geom3d") {

TEST_CASE("kd-tree agrees with brute force") {
    synthetic::Rng rng(3);
    std::vector<Vec3> pts;
    for (int k = 0; k < 600; ++k) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const PointCloud cloud(pts);
    for (int t = 0; t < 40; ++t) {
        const Vec3 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        std::vector<std::size_t> want;
        std::size_t best = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if ((pts[i] - q).norm() <= 0.3) want.push_back(i);
            if ((pts[i] - q).norm() < (pts[best] - q).norm()) best = i;
        }
        CHECK(cloud.radius_search(q, 0.3) == want);
        CHECK(cloud.nearest(q) == best);
    }
}

TEST_CASE("xyz and ply readers") {
    std::stringstream xyz("# comment\n0 0 0\n\n1 2 3\n");
    const auto c = read_xyz(xyz);
    REQUIRE(c.size() == 2);
    CHECK(c.points()[1] == Vec3(1, 2, 3));
    std::stringstream bad("1 2\n");
    CHECK_THROWS_AS(read_xyz(bad), DataError);
    std::stringstream ply(
        "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nend_header\n0 0 1 255\n1 0 0 0\n");
    const auto p = read_ply(ply);
    REQUIRE(p.size() == 2);
    CHECK(p.points()[0] == Vec3(0, 0, 1));
    std::stringstream binary("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
    CHECK_THROWS_AS(read_ply(binary), DataError);
    std::stringstream round;
    write_xyz(round, c);
    CHECK(read_xyz(round).points() == c.points());
}

TEST_CASE("quadric fit: plane and sphere") {
    synthetic::Rng rng(5);
    const PointCloud plane(synthetic::plane_points(3.0, 0.1, 0.3, rng));
    const auto q = fit_local_quadric(plane, Vec3(0.2, -0.1, 0.0), 0.5);
    for (std::size_t k = 3; k < 6; ++k) CHECK(std::abs(q.coeffs[k]) < 1e-9);
    CHECK(std::abs(std::abs(q.normal().z()) - 1.0) < 1e-9);
    CHECK(principal_data(q).umbilic);

    const PointCloud sphere(synthetic::sphere_points(5.0, 40000, 0.0, rng));
    const auto s = fit_local_quadric(sphere, Vec3(0.0, 0.0, 5.0), 0.8);
    CHECK(s.normal().z() > 0.99);
    CHECK(s.coeffs[3] == doctest::Approx(-0.1).epsilon(0.05));
    CHECK(s.coeffs[5] == doctest::Approx(-0.1).epsilon(0.05));
    CHECK(std::abs(s.coeffs[4]) < 0.01);
    const auto d = principal_data(s);
    CHECK(d.kappa1 == doctest::Approx(-0.2).epsilon(0.05));
    CHECK(d.kappa2 == doctest::Approx(-0.2).epsilon(0.05));

    std::vector<Vec3> five;
    for (int k = 0; k < 5; ++k) five.emplace_back(0.1 * k, 0.05 * k * k, 0.0);
    CHECK_THROWS_AS(fit_local_quadric(PointCloud(five), Vec3::Zero(), 10.0), InvalidArgument);
    CHECK_THROWS_AS(fit_local_quadric(plane, Vec3::Zero(), 0.0), InvalidArgument);
}

TEST_CASE("forms and principal curvatures") {
    const auto q = quadric(0, 0, 1.0, 0.0, 3.0);
    const auto f = fundamental_forms(q);
    CHECK(f.a.isApprox(Mat2::Identity()));
    CHECK(f.b.isApprox((Mat2() << 2, 0, 0, 6).finished()));
    const auto pc = principal_curvatures(f);
    CHECK(pc.kappa1 == doctest::Approx(6.0));
    CHECK(pc.kappa2 == doctest::Approx(2.0));
    CHECK(std::abs(pc.lambda1.x()) < 1e-12);
    CHECK(std::abs(std::abs(pc.lambda1.y()) - 1.0) < 1e-12);
    CHECK_FALSE(pc.umbilic);

    CHECK(principal_curvatures(fundamental_forms(quadric(0.3, 0, 0, 0, 0))).umbilic);
    FundamentalForms bad;
    bad.a = Mat2::Zero();
    CHECK_THROWS_AS(principal_curvatures(bad), InvalidArgument);
}

TEST_CASE("principal directions are a-orthonormal and match the graph oracle") {
    synthetic::Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const double gx = rng.uniform(-1, 1), gy = rng.uniform(-1, 1);
        const double cxx = rng.uniform(-2, 2), cxy = rng.uniform(-2, 2), cyy = rng.uniform(-2, 2);
        const auto f = fundamental_forms(quadric(gx, gy, cxx, cxy, cyy));
        const auto pc = principal_curvatures(f, 0.0);
        CHECK(pc.lambda1.dot(f.a * pc.lambda1) == doctest::Approx(1.0));
        CHECK(pc.lambda2.dot(f.a * pc.lambda2) == doctest::Approx(1.0));
        CHECK(std::abs(pc.lambda1.dot(f.a * pc.lambda2)) < 1e-9);
        const auto want = oracle::graph_curvatures(gx, gy, 2 * cxx, cxy, 2 * cyy);
        CHECK(pc.kappa1 == doctest::Approx(want[0]).epsilon(1e-9));
        CHECK(pc.kappa2 == doctest::Approx(want[1]).epsilon(1e-9));
        // Each direction solves (b - kappa a) lambda = 0.
        CHECK(((f.b - pc.kappa1 * f.a) * pc.lambda1).norm() < 1e-8 * (1 + std::abs(pc.kappa1)));
        CHECK(((f.b - pc.kappa2 * f.a) * pc.lambda2).norm() < 1e-8 * (1 + std::abs(pc.kappa2)));
    }
}

TEST_CASE("embed_directions lifts onto the tangent plane") {
    const auto q = quadric(1.0, 0.0, 0.0, 0.0, 0.0);
    const auto dirs = embed_directions(q, Vec2(1, 0), Vec2(0, 1));
    CHECK(dirs[0].isApprox(Vec3(1, 0, 1).normalized()));
    CHECK(dirs[1].isApprox(Vec3(0, 1, 0)));
    CHECK(std::abs(dirs[0].dot(surface_normal(q))) < 1e-12);
    CHECK_THROWS_AS(embed_directions(q, Vec2::Zero(), Vec2(0, 1)), InvalidArgument);

    const auto curved = quadric(0.4, -0.7, 0.5, 0.2, -0.3);
    const auto d = principal_data(curved);
    CHECK(std::abs(d.dir1.dot(d.dir2)) < 1e-9);
    CHECK(std::abs(d.dir1.dot(d.normal)) < 1e-9);
}

TEST_CASE("curvatures survive a rigid motion") {
    synthetic::Rng rng(12);
    const auto pts = synthetic::torus_points(10.0, 3.0, 0.12, 0.3, rng);
    const auto m = synthetic::random_motion(rng);
    const PointCloud a(pts), b(synthetic::transform(pts, m));
    const Vec3 p = pts[pts.size() / 3];
    const auto da = principal_data(fit_local_quadric(a, p, 0.5));
    const auto db = principal_data(fit_local_quadric(b, m.apply(p), 0.5));
    CHECK(da.kappa1 == doctest::Approx(db.kappa1).epsilon(1e-6));
    CHECK(da.kappa2 == doctest::Approx(db.kappa2).epsilon(1e-6));
    CHECK((m.rotation * da.normal).isApprox(db.normal, 1e-6));
}

TEST_CASE("mesh seeds on umbilic or distant points are rejected") {
    synthetic::Rng rng(6);
    const PointCloud plane(synthetic::plane_points(3.0, 0.1, 0.3, rng));
    CHECK_THROWS_AS(build_curvature_mesh(plane, Vec3::Zero(), small_mesh()), NumericalError);
    const PointCloud sphere(synthetic::sphere_points(5.0, 40000, 0.0, rng));
    CHECK_THROWS_AS(build_curvature_mesh(sphere, Vec3(0, 0, 5), small_mesh()), NumericalError);
    const PointCloud cyl(synthetic::cylinder_points(4.0, 3.0, 0.12, 0.3, rng));
    CHECK_THROWS_AS(build_curvature_mesh(cyl, Vec3(40, 0, 0), small_mesh()), InvalidArgument);
    MeshConfig bad = small_mesh();
    bad.ds = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("cylinder mesh carries the cylinder curvatures") {
    const auto mesh = cylinder_mesh(4.0, 21);
    CHECK(mesh.at(0, 0).status == NodeStatus::ok);
    CHECK(mesh.at(0, 0).position.isApprox(Vec3(4, 0, 0), 0.05));
    std::size_t ok = 0, good = 0;
    for (const auto& n : mesh.nodes()) {
        if (n.status != NodeStatus::ok) continue;
        ++ok;
        good += std::abs(n.kappa1) < 0.02 && std::abs(n.kappa2 + 0.25) < 0.02;
        CHECK(std::abs(n.position.head<2>().norm() - 4.0) < 0.05);
    }
    CHECK(ok >= 70);
    CHECK(static_cast<double>(good) / static_cast<double>(ok) >= 0.9);

    const auto field = mesh_channels(mesh);
    CHECK(field.channels() == 2);
    CHECK(field.width() == 9);
    CHECK(field.at(4, 4, 1) == mesh.at(0, 0).kappa2);

    std::stringstream ss;
    write_mesh(ss, mesh);
    std::size_t rows = 0;
    for (std::string line; std::getline(ss, line);) rows += !line.empty() && line[0] != '#';
    CHECK(rows == 81);
}

TEST_CASE("surface errors separate cylinders of radius 4 and 8") {
    const auto domain = scan2d::canonical_domain(1, 1);
    const auto m4 = cylinder_mesh(4.0, 22), m8 = cylinder_mesh(8.0, 23);
    scan2d::ScanModel model{domain, {train_surface_group(m4, domain, {}, {})}};
    const auto path = mesh_scan_path(m8, domain);
    const auto errors = surface_scan_errors(m8, domain, path, model);
    double mean = 0.0;
    for (const auto& e : errors) mean += e[0];
    mean /= static_cast<double>(errors.size());
    CHECK(mean == doctest::Approx(0.125).epsilon(0.15));

    double self = 0.0;
    for (const auto& e : surface_scan_errors(m4, domain, mesh_scan_path(m4, domain), model)) self += e[0];
    CHECK(self / static_cast<double>(errors.size()) < 0.02);

    CHECK_THROWS_AS(mesh_scan_path(m8, domain, scan2d::Anchor{0, 0}), InvalidArgument);
}

}  // TEST_SUITE
