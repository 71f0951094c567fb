#include "premonn/curvature_mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "premonn/error.hpp"

namespace premonn::geom3d {

using scan2d::Anchor;
using scan2d::ScanDomain;
using scan2d::ScanPath;

const char* to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::ok: return "ok";
        case NodeStatus::boundary: return "boundary";
        case NodeStatus::failed: return "failed";
    }
    return "failed";
}

void MeshConfig::validate() const {
    if (!(ds > 0.0)) throw InvalidArgument("mesh: ds must be > 0");
    if (extent_u1 < 0 || extent_u2 < 0) throw InvalidArgument("mesh: extents must be >= 0");
    if (!(umbilic_tol >= 0.0)) throw InvalidArgument("mesh: umbilic_tol must be >= 0");
    if (!(agree_tol > 0.0)) throw InvalidArgument("mesh: agree_tol must be > 0");
}

CurvatureMesh::CurvatureMesh(int extent_u1, int extent_u2, double ds)
    : e1_(extent_u1), e2_(extent_u2), ds_(ds),
      nodes_(static_cast<std::size_t>(2 * extent_u1 + 1) * static_cast<std::size_t>(2 * extent_u2 + 1)) {}

std::size_t CurvatureMesh::index(int u1, int u2) const {
    if (!contains(u1, u2)) throw InvalidArgument("mesh index out of range");
    return static_cast<std::size_t>(u2 + e2_) * static_cast<std::size_t>(width()) + static_cast<std::size_t>(u1 + e1_);
}

std::size_t CurvatureMesh::count(NodeStatus s) const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [s](const MeshNode& n) { return n.status == s; }));
}

namespace {

Vec3 aligned(const Vec3& d, const Vec3& ref) { return d.dot(ref) < 0.0 ? Vec3(-d) : d; }

Vec3 tangential(const Vec3& v, const Vec3& n) {
    const Vec3 t = v - v.dot(n) * n;
    const double len = t.norm();
    return len > 0.0 ? Vec3(t / len) : v;
}

struct Sample {
    NodeStatus status = NodeStatus::failed;
    Vec3 position = Vec3::Zero();
    PrincipalData data;
};

class Marcher {
public:
    Marcher(const PointCloud& cloud, double radius, double tol) : cloud_(cloud), r_(radius), tol_(tol) {}

    // Surface point near p with its principal data; the normal is oriented
    // along `ref` so the sign convention carries over from the parent node.
    Sample evaluate(const Vec3& p, const std::optional<Vec3>& ref) const {
        Sample s;
        try {
            if (cloud_.distance_to(p) > 0.5 * r_) {
                s.status = NodeStatus::boundary;
                return s;
            }
            const LocalQuadric q0 = fit_local_quadric(cloud_, p, r_, ref);
            const Vec3 projected = q0.projected_origin();
            const LocalQuadric q = fit_local_quadric(cloud_, projected, r_, ref ? ref : std::optional<Vec3>(q0.normal()));
            if (one_sided(q)) {
                s.status = NodeStatus::boundary;
                return s;
            }
            s.position = q.projected_origin();
            s.data = principal_data(q, tol_);
            s.status = NodeStatus::ok;
        } catch (const InvalidArgument&) {
            s.status = NodeStatus::boundary;
        } catch (const NumericalError&) {
            s.status = NodeStatus::failed;
        }
        return s;
    }

    // Heun step of length h from `from` along the line whose tangent is
    // `dir` (family 0 = u1-lines, 1 = u2-lines).
    Sample step(const MeshNode& from, const Vec3& dir, int family, double h) const {
        const Vec3 p1 = from.position + h * dir;
        const Sample mid = evaluate(p1, from.normal);
        if (mid.status != NodeStatus::ok) return mid;
        const Vec3 d2 = aligned(direction(mid, family, dir), dir);
        const Vec3 avg = (dir + d2).normalized();
        return evaluate(from.position + h * avg, from.normal);
    }

    // Principal direction of the given family; at umbilics the incoming
    // direction is kept (inertia).
    static Vec3 direction(const Sample& s, int family, const Vec3& incoming) {
        if (s.data.umbilic) return tangential(incoming, s.data.normal);
        return family == 0 ? s.data.dir1 : s.data.dir2;
    }

private:
    bool one_sided(const LocalQuadric& q) const {
        const auto idx = cloud_.radius_search(q.origin, r_);
        Vec3 mean = Vec3::Zero();
        for (auto i : idx) mean += q.to_local(cloud_.points()[i]);
        mean /= static_cast<double>(idx.size());
        return std::hypot(mean.x(), mean.y()) > 0.35 * r_;
    }

    const PointCloud& cloud_;
    double r_;
    double tol_;
};

void fill_node(MeshNode& node, const Sample& s, const Vec3& t1_ref, const Vec3& t2_ref) {
    node.status = s.status;
    if (s.status != NodeStatus::ok) return;
    node.position = s.position;
    node.kappa1 = s.data.kappa1;
    node.kappa2 = s.data.kappa2;
    node.normal = s.data.normal;
    node.umbilic = s.data.umbilic;
    node.t1 = aligned(Marcher::direction(s, 0, t1_ref), t1_ref);
    node.t2 = aligned(Marcher::direction(s, 1, t2_ref), t2_ref);
}

int sgn(int v) { return v > 0 ? 1 : -1; }

}  // namespace

CurvatureMesh build_curvature_mesh(const PointCloud& cloud, const Vec3& seed, const MeshConfig& cfg) {
    cfg.validate();
    const double radius = cfg.fit_radius > 0.0 ? cfg.fit_radius : 3.0 * cloud.mean_spacing();
    if (cloud.distance_to(seed) > radius) throw InvalidArgument("mesh: seed is too far from the point cloud");

    const Marcher m(cloud, radius, cfg.umbilic_tol);
    const Sample s0 = m.evaluate(seed, std::nullopt);
    if (s0.status != NodeStatus::ok) throw NumericalError("mesh: cannot fit the surface at the seed");
    if (s0.data.umbilic) throw NumericalError("mesh: seed is umbilic, principal directions are undefined");

    CurvatureMesh mesh(cfg.extent_u1, cfg.extent_u2, cfg.ds);
    MeshNode& origin = mesh.at(0, 0);
    const Vec3 t1 = s0.data.dir1;
    Vec3 t2 = s0.data.dir2;
    if (t1.cross(t2).dot(s0.data.normal) < 0.0) t2 = -t2;
    fill_node(origin, s0, t1, t2);

    // Axis arms.
    for (int sign : {1, -1}) {
        for (int k = 1; k <= cfg.extent_u1; ++k) {
            const MeshNode& prev = mesh.at(sign * (k - 1), 0);
            MeshNode& node = mesh.at(sign * k, 0);
            if (prev.status != NodeStatus::ok) {
                node.status = prev.status;
                continue;
            }
            const Sample s = m.step(prev, sign * prev.t1, 0, cfg.ds);
            fill_node(node, s, prev.t1, prev.t2);
        }
        for (int k = 1; k <= cfg.extent_u2; ++k) {
            const MeshNode& prev = mesh.at(0, sign * (k - 1));
            MeshNode& node = mesh.at(0, sign * k);
            if (prev.status != NodeStatus::ok) {
                node.status = prev.status;
                continue;
            }
            const Sample s = m.step(prev, sign * prev.t2, 1, cfg.ds);
            fill_node(node, s, prev.t1, prev.t2);
        }
    }

    // Interior nodes by increasing |u1| + |u2|: P(i, j) from P(i - si, j)
    // along u1 and P(i, j - sj) along u2.
    for (int d = 2; d <= cfg.extent_u1 + cfg.extent_u2; ++d) {
        for (int i = -cfg.extent_u1; i <= cfg.extent_u1; ++i) {
            const int rest = d - std::abs(i);
            if (i == 0 || rest <= 0 || rest > cfg.extent_u2) continue;
            for (int j : {rest, -rest}) {
                const int si = sgn(i), sj = sgn(j);
                const MeshNode& a = mesh.at(i - si, j);
                const MeshNode& b = mesh.at(i, j - sj);
                MeshNode& node = mesh.at(i, j);
                if (a.status != NodeStatus::ok || b.status != NodeStatus::ok) {
                    node.status = a.status == NodeStatus::failed || b.status == NodeStatus::failed ? NodeStatus::failed
                                                                                                   : NodeStatus::boundary;
                    continue;
                }
                Sample pa = m.step(a, si * a.t1, 0, cfg.ds);
                Sample pb = m.step(b, sj * b.t2, 1, cfg.ds);
                auto agree = [&] {
                    return pa.status == NodeStatus::ok && pb.status == NodeStatus::ok &&
                           (pa.position - pb.position).norm() <= cfg.agree_tol * cfg.ds;
                };
                if (pa.status == NodeStatus::ok && pb.status == NodeStatus::ok && !agree()) {
                    // Retry each prediction as two half steps.
                    auto half = [&](const MeshNode& from, const Vec3& dir, int family) {
                        const Sample h1 = m.step(from, dir, family, 0.5 * cfg.ds);
                        if (h1.status != NodeStatus::ok) return h1;
                        MeshNode tmp = from;
                        fill_node(tmp, h1, from.t1, from.t2);
                        return m.step(tmp, family == 0 ? Vec3(dir.dot(tmp.t1) < 0 ? -tmp.t1 : tmp.t1)
                                                       : Vec3(dir.dot(tmp.t2) < 0 ? -tmp.t2 : tmp.t2),
                                      family, 0.5 * cfg.ds);
                    };
                    pa = half(a, si * a.t1, 0);
                    pb = half(b, sj * b.t2, 1);
                }
                if (pa.status != NodeStatus::ok || pb.status != NodeStatus::ok) {
                    node.status = pa.status == NodeStatus::failed || pb.status == NodeStatus::failed ? NodeStatus::failed
                                                                                                     : NodeStatus::boundary;
                    continue;
                }
                if (!agree()) {
                    node.status = NodeStatus::failed;
                    continue;
                }
                const Sample s = m.evaluate(0.5 * (pa.position + pb.position), a.normal);
                fill_node(node, s, a.t1, b.t2);
            }
        }
    }
    return mesh;
}

RasterField mesh_channels(const CurvatureMesh& mesh) {
    RasterField f(mesh.width(), mesh.height(), 2, 0.0);
    for (int u2 = -mesh.extent_u2(); u2 <= mesh.extent_u2(); ++u2)
        for (int u1 = -mesh.extent_u1(); u1 <= mesh.extent_u1(); ++u1) {
            const MeshNode& n = mesh.at(u1, u2);
            if (n.status != NodeStatus::ok) continue;
            const Anchor a = mesh_anchor(mesh, u1, u2);
            f.at(a.i, a.j, 0) = n.kappa1;
            f.at(a.i, a.j, 1) = n.kappa2;
        }
    return f;
}

namespace {

bool stencil_ok(const CurvatureMesh& mesh, const ScanDomain& domain, Anchor a) {
    for (const auto* set : {&domain.in_offsets, &domain.out_offsets})
        for (const auto& o : *set) {
            const int u1 = a.i + o.di - mesh.extent_u1(), u2 = a.j + o.dj - mesh.extent_u2();
            if (!mesh.contains(u1, u2) || mesh.at(u1, u2).status != NodeStatus::ok) return false;
        }
    return true;
}

}  // namespace

ScanPath mesh_scan_path(const CurvatureMesh& mesh, const ScanDomain& domain, std::optional<Anchor> start,
                        scan2d::ScanOrder order, std::optional<scan2d::AdmissibleRegion> window) {
    domain.validate();
    const auto r = scan2d::admissible_region(mesh.width(), mesh.height(), domain);
    ScanPath path;
    if (!r.empty()) {
        const ScanPath full = scan2d::make_scan_path(mesh.width(), mesh.height(), domain, {r.i0, r.j0}, order);
        for (const auto& a : full.anchors)
            if ((!window || window->contains(a)) && stencil_ok(mesh, domain, a)) path.anchors.push_back(a);
    }
    if (path.anchors.empty()) throw InvalidArgument("mesh_scan_path: no anchor with a fully valid stencil");
    if (start) {
        const auto it = std::find(path.anchors.begin(), path.anchors.end(), *start);
        if (it == path.anchors.end()) throw InvalidArgument("mesh_scan_path: start anchor is not usable");
        std::rotate(path.anchors.begin(), it, path.anchors.end());
    }
    return path;
}

predictors::PredictorGroup train_surface_group(const CurvatureMesh& mesh, const ScanDomain& domain,
                                               const predictors::PredictorSpec& base_spec,
                                               const predictors::TrainConfig& cfg) {
    const ScanPath path = mesh_scan_path(mesh, domain, std::nullopt, scan2d::ScanOrder::raster);
    const auto sets = scan2d::extract_pairs(mesh_channels(mesh), domain, path);
    predictors::PredictorGroup g;
    for (std::size_t c = 0; c < sets.size(); ++c) {
        predictors::PredictorSpec spec = base_spec;
        spec.input_dim = domain.in_offsets.size();
        spec.output_dim = domain.out_offsets.size();
        spec.seed = base_spec.seed + c;
        g.channels.push_back(predictors::train(sets[c], spec, cfg));
    }
    return g;
}

std::vector<std::vector<double>> surface_scan_errors(const CurvatureMesh& mesh, const ScanDomain& domain,
                                                     const ScanPath& path, const scan2d::ScanModel& model) {
    for (const auto& a : path.anchors)
        if (!stencil_ok(mesh, domain, a))
            throw InvalidArgument("surface_scan_errors: stencil touches a mesh node that is not ok");
    return scan2d::scan_errors(mesh_channels(mesh), domain, path, model);
}

void write_mesh(std::ostream& out, const CurvatureMesh& mesh) {
    char buf[256];
    for (int u2 = -mesh.extent_u2(); u2 <= mesh.extent_u2(); ++u2)
        for (int u1 = -mesh.extent_u1(); u1 <= mesh.extent_u1(); ++u1) {
            const MeshNode& n = mesh.at(u1, u2);
            std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %.17g %.17g %.17g %s\n", u1, u2, n.position.x(),
                          n.position.y(), n.position.z(), n.kappa1, n.kappa2, to_string(n.status));
            out << buf;
        }
}

}  // namespace premonn::geom3d
