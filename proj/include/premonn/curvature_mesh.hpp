#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "premonn/point_cloud.hpp"
#include "premonn/predictor.hpp"
#include "premonn/raster.hpp"
#include "premonn/scan.hpp"
#include "premonn/surface.hpp"

namespace premonn::geom3d {

enum class NodeStatus { ok, boundary, failed };

const char* to_string(NodeStatus s);

struct MeshNode {
    Vec3 position = Vec3::Zero();
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    Vec3 normal = Vec3::UnitZ();
    /// Oriented tangents of the u1- and u2-lines through the node.
    Vec3 t1 = Vec3::UnitX();
    Vec3 t2 = Vec3::UnitY();
    bool umbilic = false;
    NodeStatus status = NodeStatus::failed;
};

struct MeshConfig {
    double ds = 0.5;
    int extent_u1 = 10;  // nodes span u1 in [-extent_u1, extent_u1]
    int extent_u2 = 10;
    /// <= 0 selects 3x the cloud's mean nearest-neighbor spacing.
    double fit_radius = 0.0;
    double umbilic_tol = kDefaultUmbilicTol;
    /// Interior predictions further apart than this fraction of ds trigger the
    /// half-step retry, then failure.
    double agree_tol = 0.35;

    void validate() const;
};

/// Grid of nodes on the lines of curvature, indexed by (u1, u2).
class CurvatureMesh {
public:
    CurvatureMesh() = default;
    CurvatureMesh(int extent_u1, int extent_u2, double ds);

    int extent_u1() const { return e1_; }
    int extent_u2() const { return e2_; }
    int width() const { return 2 * e1_ + 1; }
    int height() const { return 2 * e2_ + 1; }
    double ds() const { return ds_; }

    MeshNode& at(int u1, int u2) { return nodes_.at(index(u1, u2)); }
    const MeshNode& at(int u1, int u2) const { return nodes_.at(index(u1, u2)); }
    bool contains(int u1, int u2) const { return u1 >= -e1_ && u1 <= e1_ && u2 >= -e2_ && u2 <= e2_; }
    const std::vector<MeshNode>& nodes() const { return nodes_; }
    std::size_t count(NodeStatus s) const;

private:
    std::size_t index(int u1, int u2) const;
    int e1_ = 0, e2_ = 0;
    double ds_ = 0.0;
    std::vector<MeshNode> nodes_;
};

/// Marches a mesh over the cloud from `seed`: axis nodes by repeated steps of
/// ds along the locally recomputed principal directions, interior nodes from
/// the two neighbors closer to the axes (midpoint of both predictions,
/// re-projected). Throws if the seed is off the cloud or umbilic.
CurvatureMesh build_curvature_mesh(const PointCloud& cloud, const Vec3& seed, const MeshConfig& cfg);

/// Two-channel raster (kappa1, kappa2); pixel (u1 + extent_u1, u2 + extent_u2).
RasterField mesh_channels(const CurvatureMesh& mesh);

/// Raster x/y of a mesh index.
inline scan2d::Anchor mesh_anchor(const CurvatureMesh& m, int u1, int u2) {
    return {u1 + m.extent_u1(), u2 + m.extent_u2()};
}

/// Anchors whose whole stencil lies on ok nodes, restricted to `window` (raster
/// coordinates, inclusive) when given. Ordered like make_scan_path and rotated
/// to begin at `start` (or at the first valid anchor).
scan2d::ScanPath mesh_scan_path(const CurvatureMesh& mesh, const scan2d::ScanDomain& domain,
                                std::optional<scan2d::Anchor> start = std::nullopt,
                                scan2d::ScanOrder order = scan2d::ScanOrder::boustrophedon,
                                std::optional<scan2d::AdmissibleRegion> window = std::nullopt);

/// One predictor per curvature channel trained over every valid anchor.
predictors::PredictorGroup train_surface_group(const CurvatureMesh& mesh, const scan2d::ScanDomain& domain,
                                               const predictors::PredictorSpec& base_spec,
                                               const predictors::TrainConfig& cfg);

/// scan2d::scan_errors over the (kappa1, kappa2) channels; rejects anchors
/// whose stencil touches a node that is not ok.
std::vector<std::vector<double>> surface_scan_errors(const CurvatureMesh& mesh, const scan2d::ScanDomain& domain,
                                                     const scan2d::ScanPath& path, const scan2d::ScanModel& model);

/// `u1 u2 x y z k1 k2 status` per node.
void write_mesh(std::ostream& out, const CurvatureMesh& mesh);

}  // namespace premonn::geom3d
