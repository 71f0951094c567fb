#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace premonn::geom3d {

using Vec3 = Eigen::Vector3d;

/// Static 3-d tree over an immutable point set.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(const std::vector<Vec3>& points);

    /// Indices of points with |p - q| <= radius, in ascending index order.
    std::vector<std::size_t> radius_search(const std::vector<Vec3>& points, const Vec3& q, double radius) const;
    /// Index of the closest point (ties: lowest index).
    std::size_t nearest(const std::vector<Vec3>& points, const Vec3& q, std::size_t skip = static_cast<std::size_t>(-1)) const;

private:
    struct Node {
        std::size_t begin = 0, end = 0;  // range in order_
        int axis = -1;                   // -1 for leaves
        double split = 0.0;
        int left = -1, right = -1;
    };
    int build(std::size_t begin, std::size_t end, int depth, const std::vector<Vec3>& points);

    std::vector<Node> nodes_;
    std::vector<std::size_t> order_;
};

class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3> points);

    const std::vector<Vec3>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

    std::vector<std::size_t> radius_search(const Vec3& q, double radius) const {
        return tree_.radius_search(points_, q, radius);
    }
    std::size_t nearest(const Vec3& q) const { return tree_.nearest(points_, q); }
    double distance_to(const Vec3& q) const { return (points_[nearest(q)] - q).norm(); }

    /// Mean nearest-neighbor distance over (up to `samples`) evenly strided points.
    double mean_spacing(std::size_t samples = 512) const;

private:
    std::vector<Vec3> points_;
    KdTree tree_;
};

/// One `x y z` per line; blank lines and `#` comments skipped.
PointCloud read_xyz(std::istream& in);
/// ASCII PLY; only the vertex element's x, y, z properties are used.
PointCloud read_ply(std::istream& in);
/// Dispatches on extension (.ply, otherwise XYZ).
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_xyz(std::ostream& out, const PointCloud& cloud);

}  // namespace premonn::geom3d
