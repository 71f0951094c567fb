#include "premonn/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "premonn/error.hpp"

namespace premonn::geom3d {

namespace {
constexpr std::size_t kLeafSize = 12;
}

KdTree::KdTree(const std::vector<Vec3>& points) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points.empty()) build(0, points.size(), 0, points);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth, const std::vector<Vec3>& points) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    // Split on the widest axis of this range.
    Vec3 lo = points[order_[begin]], hi = lo;
    for (std::size_t k = begin; k < end; ++k) {
        lo = lo.cwiseMin(points[order_[k]]);
        hi = hi.cwiseMax(points[order_[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points[a][axis] < points[b][axis]; });
    const double split = points[order_[mid]][axis];
    const int left = build(begin, mid, depth + 1, points);
    const int right = build(mid, end, depth + 1, points);
    nodes_[static_cast<std::size_t>(id)].axis = axis;
    nodes_[static_cast<std::size_t>(id)].split = split;
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

std::vector<std::size_t> KdTree::radius_search(const std::vector<Vec3>& points, const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    if (nodes_.empty()) return out;
    const double r2 = radius * radius;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const Node& n = nodes_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (n.axis < 0) {
            for (std::size_t k = n.begin; k < n.end; ++k)
                if ((points[order_[k]] - q).squaredNorm() <= r2) out.push_back(order_[k]);
            continue;
        }
        const double d = q[n.axis] - n.split;
        if (d <= radius) stack.push_back(n.left);
        if (d >= -radius) stack.push_back(n.right);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t KdTree::nearest(const std::vector<Vec3>& points, const Vec3& q, std::size_t skip) const {
    if (nodes_.empty()) throw InvalidArgument("nearest: empty point set");
    std::size_t best = static_cast<std::size_t>(-1);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::vector<std::pair<int, double>> stack{{0, 0.0}};
    while (!stack.empty()) {
        const auto [id, bound] = stack.back();
        stack.pop_back();
        if (bound > best_d2) continue;
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.axis < 0) {
            for (std::size_t k = n.begin; k < n.end; ++k) {
                const std::size_t i = order_[k];
                if (i == skip) continue;
                const double d2 = (points[i] - q).squaredNorm();
                if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                    best_d2 = d2;
                    best = i;
                }
            }
            continue;
        }
        const double d = q[n.axis] - n.split;
        const int near = d < 0 ? n.left : n.right;
        const int far = d < 0 ? n.right : n.left;
        stack.push_back({far, d * d});
        stack.push_back({near, 0.0});
    }
    if (best == static_cast<std::size_t>(-1)) throw InvalidArgument("nearest: no candidate point");
    return best;
}

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
    for (const auto& p : points_)
        if (!p.allFinite()) throw InvalidArgument("point cloud: non-finite coordinate");
    tree_ = KdTree(points_);
}

double PointCloud::mean_spacing(std::size_t samples) const {
    if (points_.size() < 2) throw InvalidArgument("mean_spacing: need at least two points");
    const std::size_t stride = std::max<std::size_t>(1, points_.size() / std::max<std::size_t>(samples, 1));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < points_.size(); i += stride) {
        const std::size_t j = tree_.nearest(points_, points_[i], i);
        sum += (points_[j] - points_[i]).norm();
        ++count;
    }
    return sum / static_cast<double>(count);
}

PointCloud read_xyz(std::istream& in) {
    std::vector<Vec3> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x)) continue;
        if (!(ss >> y >> z)) throw DataError("xyz line " + std::to_string(lineno) + ": expected three coordinates");
        pts.emplace_back(x, y, z);
    }
    if (pts.empty()) throw DataError("xyz: no points");
    try {
        return PointCloud(std::move(pts));
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
}

PointCloud read_ply(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw DataError("ply: missing magic");
    std::size_t n_vertices = 0;
    std::vector<std::string> props;
    bool in_vertex = false, ascii = false;
    std::size_t elements_before_vertex_lines = 0;
    bool seen_vertex = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string kw;
        ss >> kw;
        if (kw == "format") {
            std::string fmt;
            ss >> fmt;
            ascii = fmt == "ascii";
        } else if (kw == "element") {
            std::string name;
            std::size_t count = 0;
            ss >> name >> count;
            in_vertex = name == "vertex";
            if (in_vertex) {
                n_vertices = count;
                seen_vertex = true;
            } else if (!seen_vertex) {
                elements_before_vertex_lines += count;
            }
        } else if (kw == "property" && in_vertex) {
            std::string type, name;
            ss >> type >> name;
            props.push_back(name);
        } else if (kw == "end_header") {
            break;
        }
    }
    if (!ascii) throw DataError("ply: only ASCII format is supported");
    if (!seen_vertex) throw DataError("ply: no vertex element");
    const auto find = [&](const char* n) {
        const auto it = std::find(props.begin(), props.end(), n);
        if (it == props.end()) throw DataError(std::string("ply: vertex property '") + n + "' missing");
        return static_cast<std::size_t>(it - props.begin());
    };
    const std::size_t ix = find("x"), iy = find("y"), iz = find("z");
    for (std::size_t k = 0; k < elements_before_vertex_lines; ++k) std::getline(in, line);

    std::vector<Vec3> pts;
    pts.reserve(n_vertices);
    for (std::size_t v = 0; v < n_vertices; ++v) {
        if (!std::getline(in, line)) throw DataError("ply: truncated vertex list");
        std::istringstream ss(line);
        std::vector<double> vals(props.size());
        for (double& x : vals)
            if (!(ss >> x)) throw DataError("ply: malformed vertex line");
        pts.emplace_back(vals[ix], vals[iy], vals[iz]);
    }
    try {
        return PointCloud(std::move(pts));
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open point cloud " + path.string());
    try {
        return path.extension() == ".ply" ? read_ply(f) : read_xyz(f);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
    char buf[96];
    for (const auto& p : cloud.points()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
}

}  // namespace premonn::geom3d
