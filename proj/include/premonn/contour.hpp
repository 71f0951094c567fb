#pragma once

#include <optional>
#include <vector>

#include "premonn/raster.hpp"

namespace premonn::curves {

struct Pixel {
    int x = 0;  // column
    int y = 0;  // row
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Ordered 8-connected boundary pixels. Consecutive points are 8-neighbors;
/// for closed contours the last point also neighbors the first.
struct PixelContour {
    std::vector<Pixel> points;
    bool closed = false;
};

/// Moore-neighbor boundary trace with Jacob's stopping criterion. Clockwise on
/// screen (row axis pointing down). Starts at `start` or at the topmost, then
/// leftmost, foreground pixel. One-pixel-wide arcs come back as open contours.
PixelContour trace_contour(const BinaryMask& mask, std::optional<Pixel> start = std::nullopt);

bool is_eight_neighbor(const Pixel& a, const Pixel& b);
bool is_diagonal_step(const Pixel& a, const Pixel& b);

}  // namespace premonn::curves
