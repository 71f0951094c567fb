#include "premonn/contour.hpp"

#include <array>
#include <cstdlib>

#include "premonn/error.hpp"

namespace premonn::curves {

namespace {

// Clockwise on screen, starting west.
constexpr std::array<Pixel, 8> kDirs{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int dir_index(int dx, int dy) {
    for (int i = 0; i < 8; ++i)
        if (kDirs[i].x == dx && kDirs[i].y == dy) return i;
    return -1;
}

bool is_boundary(const BinaryMask& m, Pixel p) {
    for (const auto& d : kDirs)
        if (!m.get(p.x + d.x, p.y + d.y)) return true;
    return false;
}

// Drops spur tips: any a,b,a pattern collapses to a, cyclically.
std::vector<Pixel> prune_backtracks(std::vector<Pixel> pts) {
    bool changed = true;
    while (changed && pts.size() > 2) {
        changed = false;
        const std::size_t n = pts.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Pixel& prev = pts[(k + n - 1) % n];
            const Pixel& next = pts[(k + 1) % n];
            if (prev == next) {
                // Remove the tip k and the repeat at k+1.
                const std::size_t k1 = (k + 1) % n;
                if (k1 > k) {
                    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(k), pts.begin() + static_cast<std::ptrdiff_t>(k1) + 1);
                } else {
                    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(k));
                    pts.erase(pts.begin());
                }
                changed = true;
                break;
            }
        }
    }
    return pts;
}

// A one-pixel-wide arc traces as an out-and-back walk: exactly two turnaround
// indices and the return leg mirrors the outward leg.
std::optional<PixelContour> as_open_arc(const std::vector<Pixel>& pts) {
    const std::size_t n = pts.size();
    if (n == 2) return PixelContour{pts, false};
    if (n < 2 || n % 2 != 0) return std::nullopt;
    std::vector<std::size_t> turns;
    for (std::size_t k = 0; k < n; ++k)
        if (pts[(k + n - 1) % n] == pts[(k + 1) % n]) turns.push_back(k);
    if (turns.size() != 2) return std::nullopt;
    const std::size_t a = turns[0], b = turns[1];
    if ((b + n - a) % n != n / 2) return std::nullopt;
    for (std::size_t k = 1; k < n / 2; ++k)
        if (!(pts[(a + k) % n] == pts[(a + n - k) % n])) return std::nullopt;
    PixelContour c;
    c.closed = false;
    for (std::size_t k = 0; k <= n / 2; ++k) c.points.push_back(pts[(a + k) % n]);
    return c;
}

}  // namespace

bool is_eight_neighbor(const Pixel& a, const Pixel& b) {
    const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
    return dx <= 1 && dy <= 1 && (dx + dy) > 0;
}

bool is_diagonal_step(const Pixel& a, const Pixel& b) { return a.x != b.x && a.y != b.y; }

PixelContour trace_contour(const BinaryMask& mask, std::optional<Pixel> start) {
    if (mask.count() == 0) throw InvalidArgument("trace_contour: empty mask");

    Pixel s{};
    int backtrack = 0;
    if (start) {
        s = *start;
        if (!mask.get(s.x, s.y)) throw InvalidArgument("trace_contour: start pixel is background");
        if (!is_boundary(mask, s)) throw InvalidArgument("trace_contour: start pixel is not on the boundary");
        backtrack = -1;
        for (int d : {0, 2, 4, 6})
            if (!mask.get(s.x + kDirs[d].x, s.y + kDirs[d].y)) {
                backtrack = d;
                break;
            }
        if (backtrack < 0)
            for (int d = 0; d < 8 && backtrack < 0; ++d)
                if (!mask.get(s.x + kDirs[d].x, s.y + kDirs[d].y)) backtrack = d;
    } else {
        bool found = false;
        for (int y = 0; y < mask.height() && !found; ++y)
            for (int x = 0; x < mask.width() && !found; ++x)
                if (mask.get(x, y)) {
                    s = {x, y};
                    found = true;
                }
        backtrack = 0;  // west of the topmost-leftmost pixel is background
    }

    auto advance = [&](Pixel c, int b, Pixel& next, int& next_b) -> bool {
        for (int k = 1; k < 8; ++k) {
            const int d = (b + k) % 8;
            const Pixel q{c.x + kDirs[d].x, c.y + kDirs[d].y};
            if (mask.get(q.x, q.y)) {
                const int pd = (d + 7) % 8;
                const Pixel bp{c.x + kDirs[pd].x, c.y + kDirs[pd].y};
                next = q;
                next_b = dir_index(bp.x - q.x, bp.y - q.y);
                return true;
            }
        }
        return false;
    };

    Pixel first_next{};
    int b = backtrack;
    if (!advance(s, b, first_next, b)) throw InvalidArgument("trace_contour: degenerate single-pixel region");

    std::vector<Pixel> pts{s};
    Pixel cur = first_next;
    const std::size_t limit = 8 * mask.count() + 16;
    while (true) {
        Pixel next{};
        int nb = 0;
        advance(cur, b, next, nb);
        if (cur == s && next == first_next) break;
        pts.push_back(cur);
        cur = next;
        b = nb;
        if (pts.size() > limit) throw NumericalError("trace_contour: trace failed to terminate");
    }

    if (auto arc = as_open_arc(pts)) return *arc;
    PixelContour c;
    c.points = prune_backtracks(std::move(pts));
    c.closed = c.points.size() > 2;
    if (!c.closed) {
        if (auto arc = as_open_arc(c.points)) return *arc;
    }
    return c;
}

}  // namespace premonn::curves
