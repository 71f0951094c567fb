#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "premonn/contour.hpp"
#include "premonn/raster.hpp"

namespace premonn::curves {

/// Pixel positions against cumulative traced length. For closed curves
/// `period` is the full perimeter including the closing step.
struct ArcLengthSamples {
    std::vector<double> s;
    std::vector<double> x;
    std::vector<double> y;
    bool closed = false;
    double period = 0.0;

    std::size_t size() const { return s.size(); }
};

/// Polynomials in t = s - s0 (coefficient k multiplies t^k).
struct LocalPolyFit {
    double s0 = 0.0;
    std::vector<double> cx;
    std::vector<double> cy;
};

struct CurvatureConfig {
    double ds = 1.0;
    double window_half_width = 8.0;
    int degree = 2;
    int filter_width = 5;

    void validate() const;
};

struct CurvatureSequence {
    std::vector<double> s_grid;
    std::vector<double> kappa;
    std::vector<double> kappa_filtered;
    bool closed = false;

    std::size_t size() const { return kappa.size(); }
};

/// Step length 1 for axis moves, sqrt(2) for diagonal moves.
ArcLengthSamples arc_length(const PixelContour& contour);

/// Uniform s grid with spacing ds. Closed: [0, period). Open: the span whose
/// windows of half-width `half_width` stay inside the curve.
std::vector<double> uniform_grid(const ArcLengthSamples& samples, double ds, double half_width);

/// Least-squares polynomial fits of x(s) and y(s) over |s - s0| <= half_width
/// at every grid point, wrapping around for closed curves.
std::vector<LocalPolyFit> fit_local_polynomials(const ArcLengthSamples& samples, std::span<const double> grid,
                                                double half_width, int degree);

/// kappa = sqrt(x''^2 + y''^2) taken with respect to the fitted curve's own
/// arc length at s0.
double curvature(const LocalPolyFit& fit);

/// Centered moving average; wraps for cyclic input, truncates at open ends.
std::vector<double> moving_average(std::span<const double> v, int width, bool cyclic);

CurvatureSequence curvature_sequence(const PixelContour& contour, const CurvatureConfig& cfg);
CurvatureSequence curvature_sequence(const BinaryMask& mask, const CurvatureConfig& cfg,
                                     std::optional<Pixel> start = std::nullopt);

/// CSV with header `s,kappa,kappa_filtered`.
void write_curvature_csv(std::ostream& out, const CurvatureSequence& seq);

}  // namespace premonn::curves
