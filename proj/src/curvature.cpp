#include "premonn/curvature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "premonn/error.hpp"

namespace premonn::curves {

void CurvatureConfig::validate() const {
    if (!(ds > 0.0)) throw InvalidArgument("curvature: ds must be > 0");
    if (!(window_half_width > 0.0)) throw InvalidArgument("curvature: window half-width must be > 0");
    if (degree < 2) throw InvalidArgument("curvature: polynomial degree must be >= 2");
    if (filter_width < 1) throw InvalidArgument("curvature: filter width must be >= 1");
}

ArcLengthSamples arc_length(const PixelContour& contour) {
    if (contour.points.empty()) throw InvalidArgument("arc_length: empty contour");
    ArcLengthSamples out;
    out.closed = contour.closed;
    const auto& p = contour.points;
    auto step = [](const Pixel& a, const Pixel& b) {
        if (!is_eight_neighbor(a, b)) throw InvalidArgument("arc_length: consecutive points are not 8-neighbors");
        return is_diagonal_step(a, b) ? std::numbers::sqrt2 : 1.0;
    };
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0) s += step(p[i - 1], p[i]);
        out.s.push_back(s);
        out.x.push_back(p[i].x);
        out.y.push_back(p[i].y);
    }
    out.period = s;
    if (contour.closed && p.size() > 1) out.period += step(p.back(), p.front());
    return out;
}

std::vector<double> uniform_grid(const ArcLengthSamples& samples, double ds, double half_width) {
    if (!(ds > 0.0)) throw InvalidArgument("uniform_grid: ds must be > 0");
    std::vector<double> g;
    if (samples.s.empty()) return g;
    if (samples.closed) {
        const auto n = static_cast<std::size_t>(std::floor(samples.period / ds - 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i) g.push_back(static_cast<double>(i) * ds);
        return g;
    }
    const double lo = samples.s.front() + half_width;
    const double hi = samples.s.back() - half_width;
    for (std::size_t i = 0;; ++i) {
        const double v = lo + static_cast<double>(i) * ds;
        if (v > hi + 1e-9) break;
        g.push_back(v);
    }
    return g;
}

std::vector<LocalPolyFit> fit_local_polynomials(const ArcLengthSamples& samples, std::span<const double> grid,
                                                double half_width, int degree) {
    if (degree < 1) throw InvalidArgument("fit_local_polynomials: degree must be >= 1");
    if (!(half_width > 0.0)) throw InvalidArgument("fit_local_polynomials: half_width must be > 0");
    const std::size_t n = samples.size();
    if (samples.x.size() != n || samples.y.size() != n) throw InvalidArgument("fit_local_polynomials: ragged samples");
    const bool wrap = samples.closed && samples.period > 0.0;
    const auto ncoef = static_cast<Eigen::Index>(degree + 1);

    std::vector<LocalPolyFit> fits;
    fits.reserve(grid.size());
    std::vector<double> ts, xs, ys;
    for (double s0 : grid) {
        ts.clear();
        xs.clear();
        ys.clear();
        for (std::size_t i = 0; i < n; ++i) {
            double t = samples.s[i] - s0;
            if (wrap) {
                t = std::remainder(t, samples.period);
                // Windows longer than the perimeter see each sample once.
            }
            if (std::abs(t) <= half_width + 1e-12) {
                ts.push_back(t);
                xs.push_back(samples.x[i]);
                ys.push_back(samples.y[i]);
            }
        }
        if (static_cast<Eigen::Index>(ts.size()) < ncoef)
            throw InvalidArgument("fit_local_polynomials: window holds fewer samples than coefficients");

        // Center on the sample closest to s0 so translated inputs give identical fits.
        std::size_t anchor = 0;
        for (std::size_t k = 1; k < ts.size(); ++k)
            if (std::abs(ts[k]) < std::abs(ts[anchor])) anchor = k;
        const double x0 = xs[anchor], y0 = ys[anchor];

        const auto m = static_cast<Eigen::Index>(ts.size());
        Eigen::MatrixXd a(m, ncoef);
        Eigen::MatrixXd rhs(m, 2);
        for (Eigen::Index r = 0; r < m; ++r) {
            const double u = ts[static_cast<std::size_t>(r)] / half_width;
            double pw = 1.0;
            for (Eigen::Index c = 0; c < ncoef; ++c, pw *= u) a(r, c) = pw;
            rhs(r, 0) = xs[static_cast<std::size_t>(r)] - x0;
            rhs(r, 1) = ys[static_cast<std::size_t>(r)] - y0;
        }
        const auto qr = a.colPivHouseholderQr();
        if (qr.rank() < ncoef) throw NumericalError("fit_local_polynomials: rank-deficient window");
        const Eigen::MatrixXd sol = qr.solve(rhs);

        LocalPolyFit f;
        f.s0 = s0;
        f.cx.resize(static_cast<std::size_t>(ncoef));
        f.cy.resize(static_cast<std::size_t>(ncoef));
        double scale = 1.0;
        for (Eigen::Index c = 0; c < ncoef; ++c, scale /= half_width) {
            f.cx[static_cast<std::size_t>(c)] = sol(c, 0) * scale;
            f.cy[static_cast<std::size_t>(c)] = sol(c, 1) * scale;
        }
        f.cx[0] += x0;
        f.cy[0] += y0;
        fits.push_back(std::move(f));
    }
    return fits;
}

double curvature(const LocalPolyFit& fit) {
    if (fit.cx.size() < 3 || fit.cy.size() < 3) throw InvalidArgument("curvature: fit degree must be >= 2");
    const double dx = fit.cx[1], dy = fit.cy[1];
    const double ddx = 2.0 * fit.cx[2], ddy = 2.0 * fit.cy[2];
    const double speed2 = dx * dx + dy * dy;
    if (speed2 < 1e-24) return std::hypot(ddx, ddy);
    // Reparameterize by the fitted curve's own length: only the normal part
    // of the second derivative survives, scaled by 1/|r'|^2.
    return std::abs(dx * ddy - dy * ddx) / (speed2 * std::sqrt(speed2));
}

std::vector<double> moving_average(std::span<const double> v, int width, bool cyclic) {
    if (width < 1) throw InvalidArgument("moving_average: width must be >= 1");
    const auto n = static_cast<long>(v.size());
    std::vector<double> out(v.size(), 0.0);
    const long lo = -(width - 1) / 2;
    const long hi = width / 2;
    for (long i = 0; i < n; ++i) {
        double s = 0.0;
        long cnt = 0;
        for (long k = lo; k <= hi; ++k) {
            long j = i + k;
            if (cyclic) {
                j = ((j % n) + n) % n;
            } else if (j < 0 || j >= n) {
                continue;
            }
            s += v[static_cast<std::size_t>(j)];
            ++cnt;
        }
        out[static_cast<std::size_t>(i)] = s / static_cast<double>(cnt);
    }
    return out;
}

CurvatureSequence curvature_sequence(const PixelContour& contour, const CurvatureConfig& cfg) {
    cfg.validate();
    const ArcLengthSamples samples = arc_length(contour);
    CurvatureSequence seq;
    seq.closed = samples.closed;
    seq.s_grid = uniform_grid(samples, cfg.ds, cfg.window_half_width);
    if (seq.s_grid.empty()) throw InvalidArgument("curvature_sequence: contour too short for the fitting window");
    const auto fits = fit_local_polynomials(samples, seq.s_grid, cfg.window_half_width, cfg.degree);
    seq.kappa.reserve(fits.size());
    for (const auto& f : fits) seq.kappa.push_back(curvature(f));
    seq.kappa_filtered = moving_average(seq.kappa, cfg.filter_width, seq.closed);
    return seq;
}

CurvatureSequence curvature_sequence(const BinaryMask& mask, const CurvatureConfig& cfg, std::optional<Pixel> start) {
    return curvature_sequence(trace_contour(mask, start), cfg);
}

void write_curvature_csv(std::ostream& out, const CurvatureSequence& seq) {
    out << "s,kappa,kappa_filtered\n";
    char buf[96];
    for (std::size_t i = 0; i < seq.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", seq.s_grid[i], seq.kappa[i], seq.kappa_filtered[i]);
        out << buf;
    }
}

}  // namespace premonn::curves
