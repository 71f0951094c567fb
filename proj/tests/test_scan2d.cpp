#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "premonn/error.hpp"
#include "premonn/scan.hpp"
#include "premonn/synthetic.hpp"

using namespace premonn;
using namespace premonn::scan2d;

namespace {

RasterField constant(int w, int h, int channels, double v) { return RasterField(w, h, channels, v); }

RasterField grating(int w, int h, bool diagonal) {
    RasterField f(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(x, y) = 0.5 + 0.4 * std::sin(0.9 * (diagonal ? x + y : y));
    return f;
}

predictors::PredictorSpec linear_spec() { return predictors::PredictorSpec{}; }

ScanModel model_of(const std::vector<RasterField>& fields, const ScanDomain& d) {
    ScanModel m{d, {}};
    for (const auto& f : fields) m.sources.push_back(train_group(f, d, linear_spec(), predictors::TrainConfig{}));
    return m;
}

}  // namespace

TEST_SUITE("scan2d") {

TEST_CASE("canonical_domain sizes and offsets") {
    CHECK(canonical_domain(1, 1).in_offsets.size() == 3);
    CHECK(canonical_domain(2, 1).in_offsets.size() == 5);
    CHECK(canonical_domain(2, 2).in_offsets.size() == 8);
    const auto d = canonical_domain(1, 1);
    CHECK(d.in_offsets == std::vector<Offset>{{-1, -1}, {-1, 0}, {0, -1}});
    CHECK(d.out_offsets == std::vector<Offset>{{0, 0}});
    CHECK_THROWS_AS(canonical_domain(0, 1), InvalidArgument);
}

TEST_CASE("domain validation and text round trip") {
    CHECK_THROWS_AS(ScanDomain({}, {{0, 0}}), InvalidArgument);
    CHECK_THROWS_AS(ScanDomain({{0, 0}}, {{0, 0}}), InvalidArgument);
    CHECK_THROWS_AS(ScanDomain({{1, 0}, {1, 0}}, {{0, 0}}), InvalidArgument);
    const ScanDomain d({{2, -1}, {-1, 0}}, {{0, 0}, {1, 1}});
    CHECK(std::is_sorted(d.in_offsets.begin(), d.in_offsets.end()));
    std::stringstream ss;
    write_domain(ss, d);
    CHECK(read_domain(ss) == d);
    std::stringstream bad("1 2 sideways\n");
    CHECK_THROWS_AS(read_domain(bad), DataError);
    std::stringstream terse("-1 0\n0 -1\n0 0 out\n");
    CHECK(read_domain(terse) == ScanDomain({{-1, 0}, {0, -1}}, {{0, 0}}));
}

TEST_CASE("scan path covers every admissible anchor once") {
    const auto d = canonical_domain(1, 1);
    const auto p = make_scan_path(4, 4, d, {1, 1});
    CHECK(p.size() == 9);
    std::set<Anchor> seen(p.anchors.begin(), p.anchors.end());
    CHECK(seen.size() == 9);
    for (const auto& a : p.anchors) CHECK((a.i >= 1 && a.i <= 3 && a.j >= 1 && a.j <= 3));
    CHECK_THROWS_AS(make_scan_path(4, 4, d, {0, 0}), InvalidArgument);
    CHECK_THROWS_AS(make_scan_path(1, 4, d, {0, 0}), InvalidArgument);

    for (auto order : {ScanOrder::raster, ScanOrder::boustrophedon}) {
        const auto ref = make_scan_path(20, 13, canonical_domain(2, 1), {2, 1}, order);
        const auto other = make_scan_path(20, 13, canonical_domain(2, 1), {11, 7}, order);
        CHECK(ref.size() == other.size());
        CHECK(other.anchors.front() == Anchor{11, 7});
        // Same cycle, only rotated.
        const auto it = std::find(ref.anchors.begin(), ref.anchors.end(), other.anchors.front());
        REQUIRE(it != ref.anchors.end());
        std::vector<Anchor> rotated(ref.anchors.begin(), ref.anchors.end());
        std::rotate(rotated.begin(), rotated.begin() + (it - ref.anchors.begin()), rotated.end());
        CHECK(rotated == other.anchors);
    }
    // Boustrophedon moves are single steps within a row and between rows.
    const auto b = make_scan_path(9, 7, canonical_domain(1, 1), {1, 1});
    for (std::size_t k = 1; k < b.size(); ++k)
        CHECK(std::abs(b.anchors[k].i - b.anchors[k - 1].i) + std::abs(b.anchors[k].j - b.anchors[k - 1].j) == 1);
}

TEST_CASE("extract_pairs on a constant field") {
    const auto d = canonical_domain(2, 2);
    const auto f = constant(10, 8, 1, 0.3);
    const auto sets = extract_pairs(f, d, make_scan_path(10, 8, d, {2, 2}));
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].size() == 8 * 6);
    for (const auto& p : sets[0]) {
        CHECK(p.input == std::vector<double>(8, 0.3));
        CHECK(p.target == std::vector<double>{0.3});
    }
    const auto colour = extract_pairs(constant(10, 8, 3, 0.1), d, make_scan_path(10, 8, d, {2, 2}));
    CHECK(colour.size() == 3);
}

TEST_CASE("extract_pairs matches a hand loop") {
    RasterField f(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) f.at(x, y) = 10 * y + x;
    const auto d = canonical_domain(1, 1);
    const auto sets = extract_pairs(f, d, make_scan_path(4, 4, d, {1, 1}, ScanOrder::raster));
    // Anchor (1,1): inputs at (0,0), (0,1), (1,0) in sorted-offset order.
    CHECK(sets[0][0].input == std::vector<double>{0, 10, 1});
    CHECK(sets[0][0].target == std::vector<double>{11});

    synthetic::Rng rng(4);
    RasterField g(7, 6, 2);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x)
            for (int c = 0; c < 2; ++c) g.at(x, y, c) = rng.uniform();
    const ScanDomain odd({{-2, 0}, {1, -1}, {0, 2}}, {{0, 0}, {1, 0}});
    const auto r = admissible_region(7, 6, odd);
    const auto got = extract_pairs(g, odd, make_scan_path(7, 6, odd, {r.i0, r.j0}, ScanOrder::raster));
    const auto want = oracle::naive_pairs(g, odd);
    for (std::size_t c = 0; c < 2; ++c) {
        REQUIRE(got[c].size() == want[c].size());
        for (std::size_t k = 0; k < got[c].size(); ++k) {
            CHECK(got[c][k].input == want[c][k].input);
            CHECK(got[c][k].target == want[c][k].target);
        }
    }
}

TEST_CASE("scan_errors: self fit, constants and gratings") {
    const auto d = canonical_domain(1, 1);
    const auto h = grating(30, 30, false), g = grating(30, 30, true);
    const auto model = model_of({h, g}, d);
    const auto path = make_scan_path(30, 30, d, {1, 1});
    double self = 0.0, cross = 0.0;
    for (const auto& e : scan_errors(h, d, path, model)) {
        self += e[0];
        cross += e[1];
    }
    self /= static_cast<double>(path.size());
    cross /= static_cast<double>(path.size());
    CHECK(self < 1e-3);
    CHECK(cross > self);

    const auto cm = model_of({constant(12, 12, 1, 0.2)}, d);
    for (double c : {0.2, 0.5, 0.9}) {
        const auto e = scan_errors(constant(12, 12, 1, c), d, make_scan_path(12, 12, d, {1, 1}), cm);
        for (const auto& step : e) CHECK(step[0] == doctest::Approx(std::abs(c - 0.2)).epsilon(1e-6));
    }
}

TEST_CASE("scan_errors rejects a different stencil") {
    const auto d = canonical_domain(1, 1);
    const auto model = model_of({grating(12, 12, false)}, d);
    const auto d2 = canonical_domain(2, 1);
    CHECK_THROWS_AS(scan_errors(grating(12, 12, false), d2, make_scan_path(12, 12, d2, {2, 1}), model),
                    InvalidArgument);
    ScanPath outside{{{0, 0}}};
    CHECK_THROWS_AS(scan_errors(grating(12, 12, false), d, outside, model), InvalidArgument);
}

TEST_CASE("error multiset does not depend on the start anchor") {
    const auto d = canonical_domain(2, 1);
    const auto model = model_of({grating(20, 20, false), grating(20, 20, true)}, d);
    synthetic::Rng rng(9);
    const auto tex = synthetic::texture(synthetic::TextureKind::checkerboard, 20, 20, false, rng);
    auto sorted_errors = [&](Anchor a) {
        auto e = scan_errors(tex, d, make_scan_path(20, 20, d, a), model);
        std::sort(e.begin(), e.end());
        return e;
    };
    CHECK(sorted_errors({2, 1}) == sorted_errors({13, 11}));
}

}  // TEST_SUITE
