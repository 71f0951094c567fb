#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "premonn/error.hpp"
#include "premonn/network_repr.hpp"
#include "premonn/synthetic.hpp"

using namespace premonn;
using namespace premonn::repr;

namespace {

// Curvature of a circle of radius r traced over n samples.
std::vector<double> circle_kappa(std::size_t n, double r) { return std::vector<double>(n, 1.0 / r); }

// Two circles joined at sample 64, which is also a block boundary.
std::vector<double> two_circles() {
    auto seq = circle_kappa(64, 10.0);
    const auto b = circle_kappa(64, 25.0);
    seq.insert(seq.end(), b.begin(), b.end());
    return seq;
}

// Whole number of periods, so the cyclic wrap is seamless.
std::vector<double> wave(std::size_t n, double cycles) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k)
        v[k] = 0.1 + 0.05 * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(k) / static_cast<double>(n));
    return v;
}

std::vector<NetworkId> ids(const std::string& s) { return {s.begin(), s.end()}; }

std::set<NetworkId> distinct(const NetworkString& s) { return {s.symbols.begin(), s.symbols.end()}; }

}  // namespace

TEST_SUITE("repr") {

TEST_CASE("sequence_pairs layout") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto open = sequence_pairs(v, false, 2);
    REQUIRE(open.size() == 3);
    CHECK(open[0].input == std::vector<double>{2, 1});
    CHECK(open[0].target == std::vector<double>{3});
    const auto cyc = sequence_pairs(v, true, 2);
    REQUIRE(cyc.size() == 5);
    CHECK(cyc[0].input == std::vector<double>{5, 4});
    CHECK(cyc[0].target == std::vector<double>{1});
    CHECK_THROWS_AS(sequence_pairs(v, true, 0), InvalidArgument);
}

TEST_CASE("a circle is one segment") {
    NetworkLibrary lib(3);
    const auto one = segment_and_train(circle_kappa(128, 30.0), true, SegmentationConfig{}, lib);
    CHECK(lib.size() == 1);
    CHECK(one.string.symbols == std::vector<NetworkId>{0});
    CHECK(one.segments.size() == 1);

    NetworkLibrary smooth(3);
    CHECK(segment_and_train(wave(128, 3), true, SegmentationConfig{}, smooth).string.size() == 1);
    CHECK(smooth.size() == 1);
}

TEST_CASE("two circles give two segments and two networks") {
    NetworkLibrary lib(3);
    const auto two = segment_and_train(two_circles(), true, SegmentationConfig{}, lib);
    CHECK(lib.size() == 2);
    REQUIRE(two.segments.size() == 2);
    CHECK(two.segments[0].begin == 0);
    CHECK(two.segments[0].end == 64);
    CHECK(two.segments[1].end == 128);
    CHECK(two.string.symbols == std::vector<NetworkId>{0, 1});
    CHECK(lib.at(0).predict_scalar(std::vector<double>{0.1, 0.1, 0.1}) == doctest::Approx(0.1));
    CHECK(lib.at(1).predict_scalar(std::vector<double>{0.04, 0.04, 0.04}) == doctest::Approx(0.04));

    // Segments tile the pair range for open input too.
    NetworkLibrary lib2(3);
    auto seq = wave(67, 2);
    const auto tail = wave(93, 9);
    seq.insert(seq.end(), tail.begin(), tail.end());
    const auto open = segment_and_train(seq, false, SegmentationConfig{}, lib2);
    CHECK(open.segments.front().begin == 0);
    for (std::size_t k = 1; k < open.segments.size(); ++k) CHECK(open.segments[k].begin == open.segments[k - 1].end);
    CHECK(open.segments.back().end == seq.size() - 3);
    CHECK(distinct(open.string).size() >= 2);
}

TEST_CASE("segmentation reuses fitting networks") {
    NetworkLibrary lib(3);
    const auto first = segment_and_train(two_circles(), true, SegmentationConfig{}, lib);
    const std::size_t size = lib.size();
    const auto again = segment_and_train(two_circles(), true, SegmentationConfig{}, lib);
    CHECK(lib.size() == size);
    CHECK(again.string == first.string);
    const auto other = segment_and_train(circle_kappa(96, 25.0), true, SegmentationConfig{}, lib);
    CHECK(lib.size() == size);
    CHECK(other.string.symbols == std::vector<NetworkId>{1});
}

TEST_CASE("labeling reproduces the training string") {
    NetworkLibrary lib(3);
    const SegmentationConfig cfg;
    const auto seg = segment_and_train(two_circles(), true, cfg, lib);
    const auto lab = label_sequence(two_circles(), true, lib, cfg.min_segment_len, cfg.error_threshold);
    CHECK(lab.string == seg.string);
    CHECK(lab.windows == std::vector<NetworkId>{0, 0, 0, 0, 1, 1, 1, 1});
    CHECK_FALSE(lab.low_confidence);

    synthetic::Rng rng(2);
    std::vector<double> noise(128);
    for (double& x : noise) x = rng.uniform(-1, 1);
    CHECK(label_sequence(noise, true, lib, 16, cfg.error_threshold).low_confidence);

    CHECK_THROWS_AS(label_sequence(circle_kappa(10, 5.0), false, lib, 16, 0.01), InvalidArgument);
    CHECK_THROWS_AS(label_sequence(two_circles(), true, NetworkLibrary(3), 16, 0.01), InvalidArgument);
    NetworkLibrary empty(3);
    CHECK_THROWS_AS(segment_and_train(circle_kappa(10, 5.0), false, cfg, empty), InvalidArgument);
}

TEST_CASE("rotating a cyclic sequence by whole windows keeps the labels") {
    NetworkLibrary lib(3);
    segment_and_train(two_circles(), true, SegmentationConfig{}, lib);
    auto rotated = two_circles();
    std::rotate(rotated.begin(), rotated.begin() + 48, rotated.end());
    const auto a = label_sequence(two_circles(), true, lib, 16, 0.01), r = label_sequence(rotated, true, lib, 16, 0.01);
    CHECK(histogram_distance(histogram(a.windows), histogram(r.windows)) == 0.0);
    CHECK(shift_min_levenshtein(a.string.symbols, r.string.symbols) == 0);
}

TEST_CASE("collapse") {
    const std::vector<NetworkId> v{1, 1, 2, 2, 1};
    CHECK(collapse(v, false).symbols == std::vector<NetworkId>{1, 2, 1});
    CHECK(collapse(v, true).symbols == std::vector<NetworkId>{1, 2});
    CHECK(collapse(std::vector<NetworkId>{3, 3}, true).symbols == std::vector<NetworkId>{3});
}

TEST_CASE("histograms and their distance") {
    const auto h = histogram(std::vector<NetworkId>{0, 0, 1, 2});
    CHECK(h.counts.at(0) == 2);
    CHECK(h.freq.at(0) == 0.5);
    CHECK(h.freq.at(2) == 0.25);
    CHECK(histogram_distance(h, h) == 0.0);
    CHECK(histogram_distance(histogram(std::vector<NetworkId>{0}), histogram(std::vector<NetworkId>{1})) == 2.0);
    CHECK(histogram_distance(histogram(std::vector<NetworkId>{0, 0}), histogram(std::vector<NetworkId>{0, 1})) == 1.0);
    const std::vector<NetworkHistogram> hs{histogram(std::vector<NetworkId>{0}), histogram(std::vector<NetworkId>{1})};
    const auto m = mean_histogram(hs);
    CHECK(m.freq.at(0) == 0.5);
    CHECK(m.counts.empty());
    CHECK_THROWS_AS(histogram(std::vector<NetworkId>{}), InvalidArgument);

    std::stringstream ss;
    write_histogram_csv(ss, h);
    CHECK(ss.str() == "id,count,freq\n0,2,0.5\n1,1,0.25\n2,1,0.25\n");
    std::stringstream st;
    write_string_csv(st, NetworkString{{4, 0, 7}, true});
    CHECK(st.str() == "symbols,cyclic\n4;0;7,1\n");
}

TEST_CASE("edit distances") {
    CHECK(levenshtein(ids("kitten"), ids("sitting")) == 3);
    CHECK(levenshtein(ids(""), ids("abc")) == 3);
    CHECK(levenshtein(ids("abc"), ids("abc")) == 0);
    CHECK(shift_min_levenshtein(ids("abc"), ids("bca")) == 0);
    CHECK(shift_min_levenshtein(ids("abcd"), ids("dabx")) == 1);

    const oracle::EditGraph g(3, 5);
    const auto& all = g.strings();
    synthetic::Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        const std::size_t a = rng.index(all.size());
        const auto dist = g.distances_from(a);
        for (int u = 0; u < 30; ++u) {
            const std::size_t b = rng.index(all.size()), c = rng.index(all.size());
            CHECK(levenshtein(all[a], all[b]) == dist[b]);
            CHECK(levenshtein(all[b], all[a]) == dist[b]);
            CHECK(levenshtein(all[a], all[c]) <= levenshtein(all[a], all[b]) + levenshtein(all[b], all[c]));
        }
    }
}

TEST_CASE("library save and load") {
    NetworkLibrary lib(3);
    segment_and_train(two_circles(), true, SegmentationConfig{}, lib);
    std::stringstream ss;
    lib.save(ss);
    const auto back = NetworkLibrary::load(ss);
    CHECK(back.order() == 3);
    REQUIRE(back.size() == lib.size());
    const std::vector<double> x{0.11, 0.09, 0.1};
    for (NetworkId id = 0; id < static_cast<NetworkId>(lib.size()); ++id)
        CHECK(back.at(id).predict(x) == lib.at(id).predict(x));
    std::stringstream bad("premonn-library v9\n");
    CHECK_THROWS_AS(NetworkLibrary::load(bad), DataError);

    predictors::PredictorSpec wrong;
    wrong.input_dim = 2;
    CHECK_THROWS_AS(lib.add(predictors::TrainedPredictor::from_weights(wrong, {0, 0, 0})), InvalidArgument);
}

}  // TEST_SUITE
