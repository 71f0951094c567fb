#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "premonn/credits.hpp"
#include "premonn/error.hpp"
#include "premonn/synthetic.hpp"

using namespace premonn;
using premonn::core::EngineConfig;

namespace {

EngineConfig engine(std::size_t n, double sigma = 1.0, double floor = 1e-4) {
    EngineConfig c;
    c.n_sources = n;
    c.sigma = sigma;
    c.credit_floor = floor;
    return c;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("init_credits: uniform default and explicit priors") {
    const auto u = core::init_credits(engine(4)).values();
    for (double p : u) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

    const auto p = core::init_credits(engine(2), std::vector<double>{0.3, 0.7}).values();
    CHECK(p[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.7).epsilon(1e-15));

    CHECK_THROWS_AS(core::init_credits(engine(2), std::vector<double>{0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(core::init_credits(engine(2), std::vector<double>{0.2, 0.2, 0.6}), InvalidArgument);
}

TEST_CASE("update_credits: equal errors change nothing") {
    const auto s = core::update_credits(core::init_credits(engine(2)), std::vector<double>{1.3, 1.3}, engine(2));
    CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("update_credits: two-source worked table") {
    const auto cfg = engine(2);
    const std::vector<double> e{0.0, 2.0};
    auto s = core::update_credits(core::init_credits(cfg), e, cfg);
    CHECK(s[0] == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(s[1] == doctest::Approx(0.1192).epsilon(1e-3));
    s = core::update_credits(s, e, cfg);
    CHECK(std::abs(s[0] - 0.9820) < 1e-4);
    CHECK(std::abs(s[1] - 0.0180) < 1e-4);
}

TEST_CASE("update_credits: rejects size mismatch and non-finite errors") {
    const auto cfg = engine(3);
    const auto s = core::init_credits(cfg);
    CHECK_THROWS_AS(core::update_credits(s, std::vector<double>{1.0, 2.0}, cfg), InvalidArgument);
    CHECK_THROWS_AS(core::update_credits(s, std::vector<double>{1.0, NAN, 0.0}, cfg), InvalidArgument);
}

TEST_CASE("classify: argmax with lowest-index ties") {
    CHECK(core::classify(core::CreditVector::from_probabilities(std::vector<double>{0.2, 0.5, 0.3})) == 1);
    CHECK(core::classify(core::CreditVector::from_probabilities(std::vector<double>{0.5, 0.5})) == 0);
    CHECK(core::classify(core::CreditVector::from_probabilities(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3})) == 0);
}

TEST_CASE("run_stream: empty input") {
    CHECK(core::run_stream({}, engine(3)).empty());
}

TEST_CASE("run_stream: constant errors grow the ratio by exp(1/2) per step") {
    const auto cfg = engine(2, 1.0, 0.0);
    const std::vector<std::vector<double>> errs(10, {0.0, 1.0});
    const auto recs = core::run_stream(errs, cfg);
    std::vector<double> ref{0.5, 0.5};
    double prev = 0.5;
    for (const auto& r : recs) {
        ref = oracle::credit_step(ref, {0.0, 1.0}, 1.0);
        CHECK(r.winner == 0);
        CHECK(r.credits_after[0] >= prev);
        CHECK(r.credits_after[0] == doctest::Approx(ref[0]).epsilon(1e-12));
        prev = r.credits_after[0];
    }
    const double ratio = recs[9].credits_after[0] / recs[9].credits_after[1];
    CHECK(ratio == doctest::Approx(std::exp(5.0)).epsilon(1e-9));
}

TEST_CASE("run_stream: the floor lets the winner follow a switch") {
    const auto cfg = engine(2, 1.0, 0.01);
    std::vector<std::vector<double>> errs(20, {0.0, 1.0});
    errs.insert(errs.end(), 20, {1.0, 0.0});
    const auto recs = core::run_stream(errs, cfg);
    std::size_t first = 0;
    for (std::size_t t = 20; t < recs.size() && !first; ++t)
        if (recs[t].winner == 1) first = t;
    REQUIRE(first > 0);
    CHECK(first - 20 < 10);
    for (std::size_t t = first; t < recs.size(); ++t) CHECK(recs[t].winner == 1);
}

TEST_CASE("credits stay normalized and above the floor") {
    synthetic::Rng rng(4);
    const auto cfg = engine(5, 0.3, 1e-3);
    auto s = core::init_credits(cfg);
    for (int k = 0; k < 2000; ++k) {
        std::vector<double> e(5);
        for (double& x : e) x = rng.uniform(0.0, 5.0);
        s = core::update_credits(s, e, cfg);
        const auto v = s.values();
        CHECK(std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0) <= 1e-12);
        for (double p : v) CHECK(p > 0.0);
    }
}

TEST_CASE("scale covariance: errors and sigma scaled together") {
    synthetic::Rng rng(5);
    std::vector<std::vector<double>> a, b;
    const double c = 3.7;
    for (int k = 0; k < 200; ++k) {
        std::vector<double> e{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
        a.push_back(e);
        for (double& x : e) x *= c;
        b.push_back(e);
    }
    const auto ra = core::run_stream(a, engine(3, 0.8, 0.0)), rb = core::run_stream(b, engine(3, 0.8 * c, 0.0));
    for (std::size_t t = 0; t < ra.size(); ++t)
        for (std::size_t n = 0; n < 3; ++n) CHECK(std::abs(ra[t].credits_after[n] - rb[t].credits_after[n]) <= 1e-12);
}

TEST_CASE("a common term added to every squared error cancels") {
    synthetic::Rng rng(6);
    const auto cfg = engine(3, 1.0, 0.0);
    auto s = core::init_credits(cfg);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> e{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const double add = rng.uniform(0.0, 4.0);
        std::vector<double> e2;
        for (double x : e) e2.push_back(std::sqrt(x * x + add));
        const auto p = core::update_credits(s, e, cfg), q = core::update_credits(s, e2, cfg);
        for (std::size_t n = 0; n < 3; ++n) CHECK(std::abs(p[n] - q[n]) <= 1e-12);
        s = p;
    }
}

TEST_CASE("dominance: a source with smaller errors always has more credit") {
    synthetic::Rng rng(7);
    std::vector<std::vector<double>> errs;
    for (int k = 0; k < 300; ++k) {
        const double ea = rng.uniform(0.0, 1.0);
        errs.push_back({ea + rng.uniform(0.01, 1.0), ea});
    }
    for (const auto& r : core::run_stream(errs, engine(2, 0.5, 0.0))) CHECK(r.credits_after[1] > r.credits_after[0]);
}

TEST_CASE("i.i.d. errors: the lowest-MSE source wins almost always") {
    synthetic::Rng rng(8);
    std::vector<std::vector<double>> errs;
    for (int k = 0; k < 1000; ++k)
        errs.push_back({0.5 * std::abs(rng.normal()), 0.35 * std::abs(rng.normal()), 0.6 * std::abs(rng.normal())});
    std::size_t wins = 0;
    for (const auto& r : core::run_stream(errs, engine(3, 0.5))) wins += r.winner == 1;
    CHECK(static_cast<double>(wins) / 1000.0 >= 0.99);
}

TEST_CASE("underflow leaves the credits untouched and is flagged") {
    const auto cfg = engine(2);
    const auto s = core::update_credits(core::init_credits(cfg), std::vector<double>{0.0, 1.0}, cfg);
    const auto rec = core::step(s, std::vector<double>{1e200, 1e200}, cfg);
    CHECK(rec.underflow);
    CHECK(rec.credits_after[0] == s[0]);
    CHECK(rec.credits_after[1] == s[1]);
    CHECK_FALSE(core::step(s, std::vector<double>{1.0, 2.0}, cfg).underflow);
}

TEST_CASE("long runs of large errors do not lose precision") {
    const auto cfg = engine(2, 1.0, 0.0);
    auto s = core::init_credits(cfg);
    for (int k = 0; k < 10000; ++k) s = core::update_credits(s, std::vector<double>{30.0, 30.5}, cfg);
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(std::isfinite(s.log_values()[1]));
    CHECK(s.log_values()[1] < -1e4);
}

TEST_CASE("trajectory CSV round trip") {
    const std::vector<std::vector<double>> errs{{0.1, 0.2}, {0.3, 0.05}, {0.0, 1.0}};
    const auto recs = core::run_stream(errs, engine(2));
    std::stringstream ss;
    core::write_trajectory(ss, recs, 2);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "step,e_1,e_2,p_1,p_2,winner");
    ss.seekg(0);
    const auto back = core::read_trajectory(ss);
    REQUIRE(back.size() == recs.size());
    for (std::size_t t = 0; t < recs.size(); ++t) {
        CHECK(back[t].winner == recs[t].winner);
        CHECK(back[t].errors == recs[t].errors);
        CHECK(back[t].credits_after[1] == doctest::Approx(recs[t].credits_after[1]).epsilon(1e-15));
    }
    std::stringstream bad("nonsense\n");
    CHECK_THROWS_AS(core::read_trajectory(bad), DataError);
}

TEST_CASE("engine config validation") {
    CHECK_THROWS_AS(engine(0).validate(), InvalidArgument);
    CHECK_THROWS_AS(engine(2, 0.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(engine(2, 1.0, 0.5).validate(), InvalidArgument);
    CHECK_NOTHROW(engine(2, 1.0, 0.0).validate());
}

}  // TEST_SUITE
