#include "premonn/credits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "premonn/error.hpp"

namespace premonn::core {

namespace {

double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void EngineConfig::validate() const {
    if (n_sources < 1) throw InvalidArgument("engine: n_sources must be >= 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("engine: sigma must be > 0");
    if (!(credit_floor >= 0.0) || credit_floor >= 1.0 / static_cast<double>(n_sources))
        throw InvalidArgument("engine: credit_floor must lie in [0, 1/N)");
}

CreditVector CreditVector::from_probabilities(std::span<const double> p, std::size_t step_index) {
    if (p.empty()) throw InvalidArgument("credits: empty vector");
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("credits: entries must be nonnegative");
        sum += x;
    }
    if (!(sum > 0.0)) throw InvalidArgument("credits: all entries zero");
    CreditVector c;
    c.step_index_ = step_index;
    c.log_credits_.reserve(p.size());
    for (double x : p) c.log_credits_.push_back(std::log(x / sum));
    return c;
}

std::vector<double> CreditVector::values() const {
    const double lse = log_sum_exp(log_credits_);
    std::vector<double> out(log_credits_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(log_credits_[i] - lse);
    return out;
}

double CreditVector::operator[](std::size_t n) const {
    return std::exp(log_credits_.at(n) - log_sum_exp(log_credits_));
}

CreditVector init_credits(const EngineConfig& config, const std::optional<std::vector<double>>& priors) {
    config.validate();
    if (!priors) {
        std::vector<double> uniform(config.n_sources, 1.0 / static_cast<double>(config.n_sources));
        return CreditVector::from_probabilities(uniform);
    }
    const auto& p = *priors;
    if (p.size() != config.n_sources) throw InvalidArgument("init_credits: prior length != N");
    double sum = 0.0;
    for (double x : p) {
        if (!(x > 0.0)) throw InvalidArgument("init_credits: priors must be strictly positive");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("init_credits: priors must sum to 1");
    return CreditVector::from_probabilities(p);
}

CreditVector update_credits_impl(const CreditVector& state, std::span<const double> errors,
                                 const EngineConfig& config, bool* underflow) {
    config.validate();
    const std::size_t n = state.size();
    if (n != config.n_sources) throw InvalidArgument("update_credits: state size != N");
    if (errors.size() != n) throw InvalidArgument("update_credits: error vector size != N");
    for (double e : errors)
        if (!std::isfinite(e)) throw InvalidArgument("update_credits: non-finite prediction error");

    std::vector<double> next(n);
    bool any_finite = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = errors[i] / config.sigma;
        const double log_kernel = -0.5 * z * z;
        next[i] = state.log_credits_[i] + log_kernel;
        any_finite = any_finite || std::isfinite(next[i]);
    }

    CreditVector out;
    out.step_index_ = state.step_index_ + 1;
    if (!any_finite) {
        if (underflow) *underflow = true;
        out.log_credits_ = state.log_credits_;
        return out;
    }
    if (underflow) *underflow = false;

    const double lse = log_sum_exp(next);
    for (double& x : next) x -= lse;

    if (config.credit_floor > 0.0) {
        const double log_floor = std::log(config.credit_floor);
        if (std::any_of(next.begin(), next.end(), [&](double x) { return x < log_floor; })) {
            for (double& x : next) x = std::max(x, log_floor);
            const double lse2 = log_sum_exp(next);
            for (double& x : next) x -= lse2;
        }
    }
    out.log_credits_ = std::move(next);
    return out;
}

CreditVector update_credits(const CreditVector& state, std::span<const double> errors,
                            const EngineConfig& config) {
    return update_credits_impl(state, errors, config, nullptr);
}

StepRecord step(const CreditVector& state, std::span<const double> errors, const EngineConfig& config) {
    StepRecord rec;
    rec.credits_after = update_credits_impl(state, errors, config, &rec.underflow);
    rec.errors.assign(errors.begin(), errors.end());
    rec.winner = classify(rec.credits_after);
    return rec;
}

std::size_t argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

std::size_t classify(const CreditVector& state) {
    // Compare in log space: monotone and free of exp rounding.
    return argmax_lowest(state.log_values());
}

std::vector<StepRecord> run_stream(const std::vector<std::vector<double>>& predictor_errors,
                                   const EngineConfig& config,
                                   const std::optional<std::vector<double>>& priors) {
    CreditVector state = init_credits(config, priors);
    std::vector<StepRecord> records;
    records.reserve(predictor_errors.size());
    for (const auto& e : predictor_errors) {
        records.push_back(step(state, e, config));
        state = records.back().credits_after;
    }
    return records;
}

void write_trajectory(std::ostream& out, const std::vector<StepRecord>& records, std::size_t n_sources) {
    out << "step";
    for (std::size_t i = 1; i <= n_sources; ++i) out << ",e_" << i;
    for (std::size_t i = 1; i <= n_sources; ++i) out << ",p_" << i;
    out << ",winner\n";
    for (const auto& r : records) {
        out << r.credits_after.step_index();
        for (double e : r.errors) out << ',' << fmt17(e);
        for (double p : r.credits_after.values()) out << ',' << fmt17(p);
        out << ',' << r.winner << '\n';
    }
}

std::vector<StepRecord> read_trajectory(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("trajectory: missing header");
    const auto n_fields = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (n_fields < 4 || (n_fields - 2) % 2 != 0) throw DataError("trajectory: malformed header");
    const std::size_t n = (n_fields - 2) / 2;

    std::vector<StepRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != n_fields) throw DataError("trajectory: wrong field count");
        try {
            StepRecord r;
            const auto step_index = static_cast<std::size_t>(std::stoull(cells[0]));
            std::vector<double> p(n);
            r.errors.resize(n);
            for (std::size_t i = 0; i < n; ++i) r.errors[i] = std::stod(cells[1 + i]);
            for (std::size_t i = 0; i < n; ++i) p[i] = std::stod(cells[1 + n + i]);
            r.credits_after = CreditVector::from_probabilities(p, step_index);
            r.winner = static_cast<std::size_t>(std::stoull(cells.back()));
            out.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw DataError(std::string("trajectory: bad value: ") + e.what());
        }
    }
    return out;
}

}  // namespace premonn::core
