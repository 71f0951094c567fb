#include "premonn/predictor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "premonn/error.hpp"

namespace premonn::predictors {

namespace {

constexpr const char* kMagic = "premonn-predictor";
constexpr int kFormatVersion = 1;

// Portable uniform [0,1) from a 64-bit engine.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double activate(Activation a, double x) {
    return a == Activation::tanh ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

// Derivative expressed through the activation output.
double activate_deriv(Activation a, double pre, double post) {
    if (a == Activation::tanh) return 1.0 - post * post;
    return pre > 0.0 ? 1.0 : 0.0;
}

struct MlpView {
    std::size_t in, hidden, out;
    std::span<const double> w;
    const double* w1() const { return w.data(); }
    const double* b1() const { return w.data() + hidden * in; }
    const double* w2() const { return b1() + hidden; }
    const double* b2() const { return w2() + out * hidden; }
};

void mlp_forward(const MlpView& m, Activation act, std::span<const double> x, std::vector<double>& pre,
                 std::vector<double>& h, std::vector<double>& y) {
    pre.assign(m.hidden, 0.0);
    h.assign(m.hidden, 0.0);
    y.assign(m.out, 0.0);
    for (std::size_t j = 0; j < m.hidden; ++j) {
        double s = m.b1()[j];
        const double* row = m.w1() + j * m.in;
        for (std::size_t i = 0; i < m.in; ++i) s += row[i] * x[i];
        pre[j] = s;
        h[j] = activate(act, s);
    }
    for (std::size_t o = 0; o < m.out; ++o) {
        double s = m.b2()[o];
        const double* row = m.w2() + o * m.hidden;
        for (std::size_t j = 0; j < m.hidden; ++j) s += row[j] * h[j];
        y[o] = s;
    }
}

void check_pairs(const TrainingSet& pairs, const PredictorSpec& spec) {
    if (pairs.empty()) throw InvalidArgument("train: no training pairs");
    for (const auto& p : pairs) {
        if (p.input.size() != spec.input_dim || p.target.size() != spec.output_dim)
            throw InvalidArgument("train: pair dimensions do not match predictor spec");
        for (double v : p.input)
            if (!std::isfinite(v)) throw InvalidArgument("train: non-finite input value");
        for (double v : p.target)
            if (!std::isfinite(v)) throw InvalidArgument("train: non-finite target value");
    }
}

TrainingSet normalize_pairs(const TrainingSet& pairs, const Normalization& norm) {
    TrainingSet out = pairs;
    for (auto& p : out) {
        for (std::size_t i = 0; i < p.input.size(); ++i) p.input[i] = norm.input.forward(i, p.input[i]);
        for (std::size_t o = 0; o < p.target.size(); ++o) p.target[o] = norm.output.forward(o, p.target[o]);
    }
    return out;
}

std::vector<double> fit_linear(const TrainingSet& npairs, const PredictorSpec& spec, double l2) {
    const auto n = static_cast<Eigen::Index>(npairs.size());
    const auto in = static_cast<Eigen::Index>(spec.input_dim);
    const auto out = static_cast<Eigen::Index>(spec.output_dim);
    const Eigen::Index reg_rows = l2 > 0.0 ? in : 0;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + reg_rows, in + 1);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + reg_rows, out);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& p = npairs[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < in; ++i) a(k, i) = p.input[static_cast<std::size_t>(i)];
        a(k, in) = 1.0;
        for (Eigen::Index o = 0; o < out; ++o) rhs(k, o) = p.target[static_cast<std::size_t>(o)];
    }
    // Ridge on weights only, scaled to match the mean loss convention.
    const double r = std::sqrt(l2 * static_cast<double>(n));
    for (Eigen::Index i = 0; i < reg_rows; ++i) a(n + i, i) = r;

    const Eigen::MatrixXd sol = a.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) throw NumericalError("train: least-squares solve produced non-finite weights");

    std::vector<double> w(spec.weight_count());
    for (Eigen::Index o = 0; o < out; ++o) {
        for (Eigen::Index i = 0; i < in; ++i) w[static_cast<std::size_t>(o * in + i)] = sol(i, o);
        w[static_cast<std::size_t>(out * in + o)] = sol(in, o);
    }
    return w;
}

std::vector<double> fit_mlp(const TrainingSet& npairs, const PredictorSpec& spec, const TrainConfig& cfg) {
    std::mt19937_64 rng(spec.seed);
    std::vector<double> w(spec.weight_count());
    const std::size_t in = spec.input_dim, hid = spec.hidden_units, out = spec.output_dim;
    {
        const double b1 = 1.0 / std::sqrt(static_cast<double>(in));
        const double b2 = 1.0 / std::sqrt(static_cast<double>(hid));
        std::size_t k = 0;
        for (std::size_t i = 0; i < hid * in + hid; ++i) w[k++] = (2.0 * unit_uniform(rng) - 1.0) * b1;
        for (std::size_t i = 0; i < out * hid + out; ++i) w[k++] = (2.0 * unit_uniform(rng) - 1.0) * b2;
    }

    std::vector<std::size_t> order(npairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::min(cfg.batch_size, npairs.size());
    std::vector<double> grad;
    TrainingSet mb;
    mb.reserve(batch);
    double prev_loss = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            mb.clear();
            for (std::size_t k = start; k < std::min(start + batch, order.size()); ++k)
                mb.push_back(npairs[order[k]]);
            const double loss = mlp_loss_and_gradient(spec, w, mb, cfg.l2, &grad);
            if (!std::isfinite(loss)) throw NumericalError("train: loss diverged (learning rate too large?)");
            for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * grad[k];
        }
        if (cfg.early_stop_tol > 0.0) {
            const double loss = mlp_loss_and_gradient(spec, w, npairs, cfg.l2, nullptr);
            if (!std::isfinite(loss)) throw NumericalError("train: loss diverged (learning rate too large?)");
            if (std::abs(prev_loss - loss) < cfg.early_stop_tol) break;
            prev_loss = loss;
        }
    }
    // An output that never varies is realizable exactly; gradient descent only
    // approaches it, so pin it.
    for (std::size_t o = 0; o < out; ++o) {
        const double c = npairs.front().target[o];
        if (std::any_of(npairs.begin(), npairs.end(), [&](const TrainingPair& p) { return p.target[o] != c; })) continue;
        std::fill_n(w.begin() + static_cast<std::ptrdiff_t>(hid * in + hid + o * hid), hid, 0.0);
        w[hid * in + hid + out * hid + o] = c;
    }
    for (double v : w)
        if (!std::isfinite(v)) throw NumericalError("train: non-finite weights after training");
    return w;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw InvalidArgument("unknown activation '" + s + "'");
}

void PredictorSpec::validate() const {
    if (input_dim < 1 || output_dim < 1) throw InvalidArgument("predictor: input_dim and output_dim must be >= 1");
}

std::size_t PredictorSpec::weight_count() const {
    if (hidden_units == 0) return output_dim * input_dim + output_dim;
    return hidden_units * input_dim + hidden_units + output_dim * hidden_units + output_dim;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("train config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("train config: learning_rate must be > 0");
    if (batch_size < 1) throw InvalidArgument("train config: batch_size must be >= 1");
    if (!(l2 >= 0.0)) throw InvalidArgument("train config: l2 must be >= 0");
    if (!(early_stop_tol >= 0.0)) throw InvalidArgument("train config: early_stop_tol must be >= 0");
}

AffineMap AffineMap::identity(std::size_t dim) {
    return AffineMap{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

AffineMap AffineMap::fit(const std::vector<std::span<const double>>& rows, std::size_t dim) {
    AffineMap m = identity(dim);
    if (rows.empty()) return m;
    for (std::size_t i = 0; i < dim; ++i) {
        double lo = rows.front()[i], hi = lo;
        for (const auto& r : rows) {
            lo = std::min(lo, r[i]);
            hi = std::max(hi, r[i]);
        }
        m.offset[i] = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        m.scale[i] = half > 1e-12 * std::max(1.0, std::abs(m.offset[i])) ? half : 1.0;
    }
    return m;
}

TrainedPredictor::TrainedPredictor(PredictorSpec spec, std::vector<double> weights, Normalization norm,
                                   double train_mse)
    : spec_(spec), weights_(std::move(weights)), norm_(std::move(norm)), train_mse_(train_mse) {
    spec_.validate();
    if (weights_.size() != spec_.weight_count()) throw InvalidArgument("predictor: weight count mismatch");
    if (norm_.input.offset.size() != spec_.input_dim || norm_.input.scale.size() != spec_.input_dim ||
        norm_.output.offset.size() != spec_.output_dim || norm_.output.scale.size() != spec_.output_dim)
        throw InvalidArgument("predictor: normalization dimension mismatch");
}

TrainedPredictor TrainedPredictor::from_weights(PredictorSpec spec, std::vector<double> weights) {
    Normalization norm{AffineMap::identity(spec.input_dim), AffineMap::identity(spec.output_dim)};
    return TrainedPredictor(spec, std::move(weights), std::move(norm), 0.0);
}

std::vector<double> TrainedPredictor::predict(std::span<const double> input) const {
    if (input.size() != spec_.input_dim) throw InvalidArgument("predict: input length mismatch");
    std::vector<double> x(input.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(input[i])) throw InvalidArgument("predict: non-finite input");
        x[i] = norm_.input.forward(i, input[i]);
    }
    std::vector<double> y(spec_.output_dim, 0.0);
    if (spec_.is_linear()) {
        const std::size_t in = spec_.input_dim;
        for (std::size_t o = 0; o < y.size(); ++o) {
            double s = weights_[y.size() * in + o];
            for (std::size_t i = 0; i < in; ++i) s += weights_[o * in + i] * x[i];
            y[o] = s;
        }
    } else {
        MlpView m{spec_.input_dim, spec_.hidden_units, spec_.output_dim, weights_};
        std::vector<double> pre, h;
        mlp_forward(m, spec_.activation, x, pre, h, y);
    }
    for (std::size_t o = 0; o < y.size(); ++o) y[o] = norm_.output.inverse(o, y[o]);
    return y;
}

double TrainedPredictor::predict_scalar(std::span<const double> input) const {
    if (spec_.output_dim != 1) throw InvalidArgument("predict_scalar: model has more than one output");
    return predict(input)[0];
}

void TrainedPredictor::linear_coefficients(std::vector<double>& weights, std::vector<double>& bias) const {
    if (!spec_.is_linear()) throw InvalidArgument("linear_coefficients: model is not linear");
    const std::size_t in = spec_.input_dim, out = spec_.output_dim;
    weights.assign(out * in, 0.0);
    bias.assign(out, 0.0);
    // y = so * (sum_i w_i (x_i - oi)/si + b) + oo
    for (std::size_t o = 0; o < out; ++o) {
        const double so = norm_.output.scale[o];
        double b = weights_[out * in + o];
        for (std::size_t i = 0; i < in; ++i) {
            const double wi = weights_[o * in + i] / norm_.input.scale[i];
            weights[o * in + i] = so * wi;
            b -= wi * norm_.input.offset[i];
        }
        bias[o] = so * b + norm_.output.offset[o];
    }
}

TrainingSet make_training_pairs(std::span<const double> values, std::size_t order) {
    if (order < 1) throw InvalidArgument("make_training_pairs: order must be >= 1");
    if (values.size() <= order) throw InvalidArgument("make_training_pairs: sequence too short for order");
    TrainingSet out;
    out.reserve(values.size() - order);
    for (std::size_t k = 0; k + order < values.size(); ++k) {
        TrainingPair p;
        p.input.resize(order);
        for (std::size_t m = 0; m < order; ++m) p.input[m] = values[k + order - 1 - m];
        p.target = {values[k + order]};
        out.push_back(std::move(p));
    }
    return out;
}

TrainingSet make_cyclic_training_pairs(std::span<const double> values, std::size_t order) {
    if (order < 1) throw InvalidArgument("make_cyclic_training_pairs: order must be >= 1");
    const std::size_t n = values.size();
    if (n <= order) throw InvalidArgument("make_cyclic_training_pairs: sequence too short for order");
    TrainingSet out;
    out.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        TrainingPair p;
        p.input.resize(order);
        for (std::size_t m = 0; m < order; ++m) p.input[m] = values[(t + n - 1 - m) % n];
        p.target = {values[t]};
        out.push_back(std::move(p));
    }
    return out;
}

double mlp_loss_and_gradient(const PredictorSpec& spec, std::span<const double> weights,
                             const TrainingSet& pairs, double l2, std::vector<double>* gradient) {
    if (spec.is_linear()) throw InvalidArgument("mlp_loss_and_gradient: spec is linear");
    if (weights.size() != spec.weight_count()) throw InvalidArgument("mlp_loss_and_gradient: weight count mismatch");
    const std::size_t in = spec.input_dim, hid = spec.hidden_units, out = spec.output_dim;
    MlpView m{in, hid, out, weights};
    if (gradient) gradient->assign(weights.size(), 0.0);

    double loss = 0.0;
    std::vector<double> pre, h, y, dh(hid);
    const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(pairs.size(), 1));
    for (const auto& p : pairs) {
        mlp_forward(m, spec.activation, p.input, pre, h, y);
        for (std::size_t o = 0; o < out; ++o) {
            const double r = y[o] - p.target[o];
            loss += 0.5 * r * r * inv_n;
        }
        if (!gradient) continue;
        double* g = gradient->data();
        double* gw1 = g;
        double* gb1 = g + hid * in;
        double* gw2 = gb1 + hid;
        double* gb2 = gw2 + out * hid;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double r = (y[o] - p.target[o]) * inv_n;
            gb2[o] += r;
            for (std::size_t j = 0; j < hid; ++j) {
                gw2[o * hid + j] += r * h[j];
                dh[j] += r * m.w2()[o * hid + j];
            }
        }
        for (std::size_t j = 0; j < hid; ++j) {
            const double d = dh[j] * activate_deriv(spec.activation, pre[j], h[j]);
            gb1[j] += d;
            for (std::size_t i = 0; i < in; ++i) gw1[j * in + i] += d * p.input[i];
        }
    }
    if (l2 > 0.0) {
        auto penalize = [&](std::size_t begin, std::size_t count) {
            for (std::size_t k = begin; k < begin + count; ++k) {
                loss += 0.5 * l2 * weights[k] * weights[k];
                if (gradient) (*gradient)[k] += l2 * weights[k];
            }
        };
        penalize(0, hid * in);
        penalize(hid * in + hid, out * hid);
    }
    return loss;
}

TrainedPredictor train(const TrainingSet& pairs, const PredictorSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    check_pairs(pairs, spec);

    std::vector<std::span<const double>> in_rows, out_rows;
    for (const auto& p : pairs) {
        in_rows.emplace_back(p.input);
        out_rows.emplace_back(p.target);
    }
    Normalization norm{AffineMap::fit(in_rows, spec.input_dim), AffineMap::fit(out_rows, spec.output_dim)};
    const TrainingSet npairs = normalize_pairs(pairs, norm);

    std::vector<double> w = spec.is_linear() ? fit_linear(npairs, spec, cfg.l2) : fit_mlp(npairs, spec, cfg);
    TrainedPredictor model(spec, std::move(w), std::move(norm), 0.0);

    double sse = 0.0;
    for (const auto& p : pairs) {
        const auto y = model.predict(p.input);
        for (std::size_t o = 0; o < y.size(); ++o) sse += (y[o] - p.target[o]) * (y[o] - p.target[o]);
    }
    const double mse = sse / static_cast<double>(pairs.size() * spec.output_dim);
    if (!std::isfinite(mse)) throw NumericalError("train: non-finite training loss");
    return TrainedPredictor(spec, model.weights(), model.normalization(), mse);
}

double prediction_error(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size()) throw InvalidArgument("prediction_error: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - predicted[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void save_predictor(std::ostream& out, const TrainedPredictor& p) {
    const auto& s = p.spec();
    const auto& n = p.normalization();
    out << kMagic << " v" << kFormatVersion << '\n';
    out << "spec " << s.input_dim << ' ' << s.output_dim << ' ' << s.hidden_units << ' '
        << to_string(s.activation) << ' ' << s.seed << ' ' << fmt17(p.train_mse()) << '\n';
    out << "norm";
    for (const auto* v : {&n.input.offset, &n.input.scale, &n.output.offset, &n.output.scale})
        for (double x : *v) out << ' ' << fmt17(x);
    out << '\n';
    out << "weights " << p.weights().size();
    for (double x : p.weights()) out << ' ' << fmt17(x);
    out << '\n';
}

TrainedPredictor load_predictor(std::istream& in) {
    std::string line, tag;
    if (!std::getline(in, line)) throw DataError("predictor: empty stream");
    {
        std::istringstream hs(line);
        std::string magic, version;
        hs >> magic >> version;
        if (magic != kMagic) throw DataError("predictor: bad magic");
        if (version != "v" + std::to_string(kFormatVersion)) throw DataError("predictor: unsupported version " + version);
    }
    PredictorSpec spec;
    double mse = 0.0;
    {
        if (!std::getline(in, line)) throw DataError("predictor: missing spec line");
        std::istringstream ss(line);
        std::string act;
        ss >> tag >> spec.input_dim >> spec.output_dim >> spec.hidden_units >> act >> spec.seed >> mse;
        if (!ss || tag != "spec") throw DataError("predictor: malformed spec line");
        spec.activation = activation_from_string(act);
    }
    Normalization norm{AffineMap::identity(spec.input_dim), AffineMap::identity(spec.output_dim)};
    {
        if (!std::getline(in, line)) throw DataError("predictor: missing normalization line");
        std::istringstream ss(line);
        ss >> tag;
        if (tag != "norm") throw DataError("predictor: malformed normalization line");
        for (auto* v : {&norm.input.offset, &norm.input.scale, &norm.output.offset, &norm.output.scale})
            for (double& x : *v) ss >> x;
        if (!ss) throw DataError("predictor: truncated normalization line");
    }
    std::vector<double> w;
    {
        if (!std::getline(in, line)) throw DataError("predictor: missing weights line");
        std::istringstream ss(line);
        std::size_t count = 0;
        ss >> tag >> count;
        if (!ss || tag != "weights") throw DataError("predictor: malformed weights line");
        w.resize(count);
        for (double& x : w) ss >> x;
        if (!ss) throw DataError("predictor: truncated weights line");
    }
    try {
        return TrainedPredictor(spec, std::move(w), std::move(norm), mse);
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
}

void save_predictor(const std::filesystem::path& path, const TrainedPredictor& p) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write predictor file " + path.string());
    save_predictor(f, p);
}

TrainedPredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot read predictor file " + path.string());
    return load_predictor(f);
}

}  // namespace premonn::predictors
