#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace premonn::predictors {

enum class Activation { tanh, relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct PredictorSpec {
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    /// 0 selects a linear (affine) model.
    std::size_t hidden_units = 0;
    Activation activation = Activation::tanh;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t weight_count() const;
    bool is_linear() const { return hidden_units == 0; }
};

struct TrainConfig {
    std::size_t epochs = 2000;
    double learning_rate = 0.05;
    std::size_t batch_size = 16;
    double l2 = 0.0;
    double early_stop_tol = 0.0;

    void validate() const;
};

struct TrainingPair {
    std::vector<double> input;
    std::vector<double> target;
};
using TrainingSet = std::vector<TrainingPair>;

/// Per-dimension affine map x -> (x - offset) / scale onto roughly [-1, 1].
struct AffineMap {
    std::vector<double> offset;
    std::vector<double> scale;

    static AffineMap identity(std::size_t dim);
    static AffineMap fit(const std::vector<std::span<const double>>& rows, std::size_t dim);
    double forward(std::size_t i, double x) const { return (x - offset[i]) / scale[i]; }
    double inverse(std::size_t i, double z) const { return z * scale[i] + offset[i]; }
};

struct Normalization {
    AffineMap input;
    AffineMap output;
};

/// Immutable trained model; safe to share across threads for predict().
class TrainedPredictor {
public:
    TrainedPredictor() = default;
    TrainedPredictor(PredictorSpec spec, std::vector<double> weights, Normalization norm, double train_mse);

    /// Model acting directly on raw values (identity normalization).
    static TrainedPredictor from_weights(PredictorSpec spec, std::vector<double> weights);

    const PredictorSpec& spec() const { return spec_; }
    const std::vector<double>& weights() const { return weights_; }
    const Normalization& normalization() const { return norm_; }
    double train_mse() const { return train_mse_; }

    std::vector<double> predict(std::span<const double> input) const;
    /// Scalar shortcut for single-output models.
    double predict_scalar(std::span<const double> input) const;

    /// For linear models: raw-unit weights (output-major) and biases.
    void linear_coefficients(std::vector<double>& weights, std::vector<double>& bias) const;

private:
    PredictorSpec spec_;
    std::vector<double> weights_;
    Normalization norm_;
    double train_mse_ = 0.0;
};

/// Sliding windows of `order` past values (most recent first) and the next value.
TrainingSet make_training_pairs(std::span<const double> values, std::size_t order);

/// Same windows but wrapping around the end, so every sample is a target.
TrainingSet make_cyclic_training_pairs(std::span<const double> values, std::size_t order);

TrainedPredictor train(const TrainingSet& pairs, const PredictorSpec& spec, const TrainConfig& cfg);

/// Euclidean norm of observed - predicted.
double prediction_error(std::span<const double> observed, std::span<const double> predicted);

/// Mean-squared-error loss (halved) plus 0.5*l2*|W|^2 and its gradient for the MLP
/// parameterization, evaluated on already-normalized pairs.
double mlp_loss_and_gradient(const PredictorSpec& spec, std::span<const double> weights,
                             const TrainingSet& normalized_pairs, double l2,
                             std::vector<double>* gradient);

/// Independent per-channel predictors of one source.
struct PredictorGroup {
    std::vector<TrainedPredictor> channels;

    std::size_t size() const { return channels.size(); }
};

void save_predictor(std::ostream& out, const TrainedPredictor& p);
TrainedPredictor load_predictor(std::istream& in);
void save_predictor(const std::filesystem::path& path, const TrainedPredictor& p);
TrainedPredictor load_predictor(const std::filesystem::path& path);

}  // namespace premonn::predictors
