#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace premonn::core {

struct EngineConfig {
    double sigma = 1.0;
    /// Lower clamp applied to every credit after renormalization; 0 disables.
    double credit_floor = 1e-4;
    std::size_t n_sources = 1;

    void validate() const;
};

/// Credits p^n over N sources. Stored as log-credits; values() is always
/// normalized to sum 1.
class CreditVector {
public:
    CreditVector() = default;

    static CreditVector from_probabilities(std::span<const double> p, std::size_t step_index = 0);

    std::size_t size() const { return log_credits_.size(); }
    std::size_t step_index() const { return step_index_; }
    std::vector<double> values() const;
    double operator[](std::size_t n) const;
    std::span<const double> log_values() const { return log_credits_; }

private:
    friend CreditVector update_credits_impl(const CreditVector&, std::span<const double>,
                                            const EngineConfig&, bool*);
    std::vector<double> log_credits_;
    std::size_t step_index_ = 0;
};

struct StepRecord {
    std::vector<double> errors;
    CreditVector credits_after;
    std::size_t winner = 0;
    /// Every kernel term underflowed; the step was treated as uninformative.
    bool underflow = false;
};

CreditVector init_credits(const EngineConfig& config,
                          const std::optional<std::vector<double>>& priors = std::nullopt);

/// One step of the Gaussian-kernel credit recursion followed by the floor clamp.
CreditVector update_credits(const CreditVector& state, std::span<const double> errors,
                            const EngineConfig& config);

/// Same as update_credits but reports whether the step was uninformative.
StepRecord step(const CreditVector& state, std::span<const double> errors,
                const EngineConfig& config);

/// Argmax of the credits; ties go to the lowest index.
std::size_t classify(const CreditVector& state);
std::size_t argmax_lowest(std::span<const double> values);

std::vector<StepRecord> run_stream(const std::vector<std::vector<double>>& predictor_errors,
                                   const EngineConfig& config,
                                   const std::optional<std::vector<double>>& priors = std::nullopt);

/// Line format: `step,e_1..e_N,p_1..p_N,winner` with a header row.
void write_trajectory(std::ostream& out, const std::vector<StepRecord>& records,
                      std::size_t n_sources);
std::vector<StepRecord> read_trajectory(std::istream& in);

}  // namespace premonn::core
