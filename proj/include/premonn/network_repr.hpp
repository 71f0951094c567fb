#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "premonn/predictor.hpp"

namespace premonn::repr {

using NetworkId = int;

struct NetworkString {
    std::vector<NetworkId> symbols;
    bool cyclic = false;

    std::size_t size() const { return symbols.size(); }
    friend bool operator==(const NetworkString&, const NetworkString&) = default;
};

struct NetworkHistogram {
    std::map<NetworkId, std::size_t> counts;  // empty for averaged histograms
    std::map<NetworkId, double> freq;
};

/// Scalar AR(M) predictors over a curvature sequence, shared across items so
/// their identifiers are comparable.
class NetworkLibrary {
public:
    explicit NetworkLibrary(std::size_t order = 3) : order_(order) {}

    std::size_t order() const { return order_; }
    std::size_t size() const { return nets_.size(); }
    bool empty() const { return nets_.empty(); }
    const predictors::TrainedPredictor& at(NetworkId id) const { return nets_.at(static_cast<std::size_t>(id)); }

    NetworkId add(predictors::TrainedPredictor p);
    void replace(NetworkId id, predictors::TrainedPredictor p);

    /// `premonn-library v1`, order, count, then the predictor files inline.
    void save(std::ostream& out) const;
    static NetworkLibrary load(std::istream& in);

private:
    std::size_t order_;
    std::vector<predictors::TrainedPredictor> nets_;
};

/// One-step AR pairs over a sequence: cyclic sequences give one pair per
/// sample, open ones skip the first `order` samples. pair k targets sample
/// k (cyclic) or k + order (open).
predictors::TrainingSet sequence_pairs(std::span<const double> seq, bool cyclic, std::size_t order);

/// Mean absolute one-step error of a network over pairs [begin, end).
double mean_error(const predictors::TrainedPredictor& net, const predictors::TrainingSet& pairs, std::size_t begin,
                  std::size_t end);

struct SegmentationConfig {
    double error_threshold = 0.01;
    std::size_t min_segment_len = 16;
    predictors::PredictorSpec spec;  // input_dim/output_dim are overridden
    predictors::TrainConfig train;

    void validate(std::size_t order) const;
};

struct Segment {
    std::size_t begin = 0;  // pair indices
    std::size_t end = 0;
    NetworkId id = 0;
};

struct SegmentationResult {
    NetworkString string;
    std::vector<Segment> segments;
    /// A trailing piece shorter than min_segment_len was absorbed by the last block.
    bool merged_tail = false;
};

/// Greedy online segmentation in blocks of min_segment_len: a block extends
/// the current segment while the segment's network stays within the error
/// threshold on it; otherwise the segment closes and the next one starts with
/// the best library network that fits the block, or a new network trained on
/// it. A newly created network is retrained on its whole segment.
SegmentationResult segment_and_train(std::span<const double> seq, bool cyclic, const SegmentationConfig& cfg,
                                     NetworkLibrary& library);

struct Labeling {
    NetworkString string;           // run-length collapsed
    std::vector<NetworkId> windows;  // winner per window
    double mean_winner_error = 0.0;
    bool low_confidence = false;
};

/// Winner (smallest mean error) per window of `window` pairs, stride = window;
/// a short tail joins the last window.
Labeling label_sequence(std::span<const double> seq, bool cyclic, const NetworkLibrary& library, std::size_t window,
                        double error_threshold);

/// Collapses runs of equal symbols, including across the wrap when cyclic.
NetworkString collapse(std::span<const NetworkId> symbols, bool cyclic);

NetworkHistogram histogram(std::span<const NetworkId> windows);
NetworkHistogram mean_histogram(std::span<const NetworkHistogram> hs);
/// L1 distance between normalized frequencies.
double histogram_distance(const NetworkHistogram& a, const NetworkHistogram& b);

std::size_t levenshtein(std::span<const NetworkId> a, std::span<const NetworkId> b);
/// Minimum over every rotation of `b`.
std::size_t shift_min_levenshtein(std::span<const NetworkId> a, std::span<const NetworkId> b);

/// CSV dumps: `id,count,freq` rows, and one `symbols,cyclic` row with the symbols joined by ';'.
void write_histogram_csv(std::ostream& out, const NetworkHistogram& h);
void write_string_csv(std::ostream& out, const NetworkString& s);

}  // namespace premonn::repr
