#include "premonn/network_repr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "premonn/error.hpp"

namespace premonn::repr {

using predictors::TrainedPredictor;
using predictors::TrainingSet;

NetworkId NetworkLibrary::add(TrainedPredictor p) {
    if (p.spec().input_dim != order_ || p.spec().output_dim != 1)
        throw InvalidArgument("network library: predictor does not match the library order");
    nets_.push_back(std::move(p));
    return static_cast<NetworkId>(nets_.size() - 1);
}

void NetworkLibrary::replace(NetworkId id, TrainedPredictor p) {
    if (p.spec().input_dim != order_ || p.spec().output_dim != 1)
        throw InvalidArgument("network library: predictor does not match the library order");
    nets_.at(static_cast<std::size_t>(id)) = std::move(p);
}

void NetworkLibrary::save(std::ostream& out) const {
    out << "premonn-library v1\n" << order_ << ' ' << nets_.size() << '\n';
    for (const auto& n : nets_) predictors::save_predictor(out, n);
}

NetworkLibrary NetworkLibrary::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "premonn-library v1") throw DataError("network library: bad header");
    std::size_t order = 0, count = 0;
    if (!std::getline(in, line)) throw DataError("network library: missing size line");
    std::istringstream ss(line);
    if (!(ss >> order >> count) || order == 0) throw DataError("network library: malformed size line");
    NetworkLibrary lib(order);
    for (std::size_t k = 0; k < count; ++k) {
        try {
            lib.add(predictors::load_predictor(in));
        } catch (const InvalidArgument& e) {
            throw DataError(e.what());
        }
    }
    return lib;
}

TrainingSet sequence_pairs(std::span<const double> seq, bool cyclic, std::size_t order) {
    if (order == 0) throw InvalidArgument("sequence_pairs: order must be >= 1");
    const std::vector<double> v(seq.begin(), seq.end());
    if (cyclic) {
        if (v.size() <= order) throw InvalidArgument("sequence_pairs: cyclic sequence shorter than order + 1");
        return predictors::make_cyclic_training_pairs(v, order);
    }
    return predictors::make_training_pairs(v, order);
}

double mean_error(const TrainedPredictor& net, const TrainingSet& pairs, std::size_t begin, std::size_t end) {
    if (begin >= end || end > pairs.size()) throw InvalidArgument("mean_error: empty or out-of-range window");
    double sum = 0.0;
    for (std::size_t k = begin; k < end; ++k) sum += std::abs(net.predict_scalar(pairs[k].input) - pairs[k].target[0]);
    return sum / static_cast<double>(end - begin);
}

void SegmentationConfig::validate(std::size_t order) const {
    if (!(error_threshold > 0.0)) throw InvalidArgument("segmentation: error_threshold must be > 0");
    if (min_segment_len <= order) throw InvalidArgument("segmentation: min_segment_len must exceed the AR order");
    train.validate();
}

namespace {

struct Block {
    std::size_t begin, end;
};

// Tiles [0, n) by `len`; a short tail joins the last block.
std::vector<Block> tile(std::size_t n, std::size_t len, bool* merged) {
    std::vector<Block> blocks;
    for (std::size_t b = 0; b + len <= n; b += len) blocks.push_back({b, b + len});
    if (!blocks.empty() && blocks.back().end < n) {
        blocks.back().end = n;
        if (merged) *merged = true;
    }
    return blocks;
}

TrainedPredictor train_on(const TrainingSet& pairs, std::size_t begin, std::size_t end, const SegmentationConfig& cfg,
                          std::size_t order, std::uint64_t seed) {
    const TrainingSet part(pairs.begin() + static_cast<std::ptrdiff_t>(begin), pairs.begin() + static_cast<std::ptrdiff_t>(end));
    predictors::PredictorSpec spec = cfg.spec;
    spec.input_dim = order;
    spec.output_dim = 1;
    spec.seed = seed;
    return predictors::train(part, spec, cfg.train);
}

}  // namespace

SegmentationResult segment_and_train(std::span<const double> seq, bool cyclic, const SegmentationConfig& cfg,
                                     NetworkLibrary& library) {
    cfg.validate(library.order());
    const TrainingSet pairs = sequence_pairs(seq, cyclic, library.order());
    if (pairs.size() < cfg.min_segment_len) throw InvalidArgument("segment_and_train: sequence shorter than min_segment_len");

    SegmentationResult res;
    const auto blocks = tile(pairs.size(), cfg.min_segment_len, &res.merged_tail);

    NetworkId current = -1;
    bool fresh = false;
    std::size_t seg_begin = 0;
    auto close = [&](std::size_t end) {
        if (fresh && end - seg_begin > cfg.min_segment_len)
            library.replace(current, train_on(pairs, seg_begin, end, cfg, library.order(), cfg.spec.seed + static_cast<std::uint64_t>(current)));
        res.segments.push_back({seg_begin, end, current});
    };
    for (const auto& b : blocks) {
        if (current >= 0 && mean_error(library.at(current), pairs, b.begin, b.end) <= cfg.error_threshold) continue;
        if (current >= 0) close(b.begin);
        seg_begin = b.begin;
        NetworkId best = -1;
        double best_err = std::numeric_limits<double>::infinity();
        for (NetworkId id = 0; id < static_cast<NetworkId>(library.size()); ++id) {
            const double e = mean_error(library.at(id), pairs, b.begin, b.end);
            if (e < best_err) {
                best_err = e;
                best = id;
            }
        }
        if (best >= 0 && best_err <= cfg.error_threshold) {
            current = best;
            fresh = false;
        } else {
            const auto seed = cfg.spec.seed + static_cast<std::uint64_t>(library.size());
            current = library.add(train_on(pairs, b.begin, b.end, cfg, library.order(), seed));
            fresh = true;
        }
    }
    close(pairs.size());

    std::vector<NetworkId> ids;
    for (const auto& s : res.segments) ids.push_back(s.id);
    res.string = collapse(ids, cyclic);
    return res;
}

Labeling label_sequence(std::span<const double> seq, bool cyclic, const NetworkLibrary& library, std::size_t window,
                        double error_threshold) {
    if (library.empty()) throw InvalidArgument("label_sequence: empty network library");
    if (window == 0) throw InvalidArgument("label_sequence: window must be >= 1");
    const TrainingSet pairs = sequence_pairs(seq, cyclic, library.order());
    if (pairs.size() < window) throw InvalidArgument("label_sequence: sequence shorter than one window");

    Labeling out;
    double err_sum = 0.0;
    const auto blocks = tile(pairs.size(), window, nullptr);
    for (const auto& b : blocks) {
        NetworkId best = 0;
        double best_err = std::numeric_limits<double>::infinity();
        for (NetworkId id = 0; id < static_cast<NetworkId>(library.size()); ++id) {
            const double e = mean_error(library.at(id), pairs, b.begin, b.end);
            if (e < best_err) {
                best_err = e;
                best = id;
            }
        }
        out.windows.push_back(best);
        err_sum += best_err;
    }
    out.mean_winner_error = err_sum / static_cast<double>(blocks.size());
    out.low_confidence = !(out.mean_winner_error <= error_threshold);
    out.string = collapse(out.windows, cyclic);
    return out;
}

NetworkString collapse(std::span<const NetworkId> symbols, bool cyclic) {
    NetworkString s;
    s.cyclic = cyclic;
    for (NetworkId id : symbols)
        if (s.symbols.empty() || s.symbols.back() != id) s.symbols.push_back(id);
    if (cyclic)
        while (s.symbols.size() > 1 && s.symbols.front() == s.symbols.back()) s.symbols.pop_back();
    return s;
}

NetworkHistogram histogram(std::span<const NetworkId> windows) {
    if (windows.empty()) throw InvalidArgument("histogram: no windows");
    NetworkHistogram h;
    for (NetworkId id : windows) ++h.counts[id];
    for (const auto& [id, c] : h.counts) h.freq[id] = static_cast<double>(c) / static_cast<double>(windows.size());
    return h;
}

NetworkHistogram mean_histogram(std::span<const NetworkHistogram> hs) {
    if (hs.empty()) throw InvalidArgument("mean_histogram: no histograms");
    NetworkHistogram m;
    for (const auto& h : hs)
        for (const auto& [id, f] : h.freq) m.freq[id] += f;
    for (auto& [id, f] : m.freq) f /= static_cast<double>(hs.size());
    return m;
}

double histogram_distance(const NetworkHistogram& a, const NetworkHistogram& b) {
    double d = 0.0;
    auto ia = a.freq.begin(), ib = b.freq.begin();
    while (ia != a.freq.end() || ib != b.freq.end()) {
        if (ib == b.freq.end() || (ia != a.freq.end() && ia->first < ib->first)) {
            d += std::abs(ia->second);
            ++ia;
        } else if (ia == a.freq.end() || ib->first < ia->first) {
            d += std::abs(ib->second);
            ++ib;
        } else {
            d += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return d;
}

std::size_t levenshtein(std::span<const NetworkId> a, std::span<const NetworkId> b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::size_t shift_min_levenshtein(std::span<const NetworkId> a, std::span<const NetworkId> b) {
    if (b.empty()) return a.size();
    std::vector<NetworkId> rot(b.begin(), b.end());
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < b.size(); ++k) {
        best = std::min(best, levenshtein(a, rot));
        if (best == 0) break;
        std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    }
    return best;
}

void write_histogram_csv(std::ostream& out, const NetworkHistogram& h) {
    out << "id,count,freq\n";
    char buf[64];
    for (const auto& [id, f] : h.freq) {
        const auto it = h.counts.find(id);
        std::snprintf(buf, sizeof buf, "%.17g", f);
        out << id << ',' << (it == h.counts.end() ? 0 : it->second) << ',' << buf << '\n';
    }
}

void write_string_csv(std::ostream& out, const NetworkString& s) {
    out << "symbols,cyclic\n";
    for (std::size_t k = 0; k < s.symbols.size(); ++k) out << (k ? ";" : "") << s.symbols[k];
    out << ',' << (s.cyclic ? 1 : 0) << '\n';
}

}  // namespace premonn::repr
