#include "premonn/scan.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "premonn/error.hpp"

namespace premonn::scan2d {

using predictors::PredictorGroup;
using predictors::TrainingPair;
using predictors::TrainingSet;

ScanDomain::ScanDomain(std::vector<Offset> in, std::vector<Offset> out)
    : in_offsets(std::move(in)), out_offsets(std::move(out)) {
    std::sort(in_offsets.begin(), in_offsets.end());
    std::sort(out_offsets.begin(), out_offsets.end());
    validate();
}

void ScanDomain::validate() const {
    if (in_offsets.empty()) throw InvalidArgument("scan domain: empty input stencil");
    if (out_offsets.empty()) throw InvalidArgument("scan domain: empty output stencil");
    if (!std::is_sorted(in_offsets.begin(), in_offsets.end()) || !std::is_sorted(out_offsets.begin(), out_offsets.end()))
        throw InvalidArgument("scan domain: offsets must be sorted");
    if (std::adjacent_find(in_offsets.begin(), in_offsets.end()) != in_offsets.end() ||
        std::adjacent_find(out_offsets.begin(), out_offsets.end()) != out_offsets.end())
        throw InvalidArgument("scan domain: duplicate offset");
    for (const auto& o : out_offsets)
        if (std::binary_search(in_offsets.begin(), in_offsets.end(), o))
            throw InvalidArgument("scan domain: input and output stencils overlap");
}

ScanDomain canonical_domain(int m, int l) {
    if (m < 1 || l < 1) throw InvalidArgument("canonical_domain: M and L must be >= 1");
    std::vector<Offset> in;
    for (int a = 0; a <= m; ++a)
        for (int b = 0; b <= l; ++b)
            if (a != 0 || b != 0) in.push_back({-a, -b});
    return ScanDomain(std::move(in), {{0, 0}});
}

ScanDomain read_domain(std::istream& in) {
    std::vector<Offset> ins, outs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        Offset o;
        if (!(ss >> o.di)) continue;  // blank line
        if (!(ss >> o.dj)) throw DataError("domain file line " + std::to_string(lineno) + ": expected `di dj [in|out]`");
        std::string tag = "in";
        ss >> tag;
        if (tag == "in") ins.push_back(o);
        else if (tag == "out") outs.push_back(o);
        else throw DataError("domain file line " + std::to_string(lineno) + ": unknown tag '" + tag + "'");
    }
    if (outs.empty()) outs.push_back({0, 0});
    try {
        return ScanDomain(std::move(ins), std::move(outs));
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
}

ScanDomain read_domain(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open domain file " + path.string());
    return read_domain(f);
}

void write_domain(std::ostream& out, const ScanDomain& d) {
    for (const auto& o : d.in_offsets) out << o.di << ' ' << o.dj << " in\n";
    for (const auto& o : d.out_offsets) out << o.di << ' ' << o.dj << " out\n";
}

AdmissibleRegion admissible_region(int width, int height, const ScanDomain& domain) {
    // The anchor is itself a pixel, so (0, 0) always counts as covered.
    int min_di = 0, max_di = 0, min_dj = 0, max_dj = 0;
    for (const auto* set : {&domain.in_offsets, &domain.out_offsets})
        for (const auto& o : *set) {
            min_di = std::min(min_di, o.di);
            max_di = std::max(max_di, o.di);
            min_dj = std::min(min_dj, o.dj);
            max_dj = std::max(max_dj, o.dj);
        }
    return AdmissibleRegion{-min_di, width - 1 - max_di, -min_dj, height - 1 - max_dj};
}

ScanPath make_scan_path(int width, int height, const ScanDomain& domain, Anchor start, ScanOrder order) {
    domain.validate();
    const AdmissibleRegion r = admissible_region(width, height, domain);
    if (r.empty()) throw InvalidArgument("make_scan_path: stencil does not fit inside the image");
    if (!r.contains(start)) throw InvalidArgument("make_scan_path: start anchor is not admissible");

    ScanPath path;
    path.anchors.reserve(r.count());
    for (int j = r.j0; j <= r.j1; ++j) {
        const bool reverse = order == ScanOrder::boustrophedon && ((j - r.j0) % 2 == 1);
        for (int k = 0; k <= r.i1 - r.i0; ++k) path.anchors.push_back({reverse ? r.i1 - k : r.i0 + k, j});
    }
    const auto it = std::find(path.anchors.begin(), path.anchors.end(), start);
    std::rotate(path.anchors.begin(), it, path.anchors.end());
    return path;
}

namespace {

void check_path(const RasterField& field, const ScanDomain& domain, const ScanPath& path) {
    const AdmissibleRegion r = admissible_region(field.width(), field.height(), domain);
    for (const auto& a : path.anchors)
        if (!r.contains(a)) throw InvalidArgument("scan path anchor places the stencil outside the raster");
}

}  // namespace

std::vector<TrainingSet> extract_pairs(const RasterField& field, const ScanDomain& domain, const ScanPath& path) {
    domain.validate();
    check_path(field, domain, path);
    std::vector<TrainingSet> out(static_cast<std::size_t>(field.channels()));
    for (int c = 0; c < field.channels(); ++c) {
        auto& set = out[static_cast<std::size_t>(c)];
        set.reserve(path.size());
        for (const auto& a : path.anchors) {
            TrainingPair p;
            p.input.reserve(domain.in_offsets.size());
            for (const auto& o : domain.in_offsets) p.input.push_back(field.at(a.i + o.di, a.j + o.dj, c));
            for (const auto& o : domain.out_offsets) p.target.push_back(field.at(a.i + o.di, a.j + o.dj, c));
            set.push_back(std::move(p));
        }
    }
    return out;
}

PredictorGroup train_group(const RasterField& field, const ScanDomain& domain,
                           const predictors::PredictorSpec& base_spec, const predictors::TrainConfig& cfg) {
    const AdmissibleRegion r = admissible_region(field.width(), field.height(), domain);
    if (r.empty()) throw InvalidArgument("train_group: stencil does not fit inside the sample");
    const ScanPath path = make_scan_path(field.width(), field.height(), domain, {r.i0, r.j0}, ScanOrder::raster);
    const auto sets = extract_pairs(field, domain, path);
    PredictorGroup g;
    for (std::size_t c = 0; c < sets.size(); ++c) {
        predictors::PredictorSpec spec = base_spec;
        spec.input_dim = domain.in_offsets.size();
        spec.output_dim = domain.out_offsets.size();
        spec.seed = base_spec.seed + c;
        g.channels.push_back(predictors::train(sets[c], spec, cfg));
    }
    return g;
}

std::vector<std::vector<double>> scan_errors(const RasterField& field, const ScanDomain& domain,
                                             const ScanPath& path, const ScanModel& model) {
    if (!(domain == model.domain))
        throw InvalidArgument("scan_errors: recognition stencil differs from the training stencil");
    domain.validate();
    check_path(field, domain, path);
    const auto channels = static_cast<std::size_t>(field.channels());
    const std::size_t n_in = domain.in_offsets.size(), n_out = domain.out_offsets.size();
    for (const auto& g : model.sources) {
        if (g.size() != channels) throw InvalidArgument("scan_errors: predictor group channel count != field channels");
        for (const auto& p : g.channels)
            if (p.spec().input_dim != n_in || p.spec().output_dim != n_out)
                throw InvalidArgument("scan_errors: predictor dimensions do not match the stencil");
    }

    std::vector<std::vector<double>> errors;
    errors.reserve(path.size());
    std::vector<double> x(n_in), observed(channels * n_out), predicted(channels * n_out);
    for (const auto& a : path.anchors) {
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t o = 0; o < n_out; ++o) {
                const auto& off = domain.out_offsets[o];
                observed[c * n_out + o] = field.at(a.i + off.di, a.j + off.dj, static_cast<int>(c));
            }
        std::vector<double> step(model.sources.size());
        for (std::size_t n = 0; n < model.sources.size(); ++n) {
            for (std::size_t c = 0; c < channels; ++c) {
                for (std::size_t k = 0; k < n_in; ++k) {
                    const auto& off = domain.in_offsets[k];
                    x[k] = field.at(a.i + off.di, a.j + off.dj, static_cast<int>(c));
                }
                const auto y = model.sources[n].channels[c].predict(x);
                std::copy(y.begin(), y.end(), predicted.begin() + static_cast<std::ptrdiff_t>(c * n_out));
            }
            step[n] = predictors::prediction_error(observed, predicted);
        }
        errors.push_back(std::move(step));
    }
    return errors;
}

}  // namespace premonn::scan2d
