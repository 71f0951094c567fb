#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "premonn/predictor.hpp"
#include "premonn/raster.hpp"

namespace premonn::scan2d {

/// Relative stencil cell: di along x (columns), dj along y (rows).
struct Offset {
    int di = 0;
    int dj = 0;
    friend auto operator<=>(const Offset&, const Offset&) = default;
};

/// Input/output stencils. Offsets are kept sorted (lexicographic in (di, dj));
/// that order fixes the layout of predictor input and output vectors.
struct ScanDomain {
    std::vector<Offset> in_offsets;
    std::vector<Offset> out_offsets{{0, 0}};

    ScanDomain() = default;
    ScanDomain(std::vector<Offset> in, std::vector<Offset> out);

    void validate() const;
    friend bool operator==(const ScanDomain&, const ScanDomain&) = default;
};

/// Causal block: all (-m, -l) with 0 <= m <= M, 0 <= l <= L except (0, 0).
ScanDomain canonical_domain(int m, int l);

/// Text format, one offset per line: `di dj [in|out]` (tag defaults to in).
ScanDomain read_domain(std::istream& in);
ScanDomain read_domain(const std::filesystem::path& path);
void write_domain(std::ostream& out, const ScanDomain& d);

struct Anchor {
    int i = 0;
    int j = 0;
    friend auto operator<=>(const Anchor&, const Anchor&) = default;
};

/// Anchors for which every stencil cell stays inside the raster.
struct AdmissibleRegion {
    int i0 = 0, i1 = -1, j0 = 0, j1 = -1;  // inclusive bounds

    bool empty() const { return i1 < i0 || j1 < j0; }
    bool contains(Anchor a) const { return a.i >= i0 && a.i <= i1 && a.j >= j0 && a.j <= j1; }
    std::size_t count() const {
        return empty() ? 0 : static_cast<std::size_t>(i1 - i0 + 1) * static_cast<std::size_t>(j1 - j0 + 1);
    }
};

AdmissibleRegion admissible_region(int width, int height, const ScanDomain& domain);

enum class ScanOrder { raster, boustrophedon };

struct ScanPath {
    std::vector<Anchor> anchors;
    std::size_t size() const { return anchors.size(); }
};

/// Every admissible anchor exactly once, beginning at `start` and wrapping
/// around the chosen traversal order.
ScanPath make_scan_path(int width, int height, const ScanDomain& domain, Anchor start,
                        ScanOrder order = ScanOrder::boustrophedon);

/// One training set per channel; pair inputs follow the sorted in_offsets,
/// targets the sorted out_offsets.
std::vector<predictors::TrainingSet> extract_pairs(const RasterField& field, const ScanDomain& domain,
                                                   const ScanPath& path);

/// Per-source channel predictors bound to the stencil they were trained with.
struct ScanModel {
    ScanDomain domain;
    std::vector<predictors::PredictorGroup> sources;
};

/// Trains one predictor per channel on every admissible anchor of `field`.
predictors::PredictorGroup train_group(const RasterField& field, const ScanDomain& domain,
                                       const predictors::PredictorSpec& base_spec,
                                       const predictors::TrainConfig& cfg);

/// Step-by-step Euclidean errors between the observed output cells (channels
/// stacked) and each source's prediction. Rejects a stencil different from
/// the one the model was trained with.
std::vector<std::vector<double>> scan_errors(const RasterField& field, const ScanDomain& domain,
                                             const ScanPath& path, const ScanModel& model);

}  // namespace premonn::scan2d
