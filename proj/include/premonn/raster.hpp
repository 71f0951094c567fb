#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace premonn {

/// Multi-channel real-valued image, row-major with interleaved channels.
/// Image intensities are on [0, 1] after ingestion; other channel data
/// (e.g. curvature pairs) may take any real values.
class RasterField {
public:
    RasterField() = default;
    RasterField(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }

    double& at(int x, int y, int c = 0) { return values_[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return values_[index(x, y, c)]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    const std::vector<double>& values() const { return values_; }

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<double> values_;
};

/// Foreground/background raster for contour extraction.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height) : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool get(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ && bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool v = true) { bits_.at(static_cast<std::size_t>(y) * width_ + x) = v ? 1 : 0; }
    std::size_t count() const;

    /// Foreground where channel 0 is >= threshold (or < threshold when invert).
    static BinaryMask threshold(const RasterField& field, double threshold, bool invert = false);

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Netpbm reader for P2/P3/P5/P6 (8 or 16 bit). Values are divided by maxval.
RasterField read_netpbm(std::istream& in);
RasterField read_netpbm(const std::filesystem::path& path);

/// Writes P5 (1 channel) or P6 (3 channels) with 8-bit samples.
void write_netpbm(std::ostream& out, const RasterField& field);
void write_netpbm(const std::filesystem::path& path, const RasterField& field);

RasterField to_field(const BinaryMask& mask);

}  // namespace premonn
