#include "premonn/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "premonn/error.hpp"

namespace premonn {

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw DataError("netpbm: unexpected end of header");
    return tok;
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size() || v < 0) throw DataError("");
        return v;
    } catch (const std::exception&) {
        throw DataError(std::string("netpbm: bad ") + what + " '" + s + "'");
    }
}

}  // namespace

RasterField::RasterField(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0) throw InvalidArgument("raster: dimensions must be positive");
    if (channels < 1) throw InvalidArgument("raster: channels must be >= 1");
    values_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::threshold(const RasterField& field, double threshold, bool invert) {
    BinaryMask m(field.width(), field.height());
    for (int y = 0; y < field.height(); ++y)
        for (int x = 0; x < field.width(); ++x) {
            const bool on = field.at(x, y, 0) >= threshold;
            m.set(x, y, on != invert);
        }
    return m;
}

RasterField read_netpbm(std::istream& in) {
    const std::string magic = next_token(in);
    int channels = 0;
    bool binary = false;
    if (magic == "P2") channels = 1;
    else if (magic == "P3") channels = 3;
    else if (magic == "P5") channels = 1, binary = true;
    else if (magic == "P6") channels = 3, binary = true;
    else throw DataError("netpbm: unsupported magic '" + magic + "'");

    const int w = parse_int(next_token(in), "width");
    const int h = parse_int(next_token(in), "height");
    const int maxval = parse_int(next_token(in), "maxval");
    if (w == 0 || h == 0) throw DataError("netpbm: empty image");
    if (maxval == 0 || maxval > 65535) throw DataError("netpbm: maxval out of range");

    RasterField field(w, h, channels);
    const double inv = 1.0 / maxval;
    const std::size_t n = static_cast<std::size_t>(w) * h * channels;
    if (binary) {
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(n * bytes);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw DataError("netpbm: truncated pixel data");
        for (std::size_t i = 0; i < n; ++i) {
            const int v = bytes == 2 ? (buf[2 * i] << 8) | buf[2 * i + 1] : buf[i];
            const auto pix = i / channels;
            field.at(static_cast<int>(pix % w), static_cast<int>(pix / w), static_cast<int>(i % channels)) =
                std::min(v, maxval) * inv;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            int v = 0;
            if (!(in >> v)) throw DataError("netpbm: truncated pixel data");
            const auto pix = i / channels;
            field.at(static_cast<int>(pix % w), static_cast<int>(pix / w), static_cast<int>(i % channels)) =
                std::clamp(v, 0, maxval) * inv;
        }
    }
    return field;
}

RasterField read_netpbm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open image " + path.string());
    try {
        return read_netpbm(f);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_netpbm(std::ostream& out, const RasterField& field) {
    if (field.channels() != 1 && field.channels() != 3) throw InvalidArgument("netpbm: only 1 or 3 channels");
    out << (field.channels() == 1 ? "P5" : "P6") << '\n'
        << field.width() << ' ' << field.height() << "\n255\n";
    for (double v : field.values()) {
        const auto b = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(b));
    }
}

void write_netpbm(const std::filesystem::path& path, const RasterField& field) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write image " + path.string());
    write_netpbm(f, field);
}

RasterField to_field(const BinaryMask& mask) {
    RasterField f(mask.width(), mask.height(), 1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) f.at(x, y) = mask.get(x, y) ? 1.0 : 0.0;
    return f;
}

}  // namespace premonn
