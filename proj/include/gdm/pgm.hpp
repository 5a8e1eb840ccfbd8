#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "gdm/errors.hpp"
#include "gdm/metrics.hpp"

namespace gdm {

/// Binary 8-bit portable greymap (P5). Values map [-1,1] -> [0,255].
inline void write_pgm(const std::string& path, int height, int width,
                      std::span<const double> unit_range) {
    if (static_cast<int>(unit_range.size()) != height * width)
        throw ShapeMismatch("write_pgm: size mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes(unit_range.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        double v = std::clamp(0.5 * (unit_range[i] + 1.0), 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path);
}

/// Reads a P5 greymap into [0,1] pixels (the metric domain).
inline Image read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw IoError("not a binary PGM: " + path);
    int width = 0, height = 0, maxval = 0;
    is >> width >> height >> maxval;
    if (!is || width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw IoError("malformed PGM header: " + path);
    is.get(); // single whitespace before raster
    std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!is) throw IoError("PGM truncated: " + path);
    Image img{height, width, {}};
    img.pixels.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.pixels[i] = static_cast<double>(bytes[i]) / maxval;
    return img;
}

/// [-1,1] vector view of a [0,1] image (inverse of the PGM mapping).
inline std::vector<double> to_unit_range(const Image& img) {
    std::vector<double> out(img.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * img.pixels[i] - 1.0;
    return out;
}

} // namespace gdm
