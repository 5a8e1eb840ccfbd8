#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gdm/errors.hpp"

namespace gdm {

/// Grey image in [0,1] row-major.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    static Image from_unit_range(int height, int width, std::span<const double> data) {
        if (static_cast<int>(data.size()) != height * width)
            throw ShapeMismatch("image size mismatch");
        Image img{height, width, {}};
        img.pixels.resize(data.size());
        // affine [-1,1] -> [0,1]
        for (std::size_t i = 0; i < data.size(); ++i)
            img.pixels[i] = std::clamp(0.5 * (data[i] + 1.0), 0.0, 1.0);
        return img;
    }
};

inline double mse(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width) throw ShapeMismatch("psnr/ssim shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        double d = a.pixels[i] - b.pixels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.pixels.size());
}

/// 10 log10(peak^2 / MSE), capped at 100 dB once MSE drops below peak^2 1e-10.
inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
    if (!(peak > 0.0)) throw OutOfRange("psnr peak must be positive");
    double err = mse(a, b);
    if (err < peak * peak * 1e-10) return 100.0;
    return 10.0 * std::log10(peak * peak / err);
}

/// Mean local SSIM: 8x8 windows, stride 1, uniform weights,
/// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2.
inline double ssim(const Image& a, const Image& b, double peak = 1.0) {
    if (a.height != b.height || a.width != b.width) throw ShapeMismatch("ssim shape mismatch");
    constexpr int kWin = 8;
    if (a.height < kWin || a.width < kWin) throw ShapeMismatch("ssim needs side >= 8");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const double inv_n = 1.0 / (kWin * kWin);

    double total = 0.0;
    int windows = 0;
    for (int y = 0; y + kWin <= a.height; ++y) {
        for (int x = 0; x + kWin <= a.width; ++x) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int dy = 0; dy < kWin; ++dy) {
                const double* ra = a.pixels.data() + (y + dy) * a.width + x;
                const double* rb = b.pixels.data() + (y + dy) * b.width + x;
                for (int dx = 0; dx < kWin; ++dx) {
                    sa += ra[dx];
                    sb += rb[dx];
                    saa += ra[dx] * ra[dx];
                    sbb += rb[dx] * rb[dx];
                    sab += ra[dx] * rb[dx];
                }
            }
            double mu_a = sa * inv_n, mu_b = sb * inv_n;
            double var_a = std::max(0.0, saa * inv_n - mu_a * mu_a);
            double var_b = std::max(0.0, sbb * inv_n - mu_b * mu_b);
            double cov = sab * inv_n - mu_a * mu_b;
            double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
            double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++windows;
        }
    }
    return total / windows;
}

inline double median(std::vector<double> values) {
    if (values.empty()) throw OutOfRange("median of empty set");
    std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.end());
    return 0.5 * (hi + values[mid - 1]);
}

} // namespace gdm
