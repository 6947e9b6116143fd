// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "metappear/vec3.hpp"

namespace metappear::render {

/// Linear-radiance RGB image, row-major, three values per pixel.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t w, std::size_t h) : width(w), height(h), data(3 * w * h, 0.0) {}

    std::size_t pixel_count() const { return width * height; }
    double& at(std::size_t x, std::size_t y, std::size_t c) { return data[3 * (y * width + x) + c]; }
    double at(std::size_t x, std::size_t y, std::size_t c) const { return data[3 * (y * width + x) + c]; }
    Rgb pixel(std::size_t x, std::size_t y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }
    void set(std::size_t x, std::size_t y, const Rgb& v) {
        for (std::size_t c = 0; c < 3; ++c) at(x, y, c) = v[c];
    }
    double mean() const;
    bool operator==(const Image&) const = default;
};

/// Throws unless the image is finite and non-negative.
void validate(const Image& img);

/// Tone mapping for display and SSIM: x / (1 + x), then gamma.
double tone_map(double x, double exposure = 1.0, double gamma = 2.2);

/// Tone-mapped luminance plane (Rec. 709 weights before tone mapping).
std::vector<double> tone_mapped_luminance(const Image& img, double exposure = 1.0, double gamma = 2.2);

double image_mae(const Image& a, const Image& b);

/// Gaussian-window SSIM (11x11, sigma 1.5, k1 0.01, k2 0.03, dynamic range
/// 1) on tone-mapped luminance, averaged over all fully-inside windows.
double image_ssim(const Image& a, const Image& b, double exposure = 1.0, double gamma = 2.2);

/// SSIM of two single-channel planes with values in [0, 1].
double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t width,
                  std::size_t height);

void write_png(const Image& img, const std::filesystem::path& path, double exposure = 1.0, double gamma = 2.2);

/// No tone mapping: values clamped to [0, 1], then x^(1/gamma). For maps.
void write_png_linear(const Image& img, const std::filesystem::path& path, double gamma = 1.0);

/// uint32 width, uint32 height, then row-major float32 RGB (little endian).
void write_raw(const Image& img, const std::filesystem::path& path);
Image read_raw(const std::filesystem::path& path);

}  // namespace metappear::render
