// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/render/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <string>

#include "metappear/error.hpp"

namespace metappear::render {

namespace {

void check_same_shape(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw invalid_argument("image size mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                               " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
}

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> w{};
    double sum = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i) - 5.0;
        w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Separable "valid" filtering with the normalized Gaussian window.
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t w, std::size_t h) {
    static const auto g = gaussian_window();
    const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;
    std::vector<double> tmp(ow * h), out(ow * oh);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < kWindow; ++i) s += g[i] * in[y * w + x + i];
            tmp[y * ow + x] = s;
        }
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < kWindow; ++i) s += g[i] * tmp[(y + i) * ow + x];
            out[y * ow + x] = s;
        }
    return out;
}

}  // namespace

double Image::mean() const {
    if (data.empty()) return 0.0;
    double s = 0.0;
    for (double v : data) s += v;
    return s / static_cast<double>(data.size());
}

void validate(const Image& img) {
    if (img.data.size() != 3 * img.width * img.height) throw invalid_argument("image buffer has the wrong size");
    for (std::size_t i = 0; i < img.data.size(); ++i)
        if (!std::isfinite(img.data[i]) || img.data[i] < 0.0)
            throw numerical_error("image value at " + std::to_string(i / 3) + " is negative or not finite", i / 3);
}

double tone_map(double x, double exposure, double gamma) {
    const double e = std::max(0.0, x * exposure);
    return std::pow(e / (1.0 + e), 1.0 / gamma);
}

std::vector<double> tone_mapped_luminance(const Image& img, double exposure, double gamma) {
    std::vector<double> y(img.pixel_count());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double lum = 0.2126 * img.data[3 * i] + 0.7152 * img.data[3 * i + 1] + 0.0722 * img.data[3 * i + 2];
        y[i] = tone_map(lum, exposure, gamma);
    }
    return y;
}

double image_mae(const Image& a, const Image& b) {
    check_same_shape(a, b);
    if (a.data.empty()) throw invalid_argument("empty image");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t w, std::size_t h) {
    if (a.size() != w * h || b.size() != w * h) throw invalid_argument("SSIM plane size mismatch");
    if (w < kWindow || h < kWindow) throw invalid_argument("SSIM needs images of at least 11x11 pixels");
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, w, h), mu_b = filter_valid(b, w, h);
    const auto e_aa = filter_valid(aa, w, h), e_bb = filter_valid(bb, w, h), e_ab = filter_valid(ab, w, h);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = e_aa[i] - mu_a[i] * mu_a[i];
        const double vb = e_bb[i] - mu_b[i] * mu_b[i];
        const double cov = e_ab[i] - mu_a[i] * mu_b[i];
        sum += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return sum / static_cast<double>(mu_a.size());
}

double image_ssim(const Image& a, const Image& b, double exposure, double gamma) {
    check_same_shape(a, b);
    return ssim_plane(tone_mapped_luminance(a, exposure, gamma), tone_mapped_luminance(b, exposure, gamma), a.width,
                      a.height);
}

namespace {

void write_png_mapped(const Image& img, const std::filesystem::path& path, const std::function<double(double)>& map) {
    validate(img);
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw io_error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw io_error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(3 * img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = static_cast<png_byte>(std::lround(255.0 * map(img.data[3 * y * img.width + i])));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const Image& img, const std::filesystem::path& path, double exposure, double gamma) {
    write_png_mapped(img, path, [=](double x) { return tone_map(x, exposure, gamma); });
}

void write_png_linear(const Image& img, const std::filesystem::path& path, double gamma) {
    if (!(gamma > 0.0)) throw invalid_argument("gamma must be positive");
    write_png_mapped(img, path, [=](double x) { return std::pow(std::clamp(x, 0.0, 1.0), 1.0 / gamma); });
}

void write_raw(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    std::vector<float> buf(img.data.begin(), img.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw io_error("failed writing " + path.string());
}

Image read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path.string());
    std::uint32_t dims[2];
    if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims))) throw format_error("raw image header truncated");
    Image img(dims[0], dims[1]);
    std::vector<float> buf(img.data.size());
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float))))
        throw format_error("raw image data truncated");
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
    return img;
}

}  // namespace metappear::render
