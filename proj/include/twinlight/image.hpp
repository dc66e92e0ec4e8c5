// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twinlight/vec3.hpp"

namespace twinlight {

/// Linear HDR raster, row-major, row 0 at the top, 3 channels per pixel.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0) {}

    Rgb at(int x, int y) const {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        return {data[i], data[i + 1], data[i + 2]};
    }
    void set(int x, int y, const Rgb &c) {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        data[i] = c.x;
        data[i + 1] = c.y;
        data[i + 2] = c.z;
    }
};

/// 8-bit sRGB display raster, row-major, 3 bytes per pixel.
struct DisplayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    DisplayImage() = default;
    DisplayImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t channel(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    bool operator==(const DisplayImage &) const = default;
};

/// PNG codec (8-bit RGB, no alpha on output; any input layout is converted to RGB8).
std::vector<std::uint8_t> encode_png(const DisplayImage &img);
DisplayImage decode_png(std::span<const std::uint8_t> bytes);
void write_png_file(const std::string &path, const DisplayImage &img);
DisplayImage read_png_file(const std::string &path);

/// Adds zero-mean Gaussian noise of `sigma` 8-bit levels, seeded, clamped to [0,255].
DisplayImage add_sensor_noise(const DisplayImage &img, double sigma, std::uint64_t seed);

/// Per-channel lerp toward mid-gray (128) by `weight` in [0,1].
DisplayImage blend_toward_gray(const DisplayImage &img, double weight);

}  // namespace twinlight
