// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "twinlight/error.hpp"
#include "twinlight/rng.hpp"

namespace twinlight {

std::vector<std::uint8_t> encode_png(const DisplayImage &img) {
    if (img.width <= 0 || img.height <= 0) throw ImageError("cannot encode an empty image");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
        throw ImageError(std::string("png encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
        throw ImageError(std::string("png encode failed: ") + image.message);
    out.resize(size);
    return out;
}

DisplayImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw ImageError(std::string("png decode failed: ") + image.message);
    image.format = PNG_FORMAT_RGB;
    DisplayImage out(static_cast<int>(image.width), static_cast<int>(image.height));
    // Composite any alpha over black so the result is plain RGB.
    png_color black{0, 0, 0};
    if (!png_image_finish_read(&image, &black, out.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ImageError(std::string("png decode failed: ") + image.message);
    }
    return out;
}

void write_png_file(const std::string &path, const DisplayImage &img) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("write failed for " + path);
}

DisplayImage read_png_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

DisplayImage add_sensor_noise(const DisplayImage &img, double sigma, std::uint64_t seed) {
    DisplayImage out = img;
    SplitMix rng(mix64(seed ^ 0x5eed5eed5eed5eedULL));
    for (auto &p : out.pixels) {
        // Box-Muller; u1 in (0,1].
        const double u1 = 1.0 - rng.next_double();
        const double u2 = rng.next_double();
        const double n = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        p = static_cast<std::uint8_t>(std::clamp(std::lround(p + sigma * n), 0L, 255L));
    }
    return out;
}

DisplayImage blend_toward_gray(const DisplayImage &img, double weight) {
    DisplayImage out = img;
    for (auto &p : out.pixels)
        p = static_cast<std::uint8_t>(std::clamp(std::lround((1.0 - weight) * p + weight * 128.0), 0L, 255L));
    return out;
}

}  // namespace twinlight
