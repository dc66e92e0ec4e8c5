// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/color.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "twinlight/error.hpp"

namespace twinlight {

Chromaticity cct_to_xy(double t) {
    if (!(t >= kMinCctK && t <= kMaxCctK))
        throw PreconditionError("cct " + std::to_string(t) + " K outside [1667, 25000]");
    const double i1 = 1e3 / t, i2 = 1e6 / (t * t), i3 = 1e9 / (t * t * t);
    const double x = t <= 4000.0 ? -0.2661239 * i3 - 0.2343589 * i2 + 0.8776956 * i1 + 0.179910
                                 : -3.0258469 * i3 + 2.1070379 * i2 + 0.2226347 * i1 + 0.240390;
    const double x2 = x * x, x3 = x2 * x;
    double y;
    if (t <= 2222.0)
        y = -1.1063814 * x3 - 1.34811020 * x2 + 2.18555832 * x - 0.20219683;
    else if (t <= 4000.0)
        y = -0.9549476 * x3 - 1.37418593 * x2 + 2.09137015 * x - 0.16748867;
    else
        y = 3.0817580 * x3 - 5.87338670 * x2 + 3.75112997 * x - 0.37001483;
    return {x, y};
}

Rgb xy_to_linear_rgb(Chromaticity c, double luminance_y) {
    if (!(luminance_y > 0.0)) return {};
    const double X = luminance_y * c.x / c.y;
    const double Y = luminance_y;
    const double Z = luminance_y * (1.0 - c.x - c.y) / c.y;
    Rgb rgb{3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z,
            -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z,
            0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z};
    if (rgb.x >= 0.0 && rgb.y >= 0.0 && rgb.z >= 0.0) return rgb;

    rgb = {std::max(rgb.x, 0.0), std::max(rgb.y, 0.0), std::max(rgb.z, 0.0)};
    const double y = luminance(rgb);
    if (!(y > 0.0)) return {};  // unreachable for chromaticities inside the spectral locus
    return rgb * (luminance_y / y);
}

Rgb fixture_color(const Fixture &f) {
    if (f.cct_k) return xy_to_linear_rgb(cct_to_xy(*f.cct_k), 1.0);
    const Rgb &c = *f.color_rgb;
    return c / luminance(c);
}

Rgb fixture_emission(const Fixture &f) {
    if (!f.enabled) return {};
    const double scale = f.dimmer * f.flux_lm / (std::numbers::pi * f.area_m2() * 1000.0);
    return fixture_color(f) * scale;
}

double srgb_encode(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

DisplayImage tonemap(const ImageBuffer &hdr, double exposure_ev) {
    DisplayImage out(hdr.width, hdr.height);
    const double gain = std::exp2(exposure_ev);
    for (std::size_t i = 0; i < hdr.data.size(); ++i) {
        const double v = std::max(hdr.data[i], 0.0) * gain;
        const double r = std::isinf(v) ? 1.0 : v / (1.0 + v);
        const double s = std::clamp(srgb_encode(r), 0.0, 1.0);
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(s * 255.0));
    }
    return out;
}

}  // namespace twinlight
