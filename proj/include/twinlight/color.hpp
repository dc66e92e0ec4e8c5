// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "twinlight/image.hpp"
#include "twinlight/scene.hpp"
#include "twinlight/vec3.hpp"

namespace twinlight {

/// CIE 1931 chromaticity.
struct Chromaticity {
    double x = 0.0;
    double y = 0.0;
};

inline constexpr Chromaticity kD65White{0.3127, 0.3290};

/// Relative luminance of a linear sRGB triple.
constexpr double luminance(const Rgb &c) { return 0.2126729 * c.x + 0.7151522 * c.y + 0.0721750 * c.z; }

/// Planckian locus chromaticity from the cubic-spline fit (valid on [1667, 25000] K).
/// Throws PreconditionError outside that range.
Chromaticity cct_to_xy(double cct_k);

/// XYZ -> linear sRGB. Negative channels are clamped to zero and the result rescaled so
/// the relative luminance equals `luminance_y`.
Rgb xy_to_linear_rgb(Chromaticity c, double luminance_y);

/// Fixture colour with relative luminance 1.
Rgb fixture_color(const Fixture &f);

/// Emitted radiance of a fixture surface:
///   enabled * dimmer * flux / (pi * area * 1000) * colour.
/// The 1000 lm divisor keeps office fixtures near unit radiance.
Rgb fixture_emission(const Fixture &f);

double srgb_encode(double linear);

/// Exposure, Reinhard v/(1+v), then sRGB transfer to 8 bits.
DisplayImage tonemap(const ImageBuffer &hdr, double exposure_ev);

}  // namespace twinlight
