// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "twinlight/color.hpp"
#include "twinlight/error.hpp"
#include "twinlight/rng.hpp"

namespace twinlight {
namespace {

// Independent oracle: Planck's law integrated against an analytic fit of the CIE 1931
// 2-degree observer (Wyman, Sloan and Shirley 2013, multi-lobe piecewise Gaussians).
double lobe(double lambda, double mu, double s1, double s2) {
    const double t = (lambda - mu) / (lambda < mu ? s1 : s2);
    return std::exp(-0.5 * t * t);
}

double cmf_x(double l) {
    return 1.056 * lobe(l, 599.8, 37.9, 31.0) + 0.362 * lobe(l, 442.0, 16.0, 26.7) - 0.065 * lobe(l, 501.1, 20.4, 26.2);
}
double cmf_y(double l) { return 0.821 * lobe(l, 568.8, 46.9, 40.5) + 0.286 * lobe(l, 530.9, 16.3, 31.1); }
double cmf_z(double l) { return 1.217 * lobe(l, 437.0, 11.8, 36.0) + 0.681 * lobe(l, 459.0, 26.0, 13.8); }

Chromaticity planck_xy(double t) {
    constexpr double c2 = 1.4387769e-2;  // m K
    double X = 0, Y = 0, Z = 0;
    for (double l = 360.0; l <= 830.0; l += 0.5) {
        const double m = l * 1e-9;
        const double b = 1.0 / (std::pow(m, 5) * (std::exp(c2 / (m * t)) - 1.0));
        X += b * cmf_x(l);
        Y += b * cmf_y(l);
        Z += b * cmf_z(l);
    }
    const double s = X + Y + Z;
    return {X / s, Y / s};
}

// linear sRGB -> XYZ (inverse of the renderer's matrix, D65 reference white).
std::array<double, 3> rgb_to_xyz(const Rgb &c) {
    return {0.4124564 * c.x + 0.3575761 * c.y + 0.1804375 * c.z, 0.2126729 * c.x + 0.7151522 * c.y + 0.0721750 * c.z,
            0.0193339 * c.x + 0.1191920 * c.y + 0.9503041 * c.z};
}

TEST(CctToXy, D65Neighbourhood) {
    const Chromaticity c = cct_to_xy(6504.0);
    EXPECT_NEAR(c.x, 0.3127, 0.010);
    EXPECT_NEAR(c.y, 0.3290, 0.010);
}

TEST(CctToXy, MatchesPlanckIntegration) {
    for (double t : {1700.0, 2000.0, 2700.0, 3000.0, 4000.0, 5000.0, 6504.0, 10000.0, 20000.0}) {
        const Chromaticity fit = cct_to_xy(t);
        const Chromaticity ref = planck_xy(t);
        EXPECT_NEAR(fit.x, ref.x, 4e-3) << t;
        EXPECT_NEAR(fit.y, ref.y, 4e-3) << t;
    }
}

// Frozen from the cubic fit; the Planck oracle above agrees within 4e-3.
TEST(CctToXy, FrozenValues) {
    const Chromaticity c4000 = cct_to_xy(4000.0);
    EXPECT_NEAR(c4000.x, 0.380528, 1e-6);
    EXPECT_NEAR(c4000.y, 0.376733, 1e-6);
    const Chromaticity c6504 = cct_to_xy(6504.0);
    EXPECT_NEAR(c6504.x, 0.313432, 1e-6);
    EXPECT_NEAR(c6504.y, 0.323602, 1e-6);
}

TEST(CctToXy, WarmAndMonotone) {
    EXPECT_GT(cct_to_xy(2000.0).x, 0.5);
    EXPECT_GT(cct_to_xy(2000.0).x, cct_to_xy(4000.0).x);
    EXPECT_GT(cct_to_xy(4000.0).x, cct_to_xy(6500.0).x);
}

TEST(CctToXy, RangeChecked) {
    EXPECT_NO_THROW(cct_to_xy(kMinCctK));
    EXPECT_NO_THROW(cct_to_xy(kMaxCctK));
    EXPECT_THROW(cct_to_xy(1666.0), PreconditionError);
    EXPECT_THROW(cct_to_xy(25001.0), PreconditionError);
}

TEST(CctToXy, Continuous) {
    for (double t = kMinCctK; t + 1.0 <= kMaxCctK; t += 1.0) {
        const Chromaticity a = cct_to_xy(t);
        const Chromaticity b = cct_to_xy(t + 1.0);
        ASSERT_LT(std::hypot(a.x - b.x, a.y - b.y), 1e-3) << t;
    }
}

TEST(XyToLinearRgb, WhitePoint) {
    const Rgb c = xy_to_linear_rgb(kD65White, 1.0);
    EXPECT_NEAR(c.x, 1.0, 1e-3);
    EXPECT_NEAR(c.y, 1.0, 1e-3);
    EXPECT_NEAR(c.z, 1.0, 1e-3);
}

TEST(XyToLinearRgb, ZeroLuminance) {
    const Rgb c = xy_to_linear_rgb({0.45, 0.41}, 0.0);
    EXPECT_EQ(c, (Rgb{0, 0, 0}));
}

TEST(XyToLinearRgb, OutOfGamutClampKeepsLuminance) {
    const Rgb c = xy_to_linear_rgb({0.2, 0.2}, 1.0);
    EXPECT_GE(c.x, 0.0);
    EXPECT_GE(c.y, 0.0);
    EXPECT_GE(c.z, 0.0);
    EXPECT_NEAR(rgb_to_xyz(c)[1], 1.0, 0.01);
}

// Property: luminance survives the clamp for random chromaticities and Y.
TEST(XyToLinearRgb, LuminanceProperty) {
    SplitMix rng(5);
    for (int i = 0; i < 2000; ++i) {
        const double x = 0.05 + 0.7 * rng.next_double();
        const double y = 0.05 + (0.9 - x) * rng.next_double();
        const double Y = 3.0 * rng.next_double();
        const Rgb c = xy_to_linear_rgb({x, y}, Y);
        ASSERT_GE(std::min({c.x, c.y, c.z}), 0.0);
        ASSERT_NEAR(rgb_to_xyz(c)[1], Y, 0.01 * Y + 1e-12) << x << "," << y;
    }
}

TEST(XyToLinearRgb, LocusIsInGamutForOfficeTemperatures) {
    // In-gamut chromaticities round-trip without clamping.
    for (double t : {2700.0, 4000.0, 6500.0}) {
        const Chromaticity xy = cct_to_xy(t);
        const Rgb c = xy_to_linear_rgb(xy, 1.0);
        const auto xyz = rgb_to_xyz(c);
        const double s = xyz[0] + xyz[1] + xyz[2];
        EXPECT_NEAR(xyz[0] / s, xy.x, 1e-6) << t;
        EXPECT_NEAR(xyz[1] / s, xy.y, 1e-6) << t;
    }
}

Fixture unit_fixture() {
    Fixture f;
    f.id = "f";
    f.flux_lm = 1000.0;
    // area = 1/pi m^2
    const double a = std::sqrt(1.0 / std::numbers::pi) / 2.0;
    f.half_extents_m = {a, a};
    f.color_rgb = Rgb{1, 1, 1};
    return f;
}

TEST(FixtureEmission, UnitCase) {
    const Rgb e = fixture_emission(unit_fixture());
    EXPECT_NEAR(e.x, 1.0, 1e-6);
    EXPECT_NEAR(e.y, 1.0, 1e-6);
    EXPECT_NEAR(e.z, 1.0, 1e-6);
}

TEST(FixtureEmission, DimmerZeroAndDisabled) {
    Fixture f = unit_fixture();
    f.dimmer = 0.0;
    EXPECT_EQ(fixture_emission(f), (Rgb{0, 0, 0}));
    f.dimmer = 1.0;
    f.enabled = false;
    EXPECT_EQ(fixture_emission(f), (Rgb{0, 0, 0}));
}

TEST(FixtureEmission, ExactlyLinear) {
    Fixture f = unit_fixture();
    f.color_rgb.reset();
    f.cct_k = 3500.0;
    f.dimmer = 0.25;
    const Rgb base = fixture_emission(f);
    f.dimmer = 0.5;
    EXPECT_EQ(fixture_emission(f), base * 2.0);
    f.dimmer = 0.25;
    f.flux_lm *= 2.0;
    EXPECT_EQ(fixture_emission(f), base * 2.0);
}

TEST(FixtureEmission, ColourIsLuminanceNormalized) {
    Fixture f = unit_fixture();
    f.color_rgb = Rgb{4.0, 2.0, 0.5};
    EXPECT_NEAR(luminance(fixture_emission(f)), 1.0, 1e-12);
    f.color_rgb.reset();
    f.cct_k = 2700.0;
    EXPECT_NEAR(luminance(fixture_emission(f)), 1.0, 1e-6);
}

TEST(Tonemap, Zero) {
    const DisplayImage d = tonemap(ImageBuffer(4, 3), 2.0);
    for (auto v : d.pixels) EXPECT_EQ(v, 0);
}

TEST(Tonemap, UnitRadianceIs188) {
    ImageBuffer hdr(1, 1);
    hdr.set(0, 0, {1, 1, 1});
    EXPECT_EQ(tonemap(hdr, 0.0).channel(0, 0, 0), 188);
    hdr.set(0, 0, {0.25, 0.25, 0.25});
    EXPECT_EQ(tonemap(hdr, 2.0).channel(0, 0, 1), 188);
    EXPECT_NEAR(srgb_encode(0.5), 0.735357, 1e-6);
}

TEST(Tonemap, MonotoneAndBounded) {
    ImageBuffer hdr(512, 1);
    for (int x = 0; x < 512; ++x) {
        const double v = x == 511 ? 1e300 : std::pow(1.05, x) * 1e-6;
        hdr.set(x, 0, {v, v, v});
    }
    const DisplayImage d = tonemap(hdr, 0.0);
    for (int x = 1; x < 512; ++x) EXPECT_LE(d.channel(x - 1, 0, 0), d.channel(x, 0, 0));
    EXPECT_EQ(d.channel(511, 0, 0), 255);
}

}  // namespace
}  // namespace twinlight
