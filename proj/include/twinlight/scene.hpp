// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twinlight/vec3.hpp"

namespace twinlight {

/// Room interior spans [0, size_m] on every axis; z is up.
struct Room {
    Vec3 size_m;
    Rgb wall_albedo;
    Rgb floor_albedo;
    Rgb ceiling_albedo;
};

/// Direction an emitter radiates into. The rectangle lies in the plane normal to `axis`.
struct Facing {
    int axis = 2;   // 0 = x, 1 = y, 2 = z
    int sign = -1;  // +1 or -1

    Vec3 normal() const {
        Vec3 n;
        n[axis] = static_cast<double>(sign);
        return n;
    }
    /// The two in-plane axes in increasing order; half_extents_m maps onto them.
    std::array<int, 2> tangent_axes() const {
        if (axis == 0) return {1, 2};
        if (axis == 1) return {0, 2};
        return {0, 1};
    }
    bool operator==(const Facing &) const = default;
};

std::string to_string(Facing f);
Facing parse_facing(std::string_view text);

struct Fixture {
    std::string id;
    Vec3 center_m;
    std::array<double, 2> half_extents_m{};
    Facing facing;
    double flux_lm = 1000.0;
    // Exactly one of the two colour sources is engaged.
    std::optional<double> cct_k;
    std::optional<Rgb> color_rgb;
    double dimmer = 1.0;
    bool enabled = true;

    double area_m2() const { return 4.0 * half_extents_m[0] * half_extents_m[1]; }
};

struct Furnishing {
    std::string id;
    Vec3 min_m;
    Vec3 max_m;
    Rgb albedo;
};

struct Camera {
    std::string id;
    Vec3 position_m;
    Vec3 look_at_m;
    Vec3 up{0.0, 0.0, 1.0};
    double vfov_deg = 60.0;
    double exposure_ev = 0.0;
};

struct Scene {
    std::string name;
    Room room;
    std::vector<Fixture> fixtures;
    std::vector<Furnishing> furnishings;
    std::vector<Camera> cameras;
    std::int64_t revision = 0;

    const Fixture *find_fixture(std::string_view id) const;
    const Camera *find_camera(std::string_view id) const;
};

/// A partial edit of one fixture's live settings.
struct FixtureUpdate {
    std::string fixture_id;
    std::optional<double> dimmer;
    std::optional<double> cct_k;
    std::optional<Rgb> color_rgb;
    std::optional<bool> enabled;

    bool empty() const { return !dimmer && !cct_k && !color_rgb && !enabled; }
};

inline constexpr double kMinCctK = 1667.0;
inline constexpr double kMaxCctK = 25000.0;

/// Throws ValidationError naming the violated invariant and the offending id.
void validate(const Scene &scene);

/// Parses a scene document and validates it. Revision starts at 0.
/// Throws ParseError on malformed text and ValidationError on schema or invariant violations.
Scene parse_scene(std::string_view text);

/// Canonical text form: sorted keys, numbers rounded to 6 significant digits.
std::string serialize_scene(const Scene &scene);

Scene load_scene_file(const std::string &path);

/// Returns a copy with the update applied and revision + 1. The input is never modified.
/// Throws NotFoundError for an unknown fixture and ValidationError for empty or invalid updates.
Scene apply_update(const Scene &scene, const FixtureUpdate &update);

}  // namespace twinlight
