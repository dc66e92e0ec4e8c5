// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "twinlight/error.hpp"
#include "twinlight/fidelity.hpp"
#include "twinlight/json_io.hpp"

namespace twinlight {

using nlohmann::json;

namespace {

constexpr double kContainTol = 1e-9;

std::string quote_id(std::string_view id) { return "'" + std::string(id) + "'"; }

[[noreturn]] void fail(const std::string &subject, const std::string &what) {
    throw ValidationError(subject.empty() ? what : subject + ": " + what, subject);
}

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

bool finite3(const Vec3 &v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

void check_albedo(const Rgb &c, const std::string &subject, const char *field) {
    if (!in_unit(c.x) || !in_unit(c.y) || !in_unit(c.z))
        fail(subject, std::string(field) + " components must be in [0,1]");
}

bool inside_room(const Vec3 &p, const Vec3 &size) {
    for (int a = 0; a < 3; ++a)
        if (p[a] < -kContainTol || p[a] > size[a] + kContainTol) return false;
    return true;
}

void validate_fixture(const Fixture &f, const Room &room) {
    const std::string who = "fixture " + quote_id(f.id);
    if (!finite3(f.center_m)) fail(who, "center_m must be finite");
    if (!(f.half_extents_m[0] > 0.0) || !(f.half_extents_m[1] > 0.0) ||
        !std::isfinite(f.half_extents_m[0]) || !std::isfinite(f.half_extents_m[1]))
        fail(who, "half_extents_m must be positive (area > 0)");
    if (!(f.flux_lm > 0.0) || !std::isfinite(f.flux_lm)) fail(who, "flux_lm must be > 0");
    if (f.cct_k.has_value() == f.color_rgb.has_value()) fail(who, "exactly one of cct/color must be set");
    if (f.cct_k && !(*f.cct_k >= kMinCctK && *f.cct_k <= kMaxCctK))
        fail(who, "cct_k must be in [1667, 25000]");
    if (f.color_rgb) {
        const Rgb &c = *f.color_rgb;
        if (!finite3(c) || c.x < 0.0 || c.y < 0.0 || c.z < 0.0)
            fail(who, "color_rgb components must be finite and >= 0");
        if (!(0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z > 0.0))
            fail(who, "color_rgb must have positive luminance");
    }
    if (!in_unit(f.dimmer)) fail(who, "dimmer must be in [0,1]");

    const auto t = f.facing.tangent_axes();
    Vec3 lo = f.center_m, hi = f.center_m;
    for (int k = 0; k < 2; ++k) {
        lo[t[k]] -= f.half_extents_m[k];
        hi[t[k]] += f.half_extents_m[k];
    }
    if (!inside_room(lo, room.size_m) || !inside_room(hi, room.size_m))
        fail(who, "bounds must lie inside the room");
}

void validate_furnishing(const Furnishing &f, const Room &room) {
    const std::string who = "furnishing " + quote_id(f.id);
    if (!finite3(f.min_m) || !finite3(f.max_m)) fail(who, "bounds must be finite");
    if (!(f.min_m.x < f.max_m.x && f.min_m.y < f.max_m.y && f.min_m.z < f.max_m.z))
        fail(who, "min_m must be < max_m componentwise");
    check_albedo(f.albedo, who, "albedo");
    if (!inside_room(f.min_m, room.size_m) || !inside_room(f.max_m, room.size_m))
        fail(who, "bounds must lie inside the room");
}

void validate_camera(const Camera &c, const Room &room) {
    const std::string who = "camera " + quote_id(c.id);
    if (!finite3(c.position_m) || !finite3(c.look_at_m) || !finite3(c.up))
        fail(who, "vectors must be finite");
    const Vec3 dir = c.look_at_m - c.position_m;
    if (!(length(dir) > 0.0)) fail(who, "position_m must differ from look_at_m");
    const double up_len = length(c.up);
    if (!(up_len > 0.0) || length(cross(normalize(dir), c.up / up_len)) < 1e-6)
        fail(who, "up must not be parallel to the view direction");
    if (!(c.vfov_deg > 10.0 && c.vfov_deg < 140.0)) fail(who, "vfov_deg must be in (10, 140)");
    if (!std::isfinite(c.exposure_ev)) fail(who, "exposure_ev must be finite");
    for (int a = 0; a < 3; ++a)
        if (!(c.position_m[a] > 0.0 && c.position_m[a] < room.size_m[a]))
            fail(who, "position_m must lie strictly inside the room");
}

template <typename T>
void check_ids(const std::vector<T> &items, const char *kind) {
    std::set<std::string_view> seen;
    for (const auto &it : items) {
        if (it.id.empty()) fail(std::string(kind), "every id must be nonempty");
        if (!seen.insert(it.id).second) fail(std::string(kind) + " " + quote_id(it.id), "duplicate id");
    }
}

// ---- object-notation helpers ----

[[noreturn]] void schema(const std::string &where, const std::string &what) {
    throw ValidationError(where + ": " + what, where);
}

void reject_unknown(const json &obj, const std::string &where, std::initializer_list<const char *> keys) {
    for (const auto &[k, _] : obj.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char *s) { return k == s; }) == keys.end())
            schema(where, "unknown field \"" + k + "\"");
    }
}

const json &field(const json &obj, const char *key, const std::string &where) {
    auto it = obj.find(key);
    if (it == obj.end()) schema(where, std::string("missing field \"") + key + "\"");
    return *it;
}

double number(const json &v, const std::string &where, const char *key) {
    if (!v.is_number()) schema(where, std::string("\"") + key + "\" must be a number");
    return v.get<double>();
}

Vec3 vec3(const json &v, const std::string &where, const char *key) {
    if (!v.is_array() || v.size() != 3) schema(where, std::string("\"") + key + "\" must be a 3-element array");
    return {number(v[0], where, key), number(v[1], where, key), number(v[2], where, key)};
}

std::string text(const json &v, const std::string &where, const char *key) {
    if (!v.is_string()) schema(where, std::string("\"") + key + "\" must be a string");
    return v.get<std::string>();
}

const json &array_field(const json &obj, const char *key, const std::string &where) {
    const json &v = field(obj, key, where);
    if (!v.is_array()) schema(where, std::string("\"") + key + "\" must be an array");
    return v;
}

json num(double v) { return canonical_number(v); }

json arr(const Vec3 &v) { return json::array({num(v.x), num(v.y), num(v.z)}); }

std::string where_of(const char *kind, const json &obj, std::size_t index) {
    auto it = obj.find("id");
    if (it != obj.end() && it->is_string()) return std::string(kind) + " '" + it->get<std::string>() + "'";
    return std::string(kind) + " #" + std::to_string(index);
}

}  // namespace

std::string to_string(Facing f) {
    static const char *names[3] = {"x", "y", "z"};
    return std::string(f.sign > 0 ? "+" : "-") + names[f.axis];
}

Facing parse_facing(std::string_view text) {
    if (text.size() == 2 && (text[0] == '+' || text[0] == '-') && text[1] >= 'x' && text[1] <= 'z')
        return Facing{text[1] - 'x', text[0] == '+' ? 1 : -1};
    throw ValidationError("facing must be one of -x,+x,-y,+y,-z,+z (got \"" + std::string(text) + "\")");
}

const Fixture *Scene::find_fixture(std::string_view id) const {
    for (const auto &f : fixtures)
        if (f.id == id) return &f;
    return nullptr;
}

const Camera *Scene::find_camera(std::string_view id) const {
    for (const auto &c : cameras)
        if (c.id == id) return &c;
    return nullptr;
}

double canonical_number(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? 0.0 : v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::strtod(buf, nullptr);
}

void validate(const Scene &scene) {
    const Room &r = scene.room;
    if (!finite3(r.size_m) || !(r.size_m.x > 0.0 && r.size_m.y > 0.0 && r.size_m.z > 0.0))
        fail("room", "size_m must be strictly positive");
    check_albedo(r.wall_albedo, "room", "wall_albedo");
    check_albedo(r.floor_albedo, "room", "floor_albedo");
    check_albedo(r.ceiling_albedo, "room", "ceiling_albedo");

    check_ids(scene.fixtures, "fixture");
    check_ids(scene.furnishings, "furnishing");
    check_ids(scene.cameras, "camera");
    if (scene.cameras.empty()) fail("cameras", "at least one camera is required");

    for (const auto &f : scene.fixtures) validate_fixture(f, r);
    for (const auto &f : scene.furnishings) validate_furnishing(f, r);
    for (const auto &c : scene.cameras) validate_camera(c, r);
}

json scene_to_json(const Scene &s) {
    json fixtures = json::array();
    for (const auto &f : s.fixtures) {
        json j = {{"id", f.id},
                  {"center_m", arr(f.center_m)},
                  {"half_extents_m", json::array({num(f.half_extents_m[0]), num(f.half_extents_m[1])})},
                  {"facing", to_string(f.facing)},
                  {"flux_lm", num(f.flux_lm)},
                  {"dimmer", num(f.dimmer)},
                  {"enabled", f.enabled}};
        if (f.cct_k) j["cct_k"] = num(*f.cct_k);
        if (f.color_rgb) j["color_rgb"] = arr(*f.color_rgb);
        fixtures.push_back(std::move(j));
    }
    json furnishings = json::array();
    for (const auto &f : s.furnishings)
        furnishings.push_back(
            {{"id", f.id}, {"min_m", arr(f.min_m)}, {"max_m", arr(f.max_m)}, {"albedo", arr(f.albedo)}});
    json cameras = json::array();
    for (const auto &c : s.cameras)
        cameras.push_back({{"id", c.id},
                           {"position_m", arr(c.position_m)},
                           {"look_at_m", arr(c.look_at_m)},
                           {"up", arr(c.up)},
                           {"vfov_deg", num(c.vfov_deg)},
                           {"exposure_ev", num(c.exposure_ev)}});
    return {{"name", s.name},
            {"room",
             {{"size_m", arr(s.room.size_m)},
              {"wall_albedo", arr(s.room.wall_albedo)},
              {"floor_albedo", arr(s.room.floor_albedo)},
              {"ceiling_albedo", arr(s.room.ceiling_albedo)}}},
            {"fixtures", std::move(fixtures)},
            {"furnishings", std::move(furnishings)},
            {"cameras", std::move(cameras)}};
}

Scene scene_from_json(const json &doc) {
    if (!doc.is_object()) schema("document", "top level must be an object");
    reject_unknown(doc, "document", {"name", "room", "fixtures", "furnishings", "cameras"});

    Scene s;
    s.name = text(field(doc, "name", "document"), "document", "name");

    const json &room = field(doc, "room", "document");
    if (!room.is_object()) schema("room", "must be an object");
    reject_unknown(room, "room", {"size_m", "wall_albedo", "floor_albedo", "ceiling_albedo"});
    s.room.size_m = vec3(field(room, "size_m", "room"), "room", "size_m");
    s.room.wall_albedo = vec3(field(room, "wall_albedo", "room"), "room", "wall_albedo");
    s.room.floor_albedo = vec3(field(room, "floor_albedo", "room"), "room", "floor_albedo");
    s.room.ceiling_albedo = vec3(field(room, "ceiling_albedo", "room"), "room", "ceiling_albedo");

    const json &fixtures = array_field(doc, "fixtures", "document");
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
        const json &j = fixtures[i];
        const std::string w = where_of("fixture", j, i);
        if (!j.is_object()) schema(w, "must be an object");
        reject_unknown(j, w,
                       {"id", "center_m", "half_extents_m", "facing", "flux_lm", "cct_k", "color_rgb", "dimmer",
                        "enabled"});
        Fixture f;
        f.id = text(field(j, "id", w), w, "id");
        f.center_m = vec3(field(j, "center_m", w), w, "center_m");
        const json &he = field(j, "half_extents_m", w);
        if (!he.is_array() || he.size() != 2) schema(w, "\"half_extents_m\" must be a 2-element array");
        f.half_extents_m = {number(he[0], w, "half_extents_m"), number(he[1], w, "half_extents_m")};
        try {
            f.facing = parse_facing(text(field(j, "facing", w), w, "facing"));
        } catch (const ValidationError &e) {
            schema(w, e.what());
        }
        f.flux_lm = number(field(j, "flux_lm", w), w, "flux_lm");
        if (j.contains("cct_k")) f.cct_k = number(j["cct_k"], w, "cct_k");
        if (j.contains("color_rgb")) f.color_rgb = vec3(j["color_rgb"], w, "color_rgb");
        f.dimmer = number(field(j, "dimmer", w), w, "dimmer");
        const json &en = field(j, "enabled", w);
        if (!en.is_boolean()) schema(w, "\"enabled\" must be a boolean");
        f.enabled = en.get<bool>();
        s.fixtures.push_back(std::move(f));
    }

    if (doc.contains("furnishings")) {
        const json &furn = array_field(doc, "furnishings", "document");
        for (std::size_t i = 0; i < furn.size(); ++i) {
            const json &j = furn[i];
            const std::string w = where_of("furnishing", j, i);
            if (!j.is_object()) schema(w, "must be an object");
            reject_unknown(j, w, {"id", "min_m", "max_m", "albedo"});
            s.furnishings.push_back({text(field(j, "id", w), w, "id"), vec3(field(j, "min_m", w), w, "min_m"),
                                     vec3(field(j, "max_m", w), w, "max_m"),
                                     vec3(field(j, "albedo", w), w, "albedo")});
        }
    }

    const json &cams = array_field(doc, "cameras", "document");
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const json &j = cams[i];
        const std::string w = where_of("camera", j, i);
        if (!j.is_object()) schema(w, "must be an object");
        reject_unknown(j, w, {"id", "position_m", "look_at_m", "up", "vfov_deg", "exposure_ev"});
        Camera c;
        c.id = text(field(j, "id", w), w, "id");
        c.position_m = vec3(field(j, "position_m", w), w, "position_m");
        c.look_at_m = vec3(field(j, "look_at_m", w), w, "look_at_m");
        c.up = vec3(field(j, "up", w), w, "up");
        c.vfov_deg = number(field(j, "vfov_deg", w), w, "vfov_deg");
        c.exposure_ev = number(field(j, "exposure_ev", w), w, "exposure_ev");
        s.cameras.push_back(std::move(c));
    }

    validate(s);
    return s;
}

Scene parse_scene(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("scene syntax error at byte ") + std::to_string(e.byte) + ": " + e.what(),
                         e.byte);
    }
    return scene_from_json(doc);
}

std::string serialize_scene(const Scene &scene) { return scene_to_json(scene).dump(2) + "\n"; }

Scene load_scene_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read scene file " + path, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

Scene apply_update(const Scene &scene, const FixtureUpdate &update) {
    if (update.empty()) throw ValidationError("update has no fields", update.fixture_id);
    if (update.cct_k && update.color_rgb)
        throw ValidationError("fixture '" + update.fixture_id + "': exactly one of cct/color may be set",
                              update.fixture_id);
    Scene next = scene;
    auto it = std::find_if(next.fixtures.begin(), next.fixtures.end(),
                           [&](const Fixture &f) { return f.id == update.fixture_id; });
    if (it == next.fixtures.end()) throw NotFoundError("unknown fixture '" + update.fixture_id + "'");

    if (update.dimmer) it->dimmer = *update.dimmer;
    if (update.enabled) it->enabled = *update.enabled;
    if (update.cct_k) {
        it->cct_k = update.cct_k;
        it->color_rgb.reset();
    }
    if (update.color_rgb) {
        it->color_rgb = update.color_rgb;
        it->cct_k.reset();
    }
    validate(next);
    next.revision = scene.revision + 1;
    return next;
}

FixtureUpdate fixture_update_from_json(std::string fixture_id, const json &body) {
    const std::string w = "update for fixture '" + fixture_id + "'";
    if (!body.is_object()) schema(w, "body must be an object");
    reject_unknown(body, w, {"dimmer", "cct_k", "color_rgb", "enabled"});
    FixtureUpdate u;
    u.fixture_id = std::move(fixture_id);
    if (body.contains("dimmer")) u.dimmer = number(body["dimmer"], w, "dimmer");
    if (body.contains("cct_k")) u.cct_k = number(body["cct_k"], w, "cct_k");
    if (body.contains("color_rgb")) u.color_rgb = vec3(body["color_rgb"], w, "color_rgb");
    if (body.contains("enabled")) {
        if (!body["enabled"].is_boolean()) schema(w, "\"enabled\" must be a boolean");
        u.enabled = body["enabled"].get<bool>();
    }
    return u;
}

json flags_to_json(const RenderFlags &f) {
    return {{"indirect", f.indirect}, {"shadows", f.shadows}, {"max_bounces", f.max_bounces}};
}

RenderFlags flags_from_json(const json &doc) {
    RenderFlags f;
    if (!doc.is_object()) schema("flags", "must be an object");
    reject_unknown(doc, "flags", {"indirect", "shadows", "max_bounces"});
    if (doc.contains("indirect")) {
        if (!doc["indirect"].is_boolean()) schema("flags", "\"indirect\" must be a boolean");
        f.indirect = doc["indirect"].get<bool>();
    }
    if (doc.contains("shadows")) {
        if (!doc["shadows"].is_boolean()) schema("flags", "\"shadows\" must be a boolean");
        f.shadows = doc["shadows"].get<bool>();
    }
    if (doc.contains("max_bounces")) {
        if (!doc["max_bounces"].is_number_integer() || doc["max_bounces"].get<int>() < 0)
            schema("flags", "\"max_bounces\" must be an integer >= 0");
        f.max_bounces = doc["max_bounces"].get<int>();
    }
    return f;
}

// ---- fidelity conditions ----

Condition parse_condition(std::string_view text) {
    if (text == "B" || text == "b") return Condition::B;
    if (text == "C" || text == "c") return Condition::C;
    if (text == "D" || text == "d") return Condition::D;
    throw ValidationError("condition must be B, C or D (got \"" + std::string(text) + "\")");
}

const char *to_string(Condition c) {
    switch (c) {
        case Condition::B: return "B";
        case Condition::C: return "C";
        case Condition::D: return "D";
    }
    return "?";
}

const char *describe(Condition c) {
    switch (c) {
        case Condition::B: return "Incorrect lighting and missing furniture";
        case Condition::C: return "Missing Volume framework";
        case Condition::D: return "Final Digital Twin";
    }
    return "?";
}

std::pair<Scene, RenderFlags> fidelity_preset(const Scene &scene, Condition condition, RenderFlags full) {
    full.indirect = true;
    full.shadows = true;
    switch (condition) {
        case Condition::D: return {scene, full};
        case Condition::C: {
            RenderFlags flat = full;
            flat.indirect = false;
            flat.shadows = false;
            return {scene, flat};
        }
        case Condition::B: {
            Scene degraded = scene;
            degraded.furnishings.clear();
            for (auto &f : degraded.fixtures)
                if (f.cct_k) f.cct_k = std::clamp(*f.cct_k + kConditionBCctShiftK, kMinCctK, kMaxCctK);
            return {std::move(degraded), full};
        }
    }
    return {scene, full};
}

}  // namespace twinlight
