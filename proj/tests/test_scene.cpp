// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <string>

#include "test_support.hpp"
#include "twinlight/error.hpp"
#include "twinlight/fidelity.hpp"
#include "twinlight/json_io.hpp"
#include "twinlight/rng.hpp"

namespace twinlight {
namespace {

using testing::demo_scene;
using testing::kMinimalScene;

std::string with_replacement(std::string text, const std::string &from, const std::string &to) {
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}

TEST(ParseScene, MinimalDocument) {
    const Scene s = parse_scene(kMinimalScene);
    EXPECT_EQ(s.fixtures.size(), 1u);
    EXPECT_EQ(s.revision, 0);
    EXPECT_EQ(s.room.size_m, (Vec3{4, 3, 2.7}));
    EXPECT_EQ(s.fixtures[0].facing, (Facing{2, -1}));
    ASSERT_TRUE(s.fixtures[0].cct_k.has_value());
    EXPECT_FALSE(s.fixtures[0].color_rgb.has_value());
}

TEST(ParseScene, DimmerOutOfRangeNamesDimmer) {
    const auto doc = with_replacement(kMinimalScene, "\"dimmer\": 0.8", "\"dimmer\": 1.5");
    try {
        parse_scene(doc);
        FAIL() << "expected a validation error";
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("dimmer"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("ceiling1"), std::string::npos) << e.what();
    }
}

TEST(ParseScene, CctAndColorAreMutuallyExclusive) {
    const auto doc = with_replacement(kMinimalScene, "\"cct_k\": 4000,", "\"cct_k\": 4000, \"color_rgb\": [1, 1, 1],");
    try {
        parse_scene(doc);
        FAIL() << "expected a validation error";
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("exactly one of cct/color"), std::string::npos) << e.what();
    }
    const auto neither = with_replacement(kMinimalScene, "\"cct_k\": 4000,", "");
    EXPECT_THROW(parse_scene(neither), ValidationError);
}

TEST(ParseScene, SyntaxErrorReportsPosition) {
    const std::string doc = "{\"name\": \"x\", \"room\": [1, 2,, 3]}";
    try {
        parse_scene(doc);
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.position(), 29u);
        EXPECT_NE(std::string(e.what()).find("byte 29"), std::string::npos) << e.what();
    }
}

TEST(ParseScene, InvariantViolations) {
    // Duplicate ids.
    Scene s = parse_scene(kMinimalScene);
    s.fixtures.push_back(s.fixtures[0]);
    EXPECT_THROW(validate(s), ValidationError);

    // Fixture poking out of the room.
    EXPECT_THROW(parse_scene(with_replacement(kMinimalScene, "\"center_m\": [2, 1.5, 2.7]", "\"center_m\": [3.9, 1.5, 2.7]")),
                 ValidationError);
    // CCT outside the locus fit.
    EXPECT_THROW(parse_scene(with_replacement(kMinimalScene, "\"cct_k\": 4000", "\"cct_k\": 1000")), ValidationError);
    // No cameras.
    s = parse_scene(kMinimalScene);
    s.cameras.clear();
    EXPECT_THROW(validate(s), ValidationError);
    // Up parallel to the view direction.
    s = parse_scene(kMinimalScene);
    s.cameras[0].up = s.cameras[0].look_at_m - s.cameras[0].position_m;
    EXPECT_THROW(validate(s), ValidationError);
    // vfov bounds are open.
    s = parse_scene(kMinimalScene);
    s.cameras[0].vfov_deg = 140.0;
    EXPECT_THROW(validate(s), ValidationError);
    // Inverted furnishing.
    s = parse_scene(kMinimalScene);
    s.furnishings.push_back({"box", {1, 1, 1}, {0.5, 2, 2}, {0.5, 0.5, 0.5}});
    EXPECT_THROW(validate(s), ValidationError);
    // Empty id.
    s = parse_scene(kMinimalScene);
    s.cameras[0].id.clear();
    EXPECT_THROW(validate(s), ValidationError);
    // Unknown keys are rejected.
    EXPECT_THROW(parse_scene(with_replacement(kMinimalScene, "\"name\": \"minimal\"", "\"name\": \"minimal\", \"extra\": 1")),
                 ValidationError);
}

TEST(SerializeScene, CanonicalFormIsIdempotent) {
    const Scene s = demo_scene();
    const std::string once = serialize_scene(s);
    const std::string twice = serialize_scene(parse_scene(once));
    EXPECT_EQ(once, twice);
    // Keys come out sorted.
    EXPECT_LT(once.find("\"cameras\""), once.find("\"fixtures\""));
    EXPECT_LT(once.find("\"fixtures\""), once.find("\"furnishings\""));
}

TEST(SerializeScene, NumbersRoundToSixSignificantDigits) {
    EXPECT_EQ(canonical_number(0.123456789), 0.123457);
    EXPECT_EQ(canonical_number(3000.0), 3000.0);
    EXPECT_EQ(canonical_number(1234567.0), 1234570.0);
    EXPECT_EQ(canonical_number(-0.0), 0.0);
}

// Property: serialize(parse(d)) is a fixed point for randomly perturbed valid documents.
TEST(SerializeScene, RoundTripProperty) {
    SplitMix rng(42);
    const Scene base = demo_scene();
    for (int trial = 0; trial < 50; ++trial) {
        Scene s = base;
        for (auto &f : s.fixtures) {
            f.dimmer = rng.next_double();
            f.flux_lm = 100.0 + 5000.0 * rng.next_double();
            if (rng.next_double() < 0.3) {
                f.cct_k.reset();
                f.color_rgb = Rgb{rng.next_double() + 0.01, rng.next_double(), rng.next_double()};
            } else {
                f.cct_k = kMinCctK + (kMaxCctK - kMinCctK) * rng.next_double();
            }
            f.enabled = rng.next_double() < 0.8;
        }
        s.cameras[0].exposure_ev = -4.0 + 8.0 * rng.next_double();
        const std::string d = serialize_scene(s);
        const std::string once = serialize_scene(parse_scene(d));
        EXPECT_EQ(once, serialize_scene(parse_scene(once)));
    }
}

TEST(ApplyUpdate, SetsDimmerAndBumpsRevision) {
    const Scene s = demo_scene();
    FixtureUpdate u;
    u.fixture_id = "ceiling1";
    u.dimmer = 0.5;
    const Scene next = apply_update(s, u);
    EXPECT_EQ(next.fixtures[0].dimmer, 0.5);
    EXPECT_EQ(next.revision, s.revision + 1);

    // Nothing else changed.
    Scene expect = s;
    expect.fixtures[0].dimmer = 0.5;
    expect.revision = next.revision;
    EXPECT_EQ(serialize_scene(next), serialize_scene(expect));
    EXPECT_EQ(next.fixtures[1].dimmer, s.fixtures[1].dimmer);
}

TEST(ApplyUpdate, Errors) {
    const Scene s = demo_scene();
    FixtureUpdate empty;
    empty.fixture_id = "ceiling1";
    try {
        apply_update(s, empty);
        FAIL();
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("no fields"), std::string::npos);
    }

    FixtureUpdate unknown;
    unknown.fixture_id = "x";
    unknown.dimmer = 0.1;
    try {
        apply_update(s, unknown);
        FAIL();
    } catch (const NotFoundError &e) {
        EXPECT_NE(std::string(e.what()).find("unknown fixture"), std::string::npos);
    }

    FixtureUpdate bad;
    bad.fixture_id = "ceiling1";
    bad.dimmer = -1.0;
    EXPECT_THROW(apply_update(s, bad), ValidationError);
}

TEST(ApplyUpdate, ColourSourceSwitches) {
    const Scene s = demo_scene();
    FixtureUpdate to_rgb;
    to_rgb.fixture_id = "ceiling2";
    to_rgb.color_rgb = Rgb{1.0, 0.5, 0.2};
    const Scene a = apply_update(s, to_rgb);
    EXPECT_FALSE(a.fixtures[1].cct_k.has_value());
    EXPECT_TRUE(a.fixtures[1].color_rgb.has_value());

    FixtureUpdate to_cct;
    to_cct.fixture_id = "ceiling2";
    to_cct.cct_k = 3000.0;
    const Scene b = apply_update(a, to_cct);
    EXPECT_EQ(b.fixtures[1].cct_k, 3000.0);
    EXPECT_FALSE(b.fixtures[1].color_rgb.has_value());
    EXPECT_EQ(b.revision, 2);

    FixtureUpdate both = to_cct;
    both.color_rgb = Rgb{1, 1, 1};
    EXPECT_THROW(apply_update(s, both), ValidationError);
}

// Property: every update changes exactly one fixture and bumps revision by one.
TEST(ApplyUpdate, RevisionProperty) {
    SplitMix rng(7);
    Scene s = demo_scene();
    for (int i = 0; i < 40; ++i) {
        FixtureUpdate u;
        u.fixture_id = s.fixtures[i % 2].id;
        u.dimmer = rng.next_double();
        if (i % 3 == 0) u.enabled = rng.next_double() < 0.5;
        const Scene next = apply_update(s, u);
        EXPECT_EQ(next.revision, s.revision + 1);
        const int other = 1 - i % 2;
        EXPECT_EQ(next.fixtures[other].dimmer, s.fixtures[other].dimmer);
        EXPECT_EQ(next.fixtures[other].enabled, s.fixtures[other].enabled);
        s = next;
    }
    EXPECT_EQ(s.revision, 40);
}

TEST(FixtureUpdateJson, Parses) {
    const auto u = fixture_update_from_json("ceiling1", nlohmann::json::parse(R"({"dimmer": 0.3, "enabled": false})"));
    EXPECT_EQ(u.dimmer, 0.3);
    EXPECT_EQ(u.enabled, false);
    EXPECT_FALSE(u.cct_k.has_value());
    EXPECT_THROW(fixture_update_from_json("c", nlohmann::json::parse(R"({"brightness": 1})")), ValidationError);
    EXPECT_THROW(fixture_update_from_json("c", nlohmann::json::parse(R"({"dimmer": "high"})")), ValidationError);
}

TEST(FidelityPreset, ConditionDIsIdentity) {
    const Scene s = demo_scene();
    ASSERT_EQ(s.furnishings.size(), 3u);
    const auto [scene, flags] = fidelity_preset(s, Condition::D);
    EXPECT_EQ(serialize_scene(scene), serialize_scene(s));
    EXPECT_TRUE(flags.indirect);
    EXPECT_TRUE(flags.shadows);
}

TEST(FidelityPreset, ConditionCDropsBounceAndShadows) {
    const Scene s = demo_scene();
    const auto [scene, flags] = fidelity_preset(s, Condition::C);
    EXPECT_EQ(serialize_scene(scene), serialize_scene(s));
    EXPECT_FALSE(flags.indirect);
    EXPECT_FALSE(flags.shadows);
    EXPECT_EQ(flags.effective_bounces(), 1);
}

TEST(FidelityPreset, ConditionBShiftsCctAndRemovesFurniture) {
    Scene s = demo_scene();
    s.fixtures[0].cct_k = 4000.0;
    s.fixtures[1].cct_k = 24000.0;
    const auto [scene, flags] = fidelity_preset(s, Condition::B);
    EXPECT_EQ(scene.fixtures[0].cct_k, 7000.0);
    EXPECT_EQ(scene.fixtures[1].cct_k, kMaxCctK);  // clamped
    EXPECT_TRUE(scene.furnishings.empty());
    EXPECT_TRUE(flags.indirect);
    EXPECT_NO_THROW(validate(scene));
}

// Property: B keeps every scene valid, including explicit-colour fixtures.
TEST(FidelityPreset, ConditionBPreservesInvariants) {
    SplitMix rng(99);
    for (int i = 0; i < 100; ++i) {
        Scene s = demo_scene();
        for (auto &f : s.fixtures) {
            if (rng.next_double() < 0.25) {
                f.cct_k.reset();
                f.color_rgb = Rgb{0.9, 0.8, 0.7};
            } else {
                f.cct_k = kMinCctK + (kMaxCctK - kMinCctK) * rng.next_double();
            }
        }
        const auto [b, flags] = fidelity_preset(s, Condition::B);
        EXPECT_NO_THROW(validate(b));
    }
}

TEST(FidelityPreset, ParseCondition) {
    EXPECT_EQ(parse_condition("B"), Condition::B);
    EXPECT_EQ(parse_condition("d"), Condition::D);
    EXPECT_THROW(parse_condition("E"), ValidationError);
}

}  // namespace
}  // namespace twinlight
