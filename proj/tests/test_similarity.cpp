// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <numeric>
#include <thread>

#include "test_support.hpp"
#include "twinlight/color.hpp"
#include "twinlight/error.hpp"
#include "twinlight/render.hpp"
#include "twinlight/rng.hpp"
#include "twinlight/similarity.hpp"

namespace twinlight {
namespace {

double norm(const std::vector<double> &v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

DisplayImage noise_image(int w, int h, std::uint64_t seed) {
    SplitMix rng(seed);
    DisplayImage img(w, h);
    for (auto &p : img.pixels) p = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
    return img;
}

DisplayImage uniform(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    DisplayImage img(w, h);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

DisplayImage office_render() {
    const Scene s = testing::demo_scene();
    RenderRequest r;
    r.camera_id = "cam0";
    r.width = r.height = 48;
    r.spp = 8;
    return tonemap(render(s, r), s.cameras[0].exposure_ev);
}

TEST(BuiltinEncoder, UnitNormAndShape) {
    const BuiltinEncoder enc;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Embedding e = enc.encode(noise_image(16 + int(seed) * 13, 20 + int(seed) * 7, seed));
        EXPECT_EQ(e.dim(), 512u);
        EXPECT_EQ(e.encoder_id, "builtin-grid-v1");
        EXPECT_NEAR(norm(e.values), 1.0, 1e-6);
    }
}

TEST(BuiltinEncoder, BlackImageIsStillEncodable) {
    const Embedding e = BuiltinEncoder().encode(DisplayImage(32, 32));
    EXPECT_NEAR(norm(e.values), 1.0, 1e-6);
}

TEST(BuiltinEncoder, UniformGrayHasNoGradientFeatures) {
    const auto raw = BuiltinEncoder::raw_features(uniform(40, 30, 128, 128, 128));
    ASSERT_EQ(raw.size(), 512u);
    for (int cell = 0; cell < 64; ++cell) {
        EXPECT_NEAR(raw[cell * 8], 128.0 / 255.0, 1e-12);
        EXPECT_EQ(raw[cell * 8 + 1], 0.0);
        EXPECT_EQ(raw[cell * 8 + 2], 0.0);
        for (int b = 0; b < kBuiltinOrientationBins; ++b) EXPECT_EQ(raw[cell * 8 + 3 + b], 0.0) << cell << "/" << b;
    }
}

TEST(BuiltinEncoder, OpponentChannelsSeeColour) {
    const auto red = BuiltinEncoder::raw_features(uniform(16, 16, 255, 0, 0));
    EXPECT_GT(red[1], 0.0);
    const auto blue = BuiltinEncoder::raw_features(uniform(16, 16, 0, 0, 255));
    EXPECT_GT(blue[2], 0.0);
}

TEST(BuiltinEncoder, Deterministic) {
    const DisplayImage img = noise_image(50, 40, 3);
    const DisplayImage copy = img;
    const BuiltinEncoder enc;
    EXPECT_EQ(enc.encode(img).values, enc.encode(copy).values);
}

TEST(BuiltinEncoder, TooSmall) {
    EXPECT_THROW(BuiltinEncoder().encode(DisplayImage(15, 64)), PreconditionError);
}

TEST(Similarity, Axioms) {
    const BuiltinEncoder enc;
    const Embedding a = enc.encode(noise_image(32, 32, 1));
    const Embedding b = enc.encode(office_render());
    EXPECT_NEAR(similarity_percent(a, a), 100.0, 1e-6);
    EXPECT_EQ(similarity_percent(a, b), similarity_percent(b, a));
    EXPECT_LT(similarity_percent(a, b), 100.0);

    Embedding neg = a;
    for (auto &v : neg.values) v = -v;
    EXPECT_EQ(similarity_percent(a, neg), 0.0);
}

// Property: symmetry and range for random unit vectors.
TEST(Similarity, RangeAndSymmetryProperty) {
    SplitMix rng(17);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> u(8), v(8);
        for (auto &x : u) x = rng.next_double() - 0.5;
        for (auto &x : v) x = rng.next_double() - 0.5;
        const Embedding a{l2_normalized(u), "t"}, b{l2_normalized(v), "t"};
        const double p = similarity_percent(a, b);
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 100.0);
        ASSERT_EQ(p, similarity_percent(b, a));
    }
}

TEST(Similarity, Mismatch) {
    const Embedding a{{1, 0}, "x"}, b{{1, 0, 0}, "x"}, c{{1, 0}, "y"};
    EXPECT_THROW(similarity_percent(a, b), MismatchError);
    EXPECT_THROW(similarity_percent(a, c), MismatchError);
}

TEST(Similarity, L2NormalizedRejectsDegenerate) {
    EXPECT_THROW(l2_normalized({0, 0, 0}), EncoderValueError);
    EXPECT_THROW(l2_normalized({1, NAN}), EncoderValueError);
    const auto v = l2_normalized({3, 4});
    EXPECT_DOUBLE_EQ(v[0], 0.6);
    EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(Similarity, GrayBlendDegradesMonotonically) {
    const BuiltinEncoder enc;
    const DisplayImage r = office_render();
    const Embedding ref = enc.encode(r);
    double prev = 100.0 + 1e-9;
    for (double w : {0.0, 0.25, 0.5, 0.75}) {
        const double p = similarity_percent(ref, enc.encode(blend_toward_gray(r, w)));
        EXPECT_LE(p, prev) << w;
        prev = p;
    }
    EXPECT_LT(prev, 100.0);
}

TEST(CompareReport, RowsInOrder) {
    const BuiltinEncoder enc;
    const DisplayImage ref = office_render();
    const auto report =
        compare_report(ref, {{"self", ref}, {"noise", noise_image(48, 48, 9)}, {"gray", blend_toward_gray(ref, 0.5)}}, enc);
    ASSERT_EQ(report.rows.size(), 3u);
    EXPECT_EQ(report.rows[0].label, "self");
    EXPECT_NEAR(report.rows[0].percent, 100.0, 1e-6);
    EXPECT_EQ(report.rows[1].label, "noise");
    EXPECT_LT(report.rows[1].percent, 100.0);
    EXPECT_EQ(report.rows[2].label, "gray");
    EXPECT_EQ(report.encoder_id, "builtin-grid-v1");
}

TEST(CompareReport, FailingCandidateIsLabeled) {
    const BuiltinEncoder enc;
    const DisplayImage ref = office_render();
    try {
        compare_report(ref, {{"ok", ref}, {"tiny", DisplayImage(4, 4)}}, enc);
        FAIL();
    } catch (const PreconditionError &e) {
        EXPECT_NE(std::string(e.what()).find("tiny"), std::string::npos) << e.what();
    }
}

TEST(MakeEncoder, Choices) {
    EXPECT_EQ(make_encoder("builtin")->id(), "builtin-grid-v1");
    EXPECT_EQ(make_encoder("http://127.0.0.1:9")->id(), "external:http://127.0.0.1:9");
    EXPECT_THROW(make_encoder("clip"), ValidationError);
}

// Minimal stand-in for a remote encoder.
class MockEndpoint {
public:
    explicit MockEndpoint(std::string body, int status = 200) {
        server_.Post("/embed", [body, status, this](const httplib::Request &req, httplib::Response &res) {
            last_content_type_ = req.get_header_value("Content-Type");
            last_body_size_ = req.body.size();
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::string last_content_type_;
    std::size_t last_body_size_ = 0;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string embedding_body(const std::vector<double> &v, int dim) {
    nlohmann::json j;
    j["encoder_id"] = "mock-clip";
    j["dim"] = dim;
    j["embedding"] = v;
    return j.dump();
}

TEST(HttpEncoder, NormalizesRemoteVector) {
    std::vector<double> v(16, 0.0);
    v[0] = 3;
    v[1] = 4;
    MockEndpoint mock(embedding_body(v, 16));
    const HttpEncoder enc(mock.url());
    const Embedding e = enc.encode(noise_image(20, 20, 1));
    EXPECT_EQ(e.encoder_id, "mock-clip");
    ASSERT_EQ(e.dim(), 16u);
    EXPECT_DOUBLE_EQ(e.values[0], 0.6);
    EXPECT_DOUBLE_EQ(e.values[1], 0.8);
    for (std::size_t i = 2; i < 16; ++i) EXPECT_EQ(e.values[i], 0.0);
    EXPECT_EQ(mock.last_content_type_, "image/png");
    EXPECT_GT(mock.last_body_size_, 0u);
}

TEST(HttpEncoder, WrongArityIsProtocolError) {
    MockEndpoint mock(embedding_body({1, 2, 3}, 4));
    EXPECT_THROW(HttpEncoder(mock.url()).encode(noise_image(20, 20, 1)), EncoderProtocolError);
}

TEST(HttpEncoder, MalformedReplyIsProtocolError) {
    MockEndpoint garbage("not json");
    EXPECT_THROW(HttpEncoder(garbage.url()).encode(noise_image(20, 20, 1)), EncoderProtocolError);
    MockEndpoint failing(embedding_body({1, 0}, 2), 500);
    EXPECT_THROW(HttpEncoder(failing.url()).encode(noise_image(20, 20, 1)), EncoderProtocolError);
}

TEST(HttpEncoder, NonFiniteIsValueError) {
    MockEndpoint mock(R"({"encoder_id": "m", "dim": 2, "embedding": [1.0, null]})");
    EXPECT_THROW(HttpEncoder(mock.url()).encode(noise_image(20, 20, 1)), EncoderValueError);
}

TEST(HttpEncoder, UnreachableNamesEndpoint) {
    // Grab a free port, then close it so nothing is listening.
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    const std::string url = "http://127.0.0.1:" + std::to_string(port);
    try {
        HttpEncoder(url, 2.0).encode(noise_image(20, 20, 1));
        FAIL();
    } catch (const EncoderConnectionError &e) {
        EXPECT_NE(std::string(e.what()).find(url), std::string::npos) << e.what();
    }
}

TEST(HttpEncoder, ErrorsCarryCandidateLabelInReports) {
    MockEndpoint mock(embedding_body({1, 2, 3}, 4));
    const HttpEncoder enc(mock.url());
    const DisplayImage img = noise_image(20, 20, 1);
    EXPECT_THROW(compare_report(img, {{"d", img}}, enc), EncoderProtocolError);
}

}  // namespace
}  // namespace twinlight
