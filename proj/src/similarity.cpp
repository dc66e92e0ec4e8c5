// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/similarity.hpp"

#include <httplib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "twinlight/error.hpp"

namespace twinlight {

namespace {

constexpr int kSide = kBuiltinGrid * kBuiltinCell;  // 64

struct Plane {
    std::vector<double> r, g, b;
};

// Bilinear resample on pixel centres, channels scaled to [0,1].
Plane resample(const DisplayImage &img) {
    Plane out;
    out.r.resize(kSide * kSide);
    out.g.resize(kSide * kSide);
    out.b.resize(kSide * kSide);
    const double sx = static_cast<double>(img.width) / kSide;
    const double sy = static_cast<double>(img.height) / kSide;
    for (int y = 0; y < kSide; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < kSide; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            std::array<double, 3> c{};
            for (int ch = 0; ch < 3; ++ch) {
                const double top = (1.0 - wx) * img.channel(x0, y0, ch) + wx * img.channel(x1, y0, ch);
                const double bot = (1.0 - wx) * img.channel(x0, y1, ch) + wx * img.channel(x1, y1, ch);
                c[ch] = ((1.0 - wy) * top + wy * bot) / 255.0;
            }
            const int i = y * kSide + x;
            out.r[i] = c[0];
            out.g[i] = c[1];
            out.b[i] = c[2];
        }
    }
    return out;
}

template <typename E>
[[noreturn]] void rethrow_labeled(const E &e, const std::string &label) {
    throw E("candidate '" + label + "': " + e.what());
}

std::string scheme_host_port(const std::string &endpoint, std::string &prefix) {
    const auto scheme = endpoint.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = endpoint.find('/', host_start);
    std::string base = slash == std::string::npos ? endpoint : endpoint.substr(0, slash);
    prefix = slash == std::string::npos ? "" : endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    if (scheme == std::string::npos) base = "http://" + base;
    return base;
}

}  // namespace

std::vector<double> l2_normalized(std::vector<double> values) {
    double sq = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw EncoderValueError("embedding contains a non-finite value");
        sq += v * v;
    }
    if (!(sq > 0.0) || !std::isfinite(sq)) throw EncoderValueError("embedding has zero or non-finite norm");
    const double inv = 1.0 / std::sqrt(sq);
    for (double &v : values) v *= inv;
    return values;
}

std::vector<double> BuiltinEncoder::raw_features(const DisplayImage &img) {
    if (img.width < 16 || img.height < 16)
        throw PreconditionError("image too small for the built-in encoder (" + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + ", need at least 16x16)");
    const Plane p = resample(img);
    std::vector<double> luma(kSide * kSide);
    for (int i = 0; i < kSide * kSide; ++i) luma[i] = 0.299 * p.r[i] + 0.587 * p.g[i] + 0.114 * p.b[i];
    auto L = [&](int x, int y) {
        return luma[std::clamp(y, 0, kSide - 1) * kSide + std::clamp(x, 0, kSide - 1)];
    };

    std::vector<double> feat(kBuiltinDim, 0.0);
    const double inv_n = 1.0 / (kBuiltinCell * kBuiltinCell);
    for (int cy = 0; cy < kBuiltinGrid; ++cy) {
        for (int cx = 0; cx < kBuiltinGrid; ++cx) {
            double* f = &feat[(cy * kBuiltinGrid + cx) * kBuiltinFeaturesPerCell];
            for (int py = 0; py < kBuiltinCell; ++py) {
                for (int px = 0; px < kBuiltinCell; ++px) {
                    const int x = cx * kBuiltinCell + px, y = cy * kBuiltinCell + py;
                    const int i = y * kSide + x;
                    f[0] += luma[i];
                    f[1] += p.r[i] - p.g[i];
                    f[2] += p.b[i] - 0.5 * (p.r[i] + p.g[i]);
                    const double gx = 0.5 * (L(x + 1, y) - L(x - 1, y));
                    const double gy = 0.5 * (L(x, y + 1) - L(x, y - 1));
                    const double mag = std::hypot(gx, gy);
                    if (mag > 0.0) {
                        double theta = std::atan2(gy, gx);
                        if (theta < 0.0) theta += std::numbers::pi;
                        const int bin = std::min(kBuiltinOrientationBins - 1,
                                                 static_cast<int>(theta / std::numbers::pi * kBuiltinOrientationBins));
                        f[3 + bin] += mag;
                    }
                }
            }
            for (int k = 0; k < kBuiltinFeaturesPerCell; ++k) f[k] *= inv_n;
        }
    }
    return feat;
}

Embedding BuiltinEncoder::encode(const DisplayImage &img) const {
    std::vector<double> feat = raw_features(img);
    double sq = 0.0;
    for (double v : feat) sq += v * v;
    if (!(sq > 0.0)) {
        // A black frame has no features at all; give it the direction of a flat neutral field.
        for (std::size_t c = 0; c < feat.size(); c += kBuiltinFeaturesPerCell) feat[c] = 1.0;
    }
    return {l2_normalized(std::move(feat)), id()};
}

HttpEncoder::HttpEncoder(std::string endpoint, double timeout_s)
    : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {
    scheme_host_port_ = scheme_host_port(endpoint_, path_prefix_);
}

Embedding HttpEncoder::encode(const DisplayImage &img) const {
    const auto png = encode_png(img);
    httplib::Client client(scheme_host_port_);
    const auto secs = static_cast<time_t>(timeout_s_);
    const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    auto res = client.Post(path_prefix_ + "/embed", reinterpret_cast<const char *>(png.data()), png.size(),
                           "image/png");
    if (!res)
        throw EncoderConnectionError("cannot reach encoder at " + endpoint_ + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw EncoderProtocolError("encoder at " + endpoint_ + " returned HTTP " + std::to_string(res->status));

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception &e) {
        throw EncoderProtocolError("encoder at " + endpoint_ + " sent malformed JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("encoder_id") || !doc["encoder_id"].is_string() || !doc.contains("dim") ||
        !doc["dim"].is_number_integer() || !doc.contains("embedding") || !doc["embedding"].is_array())
        throw EncoderProtocolError("encoder at " + endpoint_ +
                                   " response must be {\"encoder_id\": str, \"dim\": int, \"embedding\": [floats]}");
    const auto dim = doc["dim"].get<std::int64_t>();
    const auto &arr = doc["embedding"];
    if (dim <= 0 || static_cast<std::size_t>(dim) != arr.size())
        throw EncoderProtocolError("encoder at " + endpoint_ + " declared dim " + std::to_string(dim) + " but sent " +
                                   std::to_string(arr.size()) + " values");
    std::vector<double> values;
    values.reserve(arr.size());
    for (const auto &v : arr) {
        if (v.is_null()) throw EncoderValueError("encoder at " + endpoint_ + " sent a non-finite value");
        if (!v.is_number()) throw EncoderProtocolError("encoder at " + endpoint_ + " sent a non-numeric value");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw EncoderValueError("encoder at " + endpoint_ + " sent a non-finite value");
        values.push_back(d);
    }
    try {
        values = l2_normalized(std::move(values));
    } catch (const EncoderValueError &e) {
        throw EncoderValueError("encoder at " + endpoint_ + ": " + e.what());
    }
    return {std::move(values), doc["encoder_id"].get<std::string>()};
}

std::unique_ptr<Encoder> make_encoder(const std::string &choice) {
    if (choice.empty() || choice == "builtin") return std::make_unique<BuiltinEncoder>();
    if (choice.rfind("http://", 0) == 0) return std::make_unique<HttpEncoder>(choice);
    throw ValidationError("encoder must be \"builtin\" or an http:// URL (got \"" + choice + "\")");
}

double similarity_percent(const Embedding &a, const Embedding &b) {
    if (a.dim() != b.dim())
        throw MismatchError("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
    if (a.encoder_id != b.encoder_id)
        throw MismatchError("embeddings come from different encoders: " + a.encoder_id + " vs " + b.encoder_id);
    double d = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) d += a.values[i] * b.values[i];
    return 100.0 * std::clamp(d, 0.0, 1.0);
}

SimilarityReport compare_report(const DisplayImage &reference,
                                const std::vector<std::pair<std::string, DisplayImage>> &candidates,
                                const Encoder &encoder, std::string reference_label) {
    if (candidates.empty()) throw PreconditionError("compare_report needs at least one candidate");
    SimilarityReport report;
    report.reference_label = std::move(reference_label);
    const Embedding ref = encoder.encode(reference);
    report.encoder_id = ref.encoder_id;
    for (const auto &[label, img] : candidates) {
        Embedding e;
        try {
            e = encoder.encode(img);
        } catch (const EncoderConnectionError &err) {
            rethrow_labeled(err, label);
        } catch (const EncoderProtocolError &err) {
            rethrow_labeled(err, label);
        } catch (const EncoderValueError &err) {
            rethrow_labeled(err, label);
        } catch (const PreconditionError &err) {
            rethrow_labeled(err, label);
        }
        report.rows.push_back({label, similarity_percent(ref, e)});
    }
    return report;
}

}  // namespace twinlight
