// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "twinlight/image.hpp"

namespace twinlight {

/// Unit-norm image feature vector tagged with the encoder that produced it.
struct Embedding {
    std::vector<double> values;
    std::string encoder_id;

    std::size_t dim() const { return values.size(); }
};

/// Scales `values` to unit L2 norm. Throws EncoderValueError for a zero or non-finite vector.
std::vector<double> l2_normalized(std::vector<double> values);

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual Embedding encode(const DisplayImage &img) const = 0;
    virtual std::string id() const = 0;
};

inline constexpr int kBuiltinGrid = 8;
inline constexpr int kBuiltinCell = 8;
inline constexpr int kBuiltinFeaturesPerCell = 8;
inline constexpr int kBuiltinOrientationBins = 5;
inline constexpr int kBuiltinDim = kBuiltinGrid * kBuiltinGrid * kBuiltinFeaturesPerCell;  // 512

/// Deterministic hand-built perceptual encoder.
///
/// The image is resized bilinearly to 64x64 and cut into an 8x8 grid of 8x8-pixel cells.
/// Each cell contributes [mean luma, mean red-opponent, mean blue-opponent, 5-bin
/// magnitude-weighted gradient-orientation histogram of luma]; the 512 values are
/// L2-normalized.
class BuiltinEncoder final : public Encoder {
public:
    Embedding encode(const DisplayImage &img) const override;
    std::string id() const override { return "builtin-grid-v1"; }

    /// The 512 features before normalization. Exposed for tests.
    static std::vector<double> raw_features(const DisplayImage &img);
};

/// Remote encoder speaking the /embed wire protocol:
///   POST {endpoint}/embed, Content-Type: image/png, body = PNG bytes
///   200 -> {"encoder_id": str, "dim": int, "embedding": [floats]}
class HttpEncoder final : public Encoder {
public:
    /// `endpoint` is "http://host:port" (a trailing slash or path prefix is allowed).
    explicit HttpEncoder(std::string endpoint, double timeout_s = 30.0);

    Embedding encode(const DisplayImage &img) const override;
    /// The id the remote reports is only known per response; this names the endpoint.
    std::string id() const override { return "external:" + endpoint_; }
    const std::string &endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    double timeout_s_;
};

/// "builtin" or an http(s) URL.
std::unique_ptr<Encoder> make_encoder(const std::string &choice);

/// 100 * max(0, a . b). Throws MismatchError on dimension or encoder mismatch.
double similarity_percent(const Embedding &a, const Embedding &b);

struct SimilarityRow {
    std::string label;
    double percent = 0.0;
};

struct SimilarityReport {
    std::string reference_label;
    std::string encoder_id;
    std::vector<SimilarityRow> rows;
};

/// Scores each candidate against the reference, in input order. Encoder failures are
/// rethrown as the same error type with the failing label prepended.
SimilarityReport compare_report(const DisplayImage &reference,
                                const std::vector<std::pair<std::string, DisplayImage>> &candidates,
                                const Encoder &encoder, std::string reference_label = "reference");

}  // namespace twinlight
