// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twinlight/error.hpp"
#include "twinlight/image.hpp"
#include "twinlight/render.hpp"
#include "twinlight/scene.hpp"
#include "twinlight/similarity.hpp"

namespace twinlight {

enum class ParameterField { Dimmer, CctK, ExposureEv };

/// One tunable axis: a fixture's dimmer or CCT, or the calibration camera's exposure.
struct ParameterSpec {
    ParameterField field = ParameterField::Dimmer;
    std::string target_id;  // fixture id, or camera id for ExposureEv
    double lower = 0.0;
    double upper = 1.0;

    bool operator==(const ParameterSpec &) const = default;
};

const char *to_string(ParameterField f);
std::string describe(const ParameterSpec &p);

/// "fixture:<id>:dimmer:<lo>:<hi>", "fixture:<id>:cct_k:<lo>:<hi>" or "camera:<id>:exposure_ev:<lo>:<hi>".
ParameterSpec parse_parameter_spec(std::string_view text);
/// {"fixture_id"|"camera_id": str, "field": str, "lower": num, "upper": num}
ParameterSpec parameter_spec_from_json(const nlohmann::json &j);
nlohmann::json parameter_spec_to_json(const ParameterSpec &p);

struct CalibrationProblem {
    Scene scene;
    std::string camera_id;
    DisplayImage reference;
    std::vector<ParameterSpec> params;
    RenderRequest quality;  // camera_id is overridden; the seed stays fixed for every evaluation
    std::shared_ptr<const Encoder> encoder;
    RenderOptions render_options;
};

/// Throws ValidationError for an ill-formed problem (unknown targets, bad bounds, duplicates).
void validate(const CalibrationProblem &problem);

/// Copy of the scene with `x` written into the targeted fields.
Scene apply_parameters(const CalibrationProblem &problem, const std::vector<double> &x);

/// Similarity percent of the render at `x` against the reference. Holds the reference
/// embedding so repeated evaluations only encode the render.
class Objective {
public:
    explicit Objective(const CalibrationProblem &problem);
    /// Throws PreconditionError for wrong arity or out-of-bounds x.
    double operator()(const std::vector<double> &x) const;
    DisplayImage render_at(const std::vector<double> &x) const;

private:
    const CalibrationProblem &problem_;
    Embedding reference_;
};

double objective(const CalibrationProblem &problem, const std::vector<double> &x);

struct TraceEntry {
    std::int64_t eval_index = 0;
    double percent = 0.0;
    std::vector<double> params;
    int restart = 0;
};

struct CalibrationResult {
    std::vector<double> best_params;
    double best_percent = 0.0;
    int best_restart = 0;
    std::vector<TraceEntry> trace;
    std::int64_t evals_used = 0;
};

/// Raised when an evaluation fails; carries the trace gathered so far.
class CalibrationError : public Error {
public:
    CalibrationError(const std::string &what, CalibrationResult partial)
        : Error(what), partial_(std::move(partial)) {}
    const CalibrationResult &partial() const noexcept { return partial_; }

private:
    CalibrationResult partial_;
};

struct CalibrateOptions {
    bool parallel_restarts = false;
    /// Called after every evaluation with the restart-local entry. May be called from
    /// several threads when restarts run in parallel.
    std::function<void(const TraceEntry &)> on_eval;
};

/// Bounded Nelder-Mead over a per-axis logistic map of the box, with `restarts` starts
/// (box centre first, the rest drawn from `seed`) sharing the budget evenly. The best
/// evaluation wins; ties go to the lower restart index, then the earlier evaluation.
/// Throws PreconditionError if budget < 10 * |params| or restarts < 1.
CalibrationResult calibrate(const CalibrationProblem &problem, std::int64_t budget, std::uint64_t seed, int restarts,
                            const CalibrateOptions &options = {});

nlohmann::json result_to_json(const CalibrationResult &r, const std::vector<ParameterSpec> &params);

}  // namespace twinlight
