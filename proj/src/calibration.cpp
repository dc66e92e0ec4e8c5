// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include "twinlight/color.hpp"
#include "twinlight/rng.hpp"

namespace twinlight {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double u) { return std::log(u / (1.0 - u)); }

double parse_double(std::string_view s, std::string_view what) {
    std::string buf(s);
    char *end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size())
        throw ValidationError("parameter spec: " + std::string(what) + " \"" + buf + "\" is not a number");
    return v;
}

// Unbounded simplex coordinates <-> box.
struct BoxMap {
    const std::vector<ParameterSpec> &params;

    std::vector<double> to_box(const std::vector<double> &z) const {
        std::vector<double> x(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            x[i] = std::clamp(params[i].lower + (params[i].upper - params[i].lower) * logistic(z[i]), params[i].lower,
                              params[i].upper);
        return x;
    }
};

struct RestartOutcome {
    std::vector<TraceEntry> trace;
    std::exception_ptr error;
};

class SimplexRun {
public:
    SimplexRun(const Objective &f, const BoxMap &map, int restart, std::int64_t budget,
               const std::function<void(const TraceEntry &)> &on_eval)
        : f_(f), map_(map), restart_(restart), budget_(budget), on_eval_(on_eval) {}

    // Minimizes -percent from z0. Stops on budget exhaustion or simplex collapse.
    void run(std::vector<double> z0, RestartOutcome &out) {
        out_ = &out;
        const std::size_t n = z0.size();
        constexpr double kStep = 1.0;
        std::vector<std::vector<double>> pts{z0};
        for (std::size_t i = 0; i < n; ++i) {
            auto p = z0;
            p[i] += kStep;
            pts.push_back(std::move(p));
        }
        std::vector<double> vals;
        for (const auto &p : pts) {
            auto v = eval(p);
            if (!v) return;
            vals.push_back(*v);
        }

        while (true) {
            std::vector<std::size_t> order(n + 1);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
            {
                std::vector<std::vector<double>> p2;
                std::vector<double> v2;
                for (auto k : order) {
                    p2.push_back(pts[k]);
                    v2.push_back(vals[k]);
                }
                pts = std::move(p2);
                vals = std::move(v2);
            }
            double size = 0.0;
            for (std::size_t k = 1; k <= n; ++k)
                for (std::size_t i = 0; i < n; ++i) size = std::max(size, std::abs(pts[k][i] - pts[0][i]));
            if (size < 1e-6 && vals[n] - vals[0] < 1e-9) return;

            std::vector<double> centroid(n, 0.0);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / static_cast<double>(n);
            auto along = [&](double t) {
                std::vector<double> p(n);
                for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (pts[n][i] - centroid[i]);
                return p;
            };

            const auto xr = along(-1.0);
            const auto fr = eval(xr);
            if (!fr) return;
            if (*fr < vals[0]) {
                const auto xe = along(-2.0);
                const auto fe = eval(xe);
                if (!fe) return;
                if (*fe < *fr) {
                    pts[n] = xe;
                    vals[n] = *fe;
                } else {
                    pts[n] = xr;
                    vals[n] = *fr;
                }
                continue;
            }
            if (*fr < vals[n - 1]) {
                pts[n] = xr;
                vals[n] = *fr;
                continue;
            }
            const bool outside = *fr < vals[n];
            const auto xc = along(outside ? -0.5 : 0.5);
            const auto fc = eval(xc);
            if (!fc) return;
            if (*fc < (outside ? *fr : vals[n])) {
                pts[n] = xc;
                vals[n] = *fc;
                continue;
            }
            for (std::size_t k = 1; k <= n; ++k) {
                for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[0][i] + 0.5 * (pts[k][i] - pts[0][i]);
                const auto v = eval(pts[k]);
                if (!v) return;
                vals[k] = *v;
            }
        }
    }

private:
    // Returns -percent, or nullopt when the budget is spent or the objective failed.
    std::optional<double> eval(const std::vector<double> &z) {
        if (static_cast<std::int64_t>(out_->trace.size()) >= budget_ || out_->error) return std::nullopt;
        const auto x = map_.to_box(z);
        try {
            TraceEntry e{static_cast<std::int64_t>(out_->trace.size()), f_(x), x, restart_};
            if (on_eval_) on_eval_(e);
            out_->trace.push_back(e);
            return -e.percent;
        } catch (...) {
            out_->error = std::current_exception();
            return std::nullopt;
        }
    }

    const Objective &f_;
    const BoxMap &map_;
    int restart_;
    std::int64_t budget_;
    const std::function<void(const TraceEntry &)> &on_eval_;
    RestartOutcome *out_ = nullptr;
};

CalibrationResult merge(std::vector<RestartOutcome> &outcomes) {
    CalibrationResult r;
    bool have = false;
    for (auto &o : outcomes) {
        for (auto &e : o.trace) {
            e.eval_index = static_cast<std::int64_t>(r.trace.size());
            if (!have || e.percent > r.best_percent) {
                have = true;
                r.best_percent = e.percent;
                r.best_params = e.params;
                r.best_restart = e.restart;
            }
            r.trace.push_back(e);
        }
    }
    r.evals_used = static_cast<std::int64_t>(r.trace.size());
    return r;
}

}  // namespace

const char *to_string(ParameterField f) {
    switch (f) {
        case ParameterField::Dimmer: return "dimmer";
        case ParameterField::CctK: return "cct_k";
        case ParameterField::ExposureEv: return "exposure_ev";
    }
    return "?";
}

std::string describe(const ParameterSpec &p) {
    return std::string(p.field == ParameterField::ExposureEv ? "camera:" : "fixture:") + p.target_id + ":" +
           to_string(p.field);
}

// Bounds ordering and the field's legal range; targets are checked against a scene later.
static void check_bounds(const ParameterSpec &p) {
    const std::string who = describe(p);
    if (!(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower < p.upper))
        throw ValidationError(who + ": lower must be < upper", p.target_id);
    if (p.field == ParameterField::Dimmer && (p.lower < 0.0 || p.upper > 1.0))
        throw ValidationError(who + ": bounds must lie in [0,1]", p.target_id);
    if (p.field == ParameterField::CctK && (p.lower < kMinCctK || p.upper > kMaxCctK))
        throw ValidationError(who + ": bounds must lie in [1667, 25000]", p.target_id);
}

ParameterSpec parse_parameter_spec(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = text.find(':', start);
        parts.push_back(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    if (parts.size() != 5)
        throw ValidationError("parameter spec \"" + std::string(text) +
                              "\" must look like fixture:<id>:dimmer|cct_k:<lo>:<hi> or camera:<id>:exposure_ev:<lo>:<hi>");
    ParameterSpec p;
    p.target_id = std::string(parts[1]);
    if (parts[0] == "fixture" && parts[2] == "dimmer")
        p.field = ParameterField::Dimmer;
    else if (parts[0] == "fixture" && parts[2] == "cct_k")
        p.field = ParameterField::CctK;
    else if (parts[0] == "camera" && parts[2] == "exposure_ev")
        p.field = ParameterField::ExposureEv;
    else
        throw ValidationError("parameter spec \"" + std::string(text) + "\": unsupported target/field");
    p.lower = parse_double(parts[3], "lower bound");
    p.upper = parse_double(parts[4], "upper bound");
    check_bounds(p);
    return p;
}

ParameterSpec parameter_spec_from_json(const nlohmann::json &j) {
    if (!j.is_object() || !j.contains("field") || !j["field"].is_string() || !j.contains("lower") ||
        !j["lower"].is_number() || !j.contains("upper") || !j["upper"].is_number())
        throw ValidationError("parameter spec must be {fixture_id|camera_id, field, lower, upper}");
    ParameterSpec p;
    const auto field = j["field"].get<std::string>();
    const char *key = "fixture_id";
    if (field == "dimmer")
        p.field = ParameterField::Dimmer;
    else if (field == "cct_k")
        p.field = ParameterField::CctK;
    else if (field == "exposure_ev") {
        p.field = ParameterField::ExposureEv;
        key = "camera_id";
    } else
        throw ValidationError("parameter spec: unknown field \"" + field + "\"");
    if (!j.contains(key) || !j[key].is_string())
        throw ValidationError(std::string("parameter spec for ") + field + " needs a string \"" + key + "\"");
    p.target_id = j[key].get<std::string>();
    p.lower = j["lower"].get<double>();
    p.upper = j["upper"].get<double>();
    check_bounds(p);
    return p;
}

nlohmann::json parameter_spec_to_json(const ParameterSpec &p) {
    return {{p.field == ParameterField::ExposureEv ? "camera_id" : "fixture_id", p.target_id},
            {"field", to_string(p.field)},
            {"lower", p.lower},
            {"upper", p.upper}};
}

void validate(const CalibrationProblem &problem) {
    if (!problem.scene.find_camera(problem.camera_id))
        throw ValidationError("unknown camera '" + problem.camera_id + "'", problem.camera_id);
    if (problem.params.empty()) throw ValidationError("calibration needs at least one parameter");
    if (!problem.encoder) throw ValidationError("calibration needs an encoder");
    std::set<std::pair<std::string, ParameterField>> seen;
    for (const auto &p : problem.params) {
        const std::string who = describe(p);
        if (!seen.emplace(p.target_id, p.field).second) throw ValidationError(who + ": duplicate target", p.target_id);
        check_bounds(p);
        switch (p.field) {
            case ParameterField::Dimmer:
                if (!problem.scene.find_fixture(p.target_id))
                    throw ValidationError(who + ": unknown fixture", p.target_id);
                break;
            case ParameterField::CctK:
                if (!problem.scene.find_fixture(p.target_id))
                    throw ValidationError(who + ": unknown fixture", p.target_id);
                break;
            case ParameterField::ExposureEv:
                if (p.target_id != problem.camera_id)
                    throw ValidationError(who + ": exposure target must be the calibration camera", p.target_id);
                break;
        }
    }
}

Scene apply_parameters(const CalibrationProblem &problem, const std::vector<double> &x) {
    if (x.size() != problem.params.size())
        throw PreconditionError("parameter vector has " + std::to_string(x.size()) + " entries, expected " +
                                std::to_string(problem.params.size()));
    Scene s = problem.scene;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto &p = problem.params[i];
        if (!(x[i] >= p.lower && x[i] <= p.upper))
            throw PreconditionError(describe(p) + " = " + std::to_string(x[i]) + " is outside its bounds");
        if (p.field == ParameterField::ExposureEv) {
            for (auto &c : s.cameras)
                if (c.id == p.target_id) c.exposure_ev = x[i];
            continue;
        }
        for (auto &f : s.fixtures) {
            if (f.id != p.target_id) continue;
            if (p.field == ParameterField::Dimmer) {
                f.dimmer = x[i];
            } else {
                f.cct_k = x[i];
                f.color_rgb.reset();
            }
        }
    }
    return s;
}

Objective::Objective(const CalibrationProblem &problem) : problem_(problem) {
    validate(problem);
    reference_ = problem.encoder->encode(problem.reference);
}

DisplayImage Objective::render_at(const std::vector<double> &x) const {
    const Scene s = apply_parameters(problem_, x);
    RenderRequest req = problem_.quality;
    req.camera_id = problem_.camera_id;
    return tonemap(render(s, req, problem_.render_options), s.find_camera(problem_.camera_id)->exposure_ev);
}

double Objective::operator()(const std::vector<double> &x) const {
    return similarity_percent(reference_, problem_.encoder->encode(render_at(x)));
}

double objective(const CalibrationProblem &problem, const std::vector<double> &x) { return Objective(problem)(x); }

CalibrationResult calibrate(const CalibrationProblem &problem, std::int64_t budget, std::uint64_t seed, int restarts,
                            const CalibrateOptions &options) {
    const auto n = static_cast<std::int64_t>(problem.params.size());
    if (restarts < 1) throw PreconditionError("restarts must be >= 1");
    if (n == 0) throw ValidationError("calibration needs at least one parameter");
    if (budget < 10 * n)
        throw PreconditionError("budget too small: " + std::to_string(budget) + " < 10 x " + std::to_string(n) +
                                " parameters");
    const Objective f(problem);
    const BoxMap map{problem.params};

    // Starting points are drawn up front so restarts are independent of scheduling.
    std::vector<std::vector<double>> starts;
    SplitMix rng(mix64(seed ^ 0xca11b4a7e5eedULL));
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> z(static_cast<std::size_t>(n), 0.0);
        if (r > 0)
            for (auto &zi : z) zi = logit(0.05 + 0.9 * rng.next_double());
        starts.push_back(std::move(z));
    }
    std::vector<std::int64_t> share(restarts, budget / restarts);
    for (std::int64_t r = 0; r < budget % restarts; ++r) ++share[r];

    std::vector<RestartOutcome> outcomes(restarts);
    auto run_one = [&](int r) { SimplexRun(f, map, r, share[r], options.on_eval).run(starts[r], outcomes[r]); };
    if (options.parallel_restarts && restarts > 1) {
        std::vector<std::jthread> pool;
        for (int r = 0; r < restarts; ++r) pool.emplace_back(run_one, r);
    } else {
        for (int r = 0; r < restarts; ++r) {
            run_one(r);
            if (outcomes[r].error) break;
        }
    }

    for (auto &o : outcomes) {
        if (!o.error) continue;
        std::string what = "calibration evaluation failed";
        try {
            std::rethrow_exception(o.error);
        } catch (const std::exception &e) {
            what += std::string(": ") + e.what();
        } catch (...) {
        }
        // Only restarts up to and including the failing one are part of the partial trace.
        const auto failed = static_cast<std::size_t>(&o - outcomes.data());
        outcomes.resize(failed + 1);
        throw CalibrationError(what, merge(outcomes));
    }
    return merge(outcomes);
}

nlohmann::json result_to_json(const CalibrationResult &r, const std::vector<ParameterSpec> &params) {
    nlohmann::json ps = nlohmann::json::array();
    for (const auto &p : params) ps.push_back(parameter_spec_to_json(p));
    nlohmann::json trace = nlohmann::json::array();
    for (const auto &e : r.trace)
        trace.push_back({{"eval_index", e.eval_index}, {"percent", e.percent}, {"params", e.params}, {"restart", e.restart}});
    return {{"params", ps},
            {"best_params", r.best_params},
            {"best_percent", r.best_percent},
            {"best_restart", r.best_restart},
            {"evals_used", r.evals_used},
            {"trace", trace}};
}

}  // namespace twinlight
