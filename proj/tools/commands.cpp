// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "twinlight/calibration.hpp"
#include "twinlight/color.hpp"
#include "twinlight/error.hpp"
#include "twinlight/render.hpp"
#include "twinlight/service.hpp"
#include "twinlight/similarity.hpp"

namespace twinlight::cli {

namespace {

// CLIP percentages reported for the original office photo and renders; shown for context only.
constexpr double kPublishedB = 77.168;
constexpr double kPublishedC = 78.427;
constexpr double kPublishedD = 87.665;

class InputError : public Error {
public:
    using Error::Error;
};

void parse_size(const std::string &text, int &w, int &h) {
    int a = 0, b = 0;
    char x = 0, extra = 0;
    std::istringstream in(text);
    if (!(in >> a >> x >> b) || (x != 'x' && x != 'X') || (in >> extra) || a <= 0 || b <= 0)
        throw InputError("--size must look like WIDTHxHEIGHT (got \"" + text + "\")");
    w = a;
    h = b;
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw Error("write failed for " + path);
}

DisplayImage load_image_input(const std::string &path) {
    try {
        return read_png_file(path);
    } catch (const ImageError &e) {
        throw InputError(e.what());
    }
}

std::string camera_or_first(const Scene &s, const std::string &camera) {
    return camera.empty() ? s.cameras.front().id : camera;
}

std::string fmt_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

TableReport run_table(const TableOptions &opts) {
    const Scene scene = load_scene_file(opts.scene_path);
    const DisplayImage reference = load_image_input(opts.reference_path);
    const std::string camera = camera_or_first(scene, opts.camera_id);
    const auto encoder = make_encoder(opts.encoder);

    std::vector<std::pair<std::string, DisplayImage>> candidates;
    for (Condition c : {Condition::B, Condition::C, Condition::D}) {
        auto [variant, flags] = fidelity_preset(scene, c);
        RenderRequest req{camera, opts.width, opts.height, opts.spp, opts.seed, flags};
        const Camera *cam = variant.find_camera(camera);
        if (!cam) throw RenderError("unknown camera '" + camera + "'");
        candidates.emplace_back(to_string(c), tonemap(render(variant, req), cam->exposure_ev));
    }
    const SimilarityReport sim = compare_report(reference, candidates, *encoder, opts.reference_path);

    TableReport report;
    report.encoder_id = sim.encoder_id;
    report.scene_path = opts.scene_path;
    report.reference_path = opts.reference_path;
    const double published[3] = {kPublishedB, kPublishedC, kPublishedD};
    const Condition conds[3] = {Condition::B, Condition::C, Condition::D};
    for (int i = 0; i < 3; ++i)
        report.rows.push_back({conds[i], describe(conds[i]), sim.rows[i].percent, published[i]});
    return report;
}

nlohmann::json table_to_json(const TableReport &report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &r : report.rows)
        rows.push_back({{"condition", to_string(r.condition)},
                        {"description", r.description},
                        {"percent", r.percent},
                        {"published_clip_percent", r.published_percent}});
    return {{"encoder_id", report.encoder_id},
            {"scene", report.scene_path},
            {"reference", report.reference_path},
            {"rows", rows}};
}

std::string table_to_text(const TableReport &report) {
    std::ostringstream out;
    out << "Twin similarity per lighting condition (encoder: " << report.encoder_id << ")\n";
    out << std::left << std::setw(10) << "condition" << std::setw(44) << "description" << std::right << std::setw(10)
        << "percent" << std::setw(16) << "published*" << "\n";
    for (const auto &r : report.rows)
        out << std::left << std::setw(10) << to_string(r.condition) << std::setw(44) << r.description << std::right
            << std::setw(10) << fmt_percent(r.percent) << std::setw(16) << fmt_percent(r.published_percent) << "\n";
    out << "* published CLIP percentages for the original office photo and renders; they depend on those\n"
           "  assets and that encoder and are listed for context, not as expected output.\n";
    return out.str();
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"twinlight: digital-twin lighting renderer, similarity scoring and calibration", "twinlight"};
    app.require_subcommand(1);

    std::string scene_path, out_path, camera, size = "128x128", encoder = "builtin";
    std::uint64_t seed = 1;
    int spp = 16;

    // render
    auto *render_cmd = app.add_subcommand("render", "Render a scene to a tonemapped PNG");
    std::string condition;
    bool no_indirect = false, no_shadows = false;
    int max_bounces = 4;
    double noise = 0.0;
    std::uint64_t noise_seed = 0;
    render_cmd->add_option("--scene", scene_path, "Scene document")->required();
    render_cmd->add_option("--camera", camera, "Camera id (default: first camera)");
    render_cmd->add_option("--size", size, "WIDTHxHEIGHT")->capture_default_str();
    render_cmd->add_option("--spp", spp, "Samples per pixel")->capture_default_str();
    render_cmd->add_option("--seed", seed, "Render seed")->capture_default_str();
    render_cmd->add_option("--condition", condition, "Fidelity condition B, C or D");
    render_cmd->add_flag("--no-indirect", no_indirect, "Disable bounce lighting");
    render_cmd->add_flag("--no-shadows", no_shadows, "Disable occlusion on direct lighting");
    render_cmd->add_option("--max-bounces", max_bounces, "Path vertices gathering direct light")->capture_default_str();
    render_cmd->add_option("--noise", noise, "Gaussian sensor noise sigma in 8-bit levels");
    render_cmd->add_option("--noise-seed", noise_seed, "Seed for --noise");
    render_cmd->add_option("--out", out_path, "Output PNG")->required();

    // table
    auto *table_cmd = app.add_subcommand("table", "Score conditions B, C, D against a reference photo");
    std::string reference_path;
    int table_spp = 64;
    table_cmd->add_option("--scene", scene_path, "Scene document")->required();
    table_cmd->add_option("--reference", reference_path, "Reference photo (PNG)")->required();
    table_cmd->add_option("--camera", camera, "Camera id (default: first camera)");
    table_cmd->add_option("--size", size, "Render size WIDTHxHEIGHT")->capture_default_str();
    table_cmd->add_option("--spp", table_spp, "Samples per pixel")->capture_default_str();
    table_cmd->add_option("--seed", seed, "Render seed")->capture_default_str();
    table_cmd->add_option("--encoder", encoder, "builtin or http://host:port")->capture_default_str();
    table_cmd->add_option("--out", out_path, "Machine-readable report (JSON)");

    // calibrate
    auto *cal_cmd = app.add_subcommand("calibrate", "Tune fixture parameters to match a reference photo");
    std::vector<std::string> param_specs;
    std::int64_t budget = 200;
    int restarts = 1;
    std::string cal_size = "64x64";
    int cal_spp = 16;
    std::uint64_t render_seed = 0;
    cal_cmd->add_option("--scene", scene_path, "Scene document")->required();
    cal_cmd->add_option("--reference", reference_path, "Reference photo (PNG)")->required();
    cal_cmd->add_option("--camera", camera, "Camera id (default: first camera)");
    cal_cmd->add_option("--param", param_specs,
                        "fixture:<id>:dimmer|cct_k:<lo>:<hi> or camera:<id>:exposure_ev:<lo>:<hi>")
        ->required();
    cal_cmd->add_option("--budget", budget, "Maximum objective evaluations")->capture_default_str();
    cal_cmd->add_option("--seed", seed, "Restart seed")->capture_default_str();
    cal_cmd->add_option("--restarts", restarts, "Number of simplex starts")->capture_default_str();
    cal_cmd->add_option("--size", cal_size, "Evaluation render size")->capture_default_str();
    cal_cmd->add_option("--spp", cal_spp, "Evaluation samples per pixel")->capture_default_str();
    cal_cmd->add_option("--render-seed", render_seed, "Fixed render seed for every evaluation")->capture_default_str();
    cal_cmd->add_option("--encoder", encoder, "builtin or http://host:port")->capture_default_str();
    cal_cmd->add_option("--out", out_path, "Result + trace (JSON)");

    // similarity
    auto *sim_cmd = app.add_subcommand("similarity", "Score images against a reference");
    std::vector<std::string> images;
    sim_cmd->add_option("--reference", reference_path, "Reference image (PNG)")->required();
    sim_cmd->add_option("--image", images, "Candidate image (PNG), repeatable")->required();
    sim_cmd->add_option("--encoder", encoder, "builtin or http://host:port")->capture_default_str();
    sim_cmd->add_option("--out", out_path, "Machine-readable report (JSON)");

    // serve
    auto *serve_cmd = app.add_subcommand("serve", "Run the live-steering HTTP service");
    std::string bind = "127.0.0.1:7878";
    unsigned workers = 0;
    serve_cmd->add_option("--scene", scene_path, "Scene document")->required();
    serve_cmd->add_option("--bind", bind, "HOST:PORT")->capture_default_str();
    serve_cmd->add_option("--workers", workers, "Render workers (default: core count)");
    serve_cmd->add_option("--encoder", encoder, "builtin or http://host:port")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*render_cmd) {
            int w = 0, h = 0;
            parse_size(size, w, h);
            Scene scene = load_scene_file(scene_path);
            RenderFlags flags;
            flags.max_bounces = max_bounces;
            if (!condition.empty()) {
                Condition c;
                try {
                    c = parse_condition(condition);
                } catch (const ValidationError &e) {
                    throw InputError(e.what());
                }
                auto [variant, preset] = fidelity_preset(scene, c, flags);
                scene = std::move(variant);
                flags = preset;
            }
            if (no_indirect) flags.indirect = false;
            if (no_shadows) flags.shadows = false;
            const std::string cam = camera_or_first(scene, camera);
            const RenderRequest req{cam, w, h, spp, seed, flags};
            const ImageBuffer hdr = render(scene, req);
            DisplayImage img = tonemap(hdr, scene.find_camera(cam)->exposure_ev);
            if (noise > 0.0) img = add_sensor_noise(img, noise, noise_seed);
            write_png_file(out_path, img);
            out << "wrote " << out_path << " (" << w << "x" << h << ", " << spp << " spp)\n";
            return kExitOk;
        }

        if (*table_cmd) {
            TableOptions opts;
            opts.scene_path = scene_path;
            opts.reference_path = reference_path;
            opts.camera_id = camera;
            parse_size(size, opts.width, opts.height);
            opts.spp = table_spp;
            opts.seed = seed;
            opts.encoder = encoder;
            const TableReport report = run_table(opts);
            out << table_to_text(report);
            if (!out_path.empty()) write_text(out_path, table_to_json(report).dump(2) + "\n");
            return kExitOk;
        }

        if (*cal_cmd) {
            CalibrationProblem problem;
            problem.scene = load_scene_file(scene_path);
            problem.reference = load_image_input(reference_path);
            problem.camera_id = camera_or_first(problem.scene, camera);
            for (const auto &spec : param_specs) {
                try {
                    problem.params.push_back(parse_parameter_spec(spec));
                } catch (const ValidationError &e) {
                    throw InputError(e.what());
                }
            }
            int w = 0, h = 0;
            parse_size(cal_size, w, h);
            problem.quality = {problem.camera_id, w, h, cal_spp, render_seed, {}};
            problem.encoder = make_encoder(encoder);
            const CalibrationResult result = calibrate(problem, budget, seed, restarts);
            out << "best percent: " << std::setprecision(6) << std::fixed << result.best_percent << "\n";
            for (std::size_t i = 0; i < problem.params.size(); ++i)
                out << "  " << describe(problem.params[i]) << " = " << result.best_params[i] << "\n";
            out << "evaluations: " << result.evals_used << "\n";
            if (!out_path.empty()) {
                auto j = result_to_json(result, problem.params);
                j["scene"] = scene_path;
                j["reference"] = reference_path;
                j["camera_id"] = problem.camera_id;
                j["budget"] = budget;
                j["seed"] = seed;
                j["restarts"] = restarts;
                write_text(out_path, j.dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*sim_cmd) {
            const DisplayImage reference = load_image_input(reference_path);
            std::vector<std::pair<std::string, DisplayImage>> candidates;
            for (const auto &p : images) candidates.emplace_back(p, load_image_input(p));
            const auto enc = make_encoder(encoder);
            const SimilarityReport report = compare_report(reference, candidates, *enc, reference_path);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto &r : report.rows) {
                out << fmt_percent(r.percent) << "  " << r.label << "\n";
                rows.push_back({{"label", r.label}, {"percent", r.percent}});
            }
            if (!out_path.empty())
                write_text(out_path, nlohmann::json{{"reference", reference_path},
                                                    {"encoder_id", report.encoder_id},
                                                    {"rows", rows}}
                                             .dump(2) +
                                         "\n");
            return kExitOk;
        }

        if (*serve_cmd) {
            serve(scene_path, bind, workers, encoder);
            return kExitOk;
        }
    } catch (const ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError &e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InputError &e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitInput;
}

}  // namespace twinlight::cli
