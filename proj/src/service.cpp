// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/service.hpp"

// The library default of 5 drops connections when clients burst in under load.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>

#include <chrono>
#include <csignal>
#include <iostream>

#include "twinlight/color.hpp"
#include "twinlight/error.hpp"
#include "twinlight/json_io.hpp"

namespace twinlight {

using nlohmann::json;

namespace {

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

void reply_json(httplib::Response &res, int status, const json &body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response &res, int status, const std::string &message) {
    reply_json(res, status, {{"error", message}});
}

std::optional<json> parse_body(const httplib::Request &req, httplib::Response &res) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error &e) {
        reply_error(res, 400, std::string("malformed JSON body: ") + e.what());
        return std::nullopt;
    }
}

// Maps library errors onto HTTP statuses.
template <typename F>
void guarded(httplib::Response &res, F &&body) {
    try {
        body();
    } catch (const NotFoundError &e) {
        reply_error(res, 404, e.what());
    } catch (const ValidationError &e) {
        reply_error(res, 422, e.what());
    } catch (const PreconditionError &e) {
        reply_error(res, 422, e.what());
    } catch (const RenderError &e) {
        reply_error(res, 422, e.what());
    } catch (const ImageError &e) {
        reply_error(res, 422, e.what());
    } catch (const EncoderError &e) {
        reply_error(res, 502, e.what());
    } catch (const json::exception &e) {
        reply_error(res, 422, e.what());
    } catch (const std::exception &e) {
        reply_error(res, 500, e.what());
    }
}

class ConflictError : public Error {
public:
    using Error::Error;
};

class ShutdownError : public Error {
public:
    using Error::Error;
};

int get_int(const json &j, const char *key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ValidationError(std::string("\"") + key + "\" must be an integer");
    return j[key].get<int>();
}

std::uint64_t get_u64(const json &j, const char *key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<std::int64_t>() >= 0))
        throw ValidationError(std::string("\"") + key + "\" must be a non-negative integer");
    return j[key].get<std::uint64_t>();
}

}  // namespace

// ---- WorkerPool ----

WorkerPool::WorkerPool(unsigned workers) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    for (unsigned i = 0; i < workers; ++i) {
        threads_.emplace_back([this] {
            while (true) {
                std::function<void()> task;
                {
                    std::unique_lock lock(mu_);
                    cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
                    if (stopping_) return;
                    task = std::move(queue_.front());
                    queue_.pop_front();
                }
                task();
            }
        });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto &t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> task) {
    {
        std::lock_guard lock(mu_);
        queue_.push_back(std::move(task));
    }
    cv_.notify_one();
}

const char *to_string(JobKind k) { return k == JobKind::Render ? "render" : "calibrate"; }

const char *to_string(JobStatus s) {
    switch (s) {
        case JobStatus::Queued: return "queued";
        case JobStatus::Running: return "running";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "?";
}

// ---- Service ----

Service::Service(Scene scene, ServiceConfig config)
    : config_(std::move(config)), encoder_(make_encoder(config_.encoder)), scene_(std::move(scene)) {
    validate(scene_);
    http_ = std::make_unique<httplib::Server>();
    pool_ = std::make_unique<WorkerPool>(config_.workers);
    install_routes();
    std::lock_guard lock(mu_);
    schedule_previews_locked();
}

Service::~Service() {
    stop();
    {
        std::lock_guard lock(mu_);
        shutting_down_ = true;
    }
    pool_.reset();
}

int Service::bind(const std::string &host, int port) {
    int bound = port;
    if (port == 0) {
        bound = http_->bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host + ":0");
    } else if (!http_->bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void Service::listen() { http_->listen_after_bind(); }

int Service::start(const std::string &host, int port) {
    const int bound = bind(host, port);
    listener_ = std::thread([this] { listen(); });
    http_->wait_until_ready();
    return bound;
}

void Service::stop() {
    if (http_) http_->stop();
    if (listener_.joinable()) listener_.join();
}

std::pair<Scene, std::int64_t> Service::snapshot() const {
    std::lock_guard lock(mu_);
    return {scene_, scene_.revision};
}

RenderRequest Service::preview_request(const std::string &camera_id) const {
    RenderRequest req;
    req.camera_id = camera_id;
    req.width = config_.preview_width;
    req.height = config_.preview_height;
    req.spp = config_.preview_spp;
    req.seed = config_.preview_seed;
    return req;
}

void Service::schedule_previews_locked() {
    for (const auto &cam : scene_.cameras) {
        if (!preview_pending_.insert(cam.id).second) continue;  // one queued per camera
        pool_->submit([this, id = cam.id] { render_preview(id); });
    }
}

void Service::render_preview(const std::string &camera_id) {
    Scene snap;
    {
        std::lock_guard lock(mu_);
        preview_pending_.erase(camera_id);
        if (shutting_down_) return;
        snap = scene_;
    }
    const Camera *cam = snap.find_camera(camera_id);
    if (!cam) return;
    DisplayImage img = tonemap(render(snap, preview_request(camera_id), config_.render_options), cam->exposure_ev);
    std::lock_guard lock(mu_);
    store_preview_locked(camera_id, snap.revision, std::move(img));
}

const Service::Preview &Service::store_preview_locked(const std::string &camera_id, std::int64_t revision,
                                                      DisplayImage image) {
    Preview &p = previews_[camera_id];
    if (revision > p.revision) {
        p.revision = revision;
        p.png = encode_png(image);
        p.image = std::move(image);
        preview_cv_.notify_all();
    }
    return p;
}

std::int64_t Service::handle_update(const FixtureUpdate &update) {
    std::lock_guard lock(mu_);
    scene_ = apply_update(scene_, update);
    schedule_previews_locked();
    return scene_.revision;
}

void Service::set_reference(DisplayImage reference) {
    std::lock_guard lock(mu_);
    reference_ = std::move(reference);
    reference_embedding_.reset();
}

std::pair<std::vector<std::uint8_t>, std::int64_t> Service::latest_preview(const std::string &camera_id) {
    std::unique_lock lock(mu_);
    if (!scene_.find_camera(camera_id)) throw NotFoundError("unknown camera '" + camera_id + "'");
    if (previews_[camera_id].revision < 0) {
        schedule_previews_locked();
        preview_cv_.wait(lock, [&] { return previews_[camera_id].revision >= 0 || shutting_down_; });
        if (shutting_down_) throw ShutdownError("service is shutting down");
    }
    const Preview &p = previews_[camera_id];
    return {p.png, p.revision};
}

json Service::handle_similarity(const std::string &camera_id) {
    Scene snap;
    DisplayImage reference;
    std::optional<Embedding> ref_embedding;
    std::optional<DisplayImage> preview;
    {
        std::lock_guard lock(mu_);
        if (!reference_) throw ConflictError("no reference image uploaded");
        if (!scene_.find_camera(camera_id)) throw NotFoundError("unknown camera '" + camera_id + "'");
        snap = scene_;
        reference = *reference_;
        ref_embedding = reference_embedding_;
        auto it = previews_.find(camera_id);
        if (it != previews_.end() && it->second.revision == snap.revision) preview = it->second.image;
    }
    if (!preview) {
        // Stale or missing: render the snapshot now so the score reflects its revision.
        preview = tonemap(render(snap, preview_request(camera_id), config_.render_options),
                          snap.find_camera(camera_id)->exposure_ev);
        std::lock_guard lock(mu_);
        store_preview_locked(camera_id, snap.revision, *preview);
    }
    if (!ref_embedding) {
        ref_embedding = encoder_->encode(reference);
        std::lock_guard lock(mu_);
        if (reference_ && *reference_ == reference) reference_embedding_ = ref_embedding;
    }
    const Embedding e = encoder_->encode(*preview);
    return {{"percent", similarity_percent(*ref_embedding, e)},
            {"encoder_id", e.encoder_id},
            {"scene_revision", snap.revision},
            {"camera_id", camera_id}};
}

std::string Service::new_job_locked(JobKind kind, const std::string &camera_id) {
    JobRecord job;
    job.job_id = "job-" + std::to_string(next_job_++);
    job.kind = kind;
    job.scene_revision = scene_.revision;
    job.camera_id = camera_id;
    job.created_at = now_seconds();
    const std::string id = job.job_id;
    jobs_.emplace(id, std::move(job));
    return id;
}

std::string Service::submit_render(const RenderRequest &req) {
    std::lock_guard lock(mu_);
    const Camera *cam = scene_.find_camera(req.camera_id);
    if (!cam) throw NotFoundError("unknown camera '" + req.camera_id + "'");
    if (req.width < 8 || req.height < 8 || req.spp < 1 || req.flags.max_bounces < 0)
        throw ValidationError("render needs width, height >= 8, spp >= 1 and max_bounces >= 0");
    const auto samples = static_cast<std::uint64_t>(req.width) * req.height * req.spp;
    if (samples > config_.render_options.sample_budget)
        throw ValidationError("sample budget exceeded: " + std::to_string(samples) + " samples");

    const std::string id = new_job_locked(JobKind::Render, req.camera_id);
    pool_->submit([this, id, req, snap = scene_] {
        {
            std::lock_guard lock(mu_);
            JobRecord &job = jobs_.at(id);
            job.status = JobStatus::Running;
            job.started_at = now_seconds();
        }
        std::optional<DisplayImage> img;
        std::vector<std::uint8_t> png;
        std::string error;
        try {
            img = tonemap(render(snap, req, config_.render_options), snap.find_camera(req.camera_id)->exposure_ev);
            png = encode_png(*img);
        } catch (const std::exception &e) {
            error = e.what();
        }
        std::lock_guard lock(mu_);
        JobRecord &job = jobs_.at(id);
        job.finished_at = now_seconds();
        if (img) {
            job.image = std::move(img);
            job.png = std::move(png);
            job.status = JobStatus::Done;
        } else {
            job.error = error;
            job.status = JobStatus::Failed;
        }
    });
    return id;
}

std::string Service::submit_calibration(const std::string &camera_id, std::vector<ParameterSpec> params,
                                        std::int64_t budget, std::uint64_t seed, int restarts, RenderRequest quality) {
    std::lock_guard lock(mu_);
    if (!reference_) throw ConflictError("no reference image uploaded");
    auto problem = std::make_shared<CalibrationProblem>();
    problem->scene = scene_;
    problem->camera_id = camera_id;
    problem->reference = *reference_;
    problem->params = std::move(params);
    quality.camera_id = camera_id;
    problem->quality = quality;
    problem->encoder = encoder_;
    problem->render_options = config_.render_options;
    validate(*problem);
    if (restarts < 1) throw ValidationError("restarts must be >= 1");
    if (budget < 10 * static_cast<std::int64_t>(problem->params.size()))
        throw ValidationError("budget too small: need at least 10 evaluations per parameter");

    const std::string id = new_job_locked(JobKind::Calibrate, camera_id);
    jobs_.at(id).params = problem->params;
    pool_->submit([this, id, problem, budget, seed, restarts] {
        {
            std::lock_guard lock(mu_);
            JobRecord &job = jobs_.at(id);
            job.status = JobStatus::Running;
            job.started_at = now_seconds();
        }
        CalibrateOptions opts;
        // Restarts run one after another here, so a running offset gives global indices.
        std::int64_t offset = 0;
        int current_restart = 0;
        std::int64_t seen_in_restart = 0;
        opts.on_eval = [&](const TraceEntry &e) {
            if (e.restart != current_restart) {
                offset += seen_in_restart;
                seen_in_restart = 0;
                current_restart = e.restart;
            }
            ++seen_in_restart;
            std::lock_guard lock(mu_);
            if (shutting_down_) throw ShutdownError("service is shutting down");
            TraceEntry g = e;
            g.eval_index = offset + e.eval_index;
            jobs_.at(id).trace.push_back(std::move(g));
        };
        std::optional<CalibrationResult> result;
        std::string error;
        try {
            result = calibrate(*problem, budget, seed, restarts, opts);
        } catch (const CalibrationError &e) {
            error = e.what();
        } catch (const std::exception &e) {
            error = e.what();
        }
        std::lock_guard lock(mu_);
        JobRecord &job = jobs_.at(id);
        job.finished_at = now_seconds();
        if (result) {
            job.trace = result->trace;
            job.calibration = std::move(result);
            job.status = JobStatus::Done;
        } else {
            job.error = error;
            job.status = JobStatus::Failed;
        }
    });
    return id;
}

json Service::job_json_locked(const JobRecord &job) const {
    json j = {{"job_id", job.job_id},
              {"kind", to_string(job.kind)},
              {"status", to_string(job.status)},
              {"scene_revision", job.scene_revision},
              {"camera_id", job.camera_id},
              {"created_at", job.created_at}};
    if (job.started_at > 0.0) j["started_at"] = job.started_at;
    if (job.finished_at > 0.0) j["finished_at"] = job.finished_at;
    if (job.status == JobStatus::Failed) j["error"] = job.error;
    if (job.kind == JobKind::Render) {
        if (job.status == JobStatus::Done)
            j["result"] = {{"image", "/jobs/" + job.job_id + "/image"},
                           {"width", job.image->width},
                           {"height", job.image->height}};
        return j;
    }

    json params = json::array();
    for (const auto &p : job.params) params.push_back(parameter_spec_to_json(p));
    j["params"] = params;
    json trace = json::array();
    std::optional<std::size_t> best;
    json best_so_far = json::array();
    for (std::size_t i = 0; i < job.trace.size(); ++i) {
        const auto &e = job.trace[i];
        trace.push_back({{"eval_index", e.eval_index}, {"percent", e.percent}, {"params", e.params},
                         {"restart", e.restart}});
        if (!best || e.percent > job.trace[*best].percent) best = i;
        best_so_far.push_back(job.trace[*best].percent);
    }
    j["trace"] = trace;
    j["best_so_far"] = best_so_far;
    j["evals_used"] = job.trace.size();
    if (best) {
        j["best_percent"] = job.trace[*best].percent;
        j["best_params"] = job.trace[*best].params;
    }
    if (job.calibration) j["result"] = result_to_json(*job.calibration, job.params);
    return j;
}

std::optional<json> Service::job_json(const std::string &job_id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    return job_json_locked(it->second);
}

void Service::install_routes() {
    auto &s = *http_;

    s.Get("/scene", [this](const httplib::Request &, httplib::Response &res) {
        auto [scene, rev] = snapshot();
        reply_json(res, 200, {{"revision", rev}, {"scene", scene_to_json(scene)}});
    });

    s.Patch(R"(/fixtures/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
        auto body = parse_body(req, res);
        if (!body) return;
        guarded(res, [&] {
            const auto rev = handle_update(fixture_update_from_json(req.matches[1], *body));
            reply_json(res, 200, {{"revision", rev}});
        });
    });

    s.Post("/render", [this](const httplib::Request &req, httplib::Response &res) {
        auto body = parse_body(req, res);
        if (!body) return;
        guarded(res, [&] {
            if (!body->is_object() || !body->contains("camera_id") || !(*body)["camera_id"].is_string())
                throw ValidationError("render request needs a string \"camera_id\"");
            RenderRequest r;
            r.camera_id = (*body)["camera_id"].get<std::string>();
            r.width = get_int(*body, "width", config_.preview_width);
            r.height = get_int(*body, "height", config_.preview_height);
            r.spp = get_int(*body, "spp", config_.preview_spp);
            r.seed = get_u64(*body, "seed", config_.preview_seed);
            if (body->contains("flags")) r.flags = flags_from_json((*body)["flags"]);
            reply_json(res, 202, {{"job_id", submit_render(r)}});
        });
    });

    s.Get(R"(/jobs/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
        auto j = job_json(req.matches[1]);
        if (!j) return reply_error(res, 404, "unknown job '" + std::string(req.matches[1]) + "'");
        reply_json(res, 200, *j);
    });

    s.Get(R"(/jobs/([^/]+)/image)", [this](const httplib::Request &req, httplib::Response &res) {
        std::lock_guard lock(mu_);
        auto it = jobs_.find(req.matches[1]);
        if (it == jobs_.end()) return reply_error(res, 404, "unknown job '" + std::string(req.matches[1]) + "'");
        const JobRecord &job = it->second;
        if (job.kind != JobKind::Render) return reply_error(res, 404, "job has no image");
        if (job.status != JobStatus::Done) return reply_error(res, 409, std::string("job is ") + to_string(job.status));
        res.set_header("X-Scene-Revision", std::to_string(job.scene_revision));
        res.set_content(reinterpret_cast<const char *>(job.png.data()), job.png.size(), "image/png");
    });

    s.Get(R"(/preview/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
        guarded(res, [&] {
            auto [png, rev] = latest_preview(req.matches[1]);
            res.set_header("X-Scene-Revision", std::to_string(rev));
            res.set_content(reinterpret_cast<const char *>(png.data()), png.size(), "image/png");
        });
    });

    s.Post("/reference", [this](const httplib::Request &req, httplib::Response &res) {
        guarded(res, [&] {
            const auto *bytes = reinterpret_cast<const std::uint8_t *>(req.body.data());
            set_reference(decode_png({bytes, req.body.size()}));
            reply_json(res, 200, {{"ok", true}});
        });
    });

    s.Get("/similarity", [this](const httplib::Request &req, httplib::Response &res) {
        guarded(res, [&] {
            std::string cam = req.get_param_value("camera_id");
            if (cam.empty()) {
                std::lock_guard lock(mu_);
                cam = scene_.cameras.front().id;
            }
            try {
                reply_json(res, 200, handle_similarity(cam));
            } catch (const ConflictError &e) {
                reply_error(res, 409, e.what());
            }
        });
    });

    s.Post("/calibrate", [this](const httplib::Request &req, httplib::Response &res) {
        auto body = parse_body(req, res);
        if (!body) return;
        guarded(res, [&] {
            if (!body->is_object() || !body->contains("camera_id") || !(*body)["camera_id"].is_string() ||
                !body->contains("params") || !(*body)["params"].is_array())
                throw ValidationError("calibrate request needs \"camera_id\" and \"params\"");
            std::vector<ParameterSpec> params;
            for (const auto &p : (*body)["params"]) params.push_back(parameter_spec_from_json(p));
            RenderRequest quality;
            quality.width = get_int(*body, "width", 64);
            quality.height = get_int(*body, "height", 64);
            quality.spp = get_int(*body, "spp", 16);
            quality.seed = get_u64(*body, "render_seed", 0);
            const auto budget = get_int(*body, "budget", 200);
            const auto seed = get_u64(*body, "seed", 0);
            const auto restarts = get_int(*body, "restarts", 1);
            try {
                const auto id = submit_calibration((*body)["camera_id"].get<std::string>(), std::move(params), budget,
                                                   seed, restarts, quality);
                reply_json(res, 202, {{"job_id", id}});
            } catch (const ConflictError &e) {
                reply_error(res, 409, e.what());
            }
        });
    });

    s.Get(R"(/calibrate/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
        auto j = job_json(req.matches[1]);
        if (!j || (*j)["kind"] != "calibrate")
            return reply_error(res, 404, "unknown calibration job '" + std::string(req.matches[1]) + "'");
        reply_json(res, 200, *j);
    });
}

void serve(const std::string &scene_path, const std::string &bind, unsigned workers, const std::string &encoder) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ValidationError("--bind must be HOST:PORT (got \"" + bind + "\")");
    const std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception &) {
        throw ValidationError("--bind port is not a number (got \"" + bind + "\")");
    }
    ServiceConfig config;
    config.workers = workers;
    config.encoder = encoder;
    Service service(load_scene_file(scene_path), config);
    const int bound = service.bind(host, port);
    std::cerr << "twinlight: serving " << scene_path << " on http://" << host << ":" << bound << "\n";
    service.listen();
}

}  // namespace twinlight
