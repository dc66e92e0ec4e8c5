// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "twinlight/calibration.hpp"
#include "twinlight/image.hpp"
#include "twinlight/render.hpp"
#include "twinlight/scene.hpp"
#include "twinlight/similarity.hpp"

namespace httplib {
class Server;
}

namespace twinlight {

/// Fixed-size pool; tasks run in submission order.
class WorkerPool {
public:
    explicit WorkerPool(unsigned workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool &) = delete;
    WorkerPool &operator=(const WorkerPool &) = delete;

    void submit(std::function<void()> task);
    unsigned size() const { return static_cast<unsigned>(threads_.size()); }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

struct ServiceConfig {
    unsigned workers = 0;  // 0 = core count
    std::string encoder = "builtin";
    int preview_width = 128;
    int preview_height = 128;
    int preview_spp = 16;
    std::uint64_t preview_seed = 0;
    RenderOptions render_options{1, kDefaultSampleBudget};
};

enum class JobKind { Render, Calibrate };
enum class JobStatus { Queued, Running, Done, Failed };

const char *to_string(JobKind k);
const char *to_string(JobStatus s);

struct JobRecord {
    std::string job_id;
    JobKind kind = JobKind::Render;
    JobStatus status = JobStatus::Queued;
    std::int64_t scene_revision = 0;
    std::string camera_id;
    std::string error;
    double created_at = 0.0;
    double started_at = 0.0;
    double finished_at = 0.0;

    // Render result.
    std::optional<DisplayImage> image;
    std::vector<std::uint8_t> png;

    // Calibration progress and result.
    std::vector<ParameterSpec> params;
    std::vector<TraceEntry> trace;
    std::optional<CalibrationResult> calibration;
};

/// HTTP front end for live steering of one twin.
///
///   GET   /scene                   -> {"revision", "scene"}
///   PATCH /fixtures/{id}           -> {"revision"}
///   POST  /render                  -> {"job_id"}
///   GET   /jobs/{id}               -> job record
///   GET   /jobs/{id}/image         -> image/png
///   GET   /preview/{camera_id}     -> image/png, X-Scene-Revision header
///   POST  /reference (image/png)   -> {"ok": true}
///   GET   /similarity?camera_id=   -> {"percent", "encoder_id", "scene_revision", "camera_id"}
///   POST  /calibrate               -> {"job_id"}
///   GET   /calibrate/{id}          -> status, trace so far, best so far
///
/// Scene edits are serialized under one lock; renders read immutable snapshots on the pool.
class Service {
public:
    Service(Scene scene, ServiceConfig config = {});
    ~Service();
    Service(const Service &) = delete;
    Service &operator=(const Service &) = delete;

    /// Binds to host:port (port 0 picks a free one) and returns the bound port.
    /// Throws Error when the address cannot be bound.
    int bind(const std::string &host, int port);
    /// Serves until stop(). Call after bind().
    void listen();
    /// bind() + listen() on a background thread; returns the port.
    int start(const std::string &host, int port);
    void stop();

    // In-process entry points; the HTTP handlers are thin wrappers over these.
    std::pair<Scene, std::int64_t> snapshot() const;
    std::int64_t handle_update(const FixtureUpdate &update);
    void set_reference(DisplayImage reference);
    nlohmann::json handle_similarity(const std::string &camera_id);
    /// Latest preview for the camera, waiting for the first one if none exists yet.
    std::pair<std::vector<std::uint8_t>, std::int64_t> latest_preview(const std::string &camera_id);
    std::string submit_render(const RenderRequest &req);
    std::string submit_calibration(const std::string &camera_id, std::vector<ParameterSpec> params,
                                   std::int64_t budget, std::uint64_t seed, int restarts, RenderRequest quality);
    std::optional<nlohmann::json> job_json(const std::string &job_id) const;

private:
    struct Preview {
        std::int64_t revision = -1;
        DisplayImage image;
        std::vector<std::uint8_t> png;
    };

    void install_routes();
    void schedule_previews_locked();
    void render_preview(const std::string &camera_id);
    const Preview &store_preview_locked(const std::string &camera_id, std::int64_t revision, DisplayImage image);
    std::string new_job_locked(JobKind kind, const std::string &camera_id);
    nlohmann::json job_json_locked(const JobRecord &job) const;
    RenderRequest preview_request(const std::string &camera_id) const;

    ServiceConfig config_;
    std::shared_ptr<const Encoder> encoder_;

    mutable std::mutex mu_;
    std::condition_variable preview_cv_;
    Scene scene_;
    std::optional<DisplayImage> reference_;
    std::optional<Embedding> reference_embedding_;
    std::map<std::string, Preview> previews_;
    std::set<std::string> preview_pending_;
    std::map<std::string, JobRecord> jobs_;
    std::int64_t next_job_ = 1;
    bool shutting_down_ = false;

    std::unique_ptr<httplib::Server> http_;
    std::thread listener_;
    // Declared last so its threads join before the state they touch is destroyed.
    std::unique_ptr<WorkerPool> pool_;
};

/// Loads the scene file and serves until the process is terminated.
/// `bind` is "HOST:PORT". Throws on parse or bind failure.
void serve(const std::string &scene_path, const std::string &bind, unsigned workers, const std::string &encoder);

}  // namespace twinlight
