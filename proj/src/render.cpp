// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinlight/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include "twinlight/color.hpp"
#include "twinlight/error.hpp"
#include "twinlight/rng.hpp"

namespace twinlight {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRayEps = 1e-6;
constexpr double kPlaneTol = 1e-9;

struct Ray {
    Vec3 o, d;
};

struct Box {
    Vec3 lo, hi;
    Rgb albedo;
};

struct Emitter {
    int axis, sign;
    double plane;
    int t0, t1;  // in-plane axes
    double lo0, hi0, lo1, hi1;
    double area;
    Vec3 normal;
    Rgb radiance;
    Rgb reflectance;
    bool enabled;

    bool contains(const Vec3 &p) const {
        return p[t0] >= lo0 && p[t0] <= hi0 && p[t1] >= lo1 && p[t1] <= hi1;
    }
};

struct Hit {
    double t = kInf;
    Vec3 p;
    Vec3 n;  // faces the incoming ray
    Rgb albedo;
    int emitter = -1;
};

class Tracer {
public:
    Tracer(const Scene &scene, const RenderFlags &flags) : size_(scene.room.size_m), room_(scene.room), flags_(flags) {
        for (const auto &f : scene.furnishings) boxes_.push_back({f.min_m, f.max_m, f.albedo});
        for (const auto &f : scene.fixtures) {
            Emitter e;
            e.axis = f.facing.axis;
            e.sign = f.facing.sign;
            e.plane = f.center_m[e.axis];
            const auto t = f.facing.tangent_axes();
            e.t0 = t[0];
            e.t1 = t[1];
            e.lo0 = f.center_m[t[0]] - f.half_extents_m[0];
            e.hi0 = f.center_m[t[0]] + f.half_extents_m[0];
            e.lo1 = f.center_m[t[1]] - f.half_extents_m[1];
            e.hi1 = f.center_m[t[1]] + f.half_extents_m[1];
            e.area = f.area_m2();
            e.normal = f.facing.normal();
            e.radiance = fixture_emission(f);
            // A fixture's diffuser reflects like the room surface it is mounted against.
            if (e.axis == 2)
                e.reflectance = e.sign < 0 ? room_.ceiling_albedo : room_.floor_albedo;
            else
                e.reflectance = room_.wall_albedo;
            e.enabled = f.enabled;
            if (e.enabled) lights_.push_back(static_cast<int>(emitters_.size()));
            emitters_.push_back(e);
        }
        bounces_ = flags_.effective_bounces();
    }

    Rgb trace(Ray ray, SplitMix &rng) const {
        Rgb radiance;
        Rgb throughput{1.0, 1.0, 1.0};
        Hit hit;
        if (!intersect(ray, hit)) return radiance;
        if (hit.emitter >= 0) radiance += emitted_toward(hit.p, ray.d, hit.emitter);

        for (int vertex = 1; vertex <= bounces_; ++vertex) {
            // Every vertex consumes the same five numbers, lit or not.
            const double ul = rng.next_double(), ua = rng.next_double(), ub = rng.next_double();
            const double u1 = rng.next_double(), u2 = rng.next_double();

            const Rgb f = hit.albedo * (1.0 / std::numbers::pi);
            if (!lights_.empty()) {
                const auto n = lights_.size();
                const Emitter &e = emitters_[lights_[std::min<std::size_t>(static_cast<std::size_t>(ul * n), n - 1)]];
                Vec3 q;
                q[e.axis] = e.plane;
                q[e.t0] = e.lo0 + ua * (e.hi0 - e.lo0);
                q[e.t1] = e.lo1 + ub * (e.hi1 - e.lo1);
                const Vec3 to = q - hit.p;
                const double dist2 = dot(to, to);
                if (dist2 > 0.0) {
                    const double dist = std::sqrt(dist2);
                    const Vec3 wi = to / dist;
                    const double cos_x = dot(hit.n, wi);
                    const double cos_l = -dot(e.normal, wi);
                    if (cos_x > 0.0 && cos_l > 0.0 &&
                        (!flags_.shadows || unoccluded(hit.p + hit.n * kRayEps, wi, dist - 2.0 * kRayEps))) {
                        const double g = cos_x * cos_l / dist2 * e.area * static_cast<double>(n);
                        radiance += throughput * f * e.radiance * g;
                    }
                }
            }
            if (vertex == bounces_) break;

            // Cosine-weighted bounce: the pdf cancels cos/pi, leaving the albedo.
            const double r = std::sqrt(u1);
            const double phi = 2.0 * std::numbers::pi * u2;
            const Vec3 local{r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))};
            Vec3 b1, b2;
            basis(hit.n, b1, b2);
            const Vec3 dir = normalize(b1 * local.x + b2 * local.y + hit.n * local.z);
            throughput *= hit.albedo;
            ray = {hit.p + hit.n * kRayEps, dir};
            if (!intersect(ray, hit)) break;
        }
        return radiance;
    }

private:
    static void basis(const Vec3 &n, Vec3 &b1, Vec3 &b2) {
        const double sign = std::copysign(1.0, n.z);
        const double a = -1.0 / (sign + n.z);
        const double b = n.x * n.y * a;
        b1 = {1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x};
        b2 = {b, sign + n.y * n.y * a, -n.y};
    }

    // Sum of every coplanar emitter whose front face covers p, seen from direction d.
    Rgb emitted_toward(const Vec3 &p, const Vec3 &d, int index) const {
        const Emitter &h = emitters_[index];
        Rgb sum;
        for (const auto &e : emitters_) {
            if (e.axis != h.axis || std::abs(e.plane - h.plane) > kPlaneTol) continue;
            if (dot(e.normal, d) >= 0.0 || !e.contains(p)) continue;
            sum += e.radiance;
        }
        return sum;
    }

    void hit_room(const Ray &ray, Hit &hit) const {
        double best = kInf;
        int axis = -1;
        for (int a = 0; a < 3; ++a) {
            if (ray.d[a] == 0.0) continue;
            const double t = ((ray.d[a] > 0.0 ? size_[a] : 0.0) - ray.o[a]) / ray.d[a];
            if (t > 0.0 && t < best) {
                best = t;
                axis = a;
            }
        }
        if (axis < 0) return;
        hit.t = best;
        hit.n = {};
        hit.n[axis] = ray.d[axis] > 0.0 ? -1.0 : 1.0;
        hit.emitter = -1;
        if (axis == 2)
            hit.albedo = ray.d[axis] > 0.0 ? room_.ceiling_albedo : room_.floor_albedo;
        else
            hit.albedo = room_.wall_albedo;
    }

    // Slab test; returns entry distance (or exit when starting inside) and the face axis.
    static bool slab(const Ray &ray, const Box &b, double t_max, double &t_hit, int &axis) {
        double t0 = 0.0, t1 = t_max;
        int a0 = -1, a1 = -1;
        for (int a = 0; a < 3; ++a) {
            if (ray.d[a] == 0.0) {
                if (ray.o[a] < b.lo[a] || ray.o[a] > b.hi[a]) return false;
                continue;
            }
            const double inv = 1.0 / ray.d[a];
            double tn = (b.lo[a] - ray.o[a]) * inv;
            double tf = (b.hi[a] - ray.o[a]) * inv;
            if (tn > tf) std::swap(tn, tf);
            if (tn > t0) {
                t0 = tn;
                a0 = a;
            }
            if (tf < t1) {
                t1 = tf;
                a1 = a;
            }
            if (t0 > t1) return false;
        }
        if (a0 >= 0) {
            t_hit = t0;
            axis = a0;
            return true;
        }
        if (a1 >= 0 && t1 < t_max) {
            t_hit = t1;
            axis = a1;
            return true;
        }
        return false;
    }

    bool hit_emitter(const Ray &ray, const Emitter &e, double t_max, double &t) const {
        if (ray.d[e.axis] == 0.0) return false;
        t = (e.plane - ray.o[e.axis]) / ray.d[e.axis];
        if (!(t > 0.0 && t < t_max)) return false;
        return e.contains(ray.o + ray.d * t);
    }

    bool intersect(const Ray &ray, Hit &hit) const {
        hit = Hit{};
        hit_room(ray, hit);
        for (const auto &b : boxes_) {
            double t;
            int axis;
            if (slab(ray, b, hit.t, t, axis) && t > 0.0 && t < hit.t) {
                hit.t = t;
                hit.n = {};
                hit.n[axis] = ray.d[axis] > 0.0 ? -1.0 : 1.0;
                hit.albedo = b.albedo;
                hit.emitter = -1;
            }
        }
        // Fixtures win ties with the surface they are mounted on.
        const double t_limit = hit.t * (1.0 + 1e-9) + 1e-12;
        double best = t_limit;
        for (std::size_t i = 0; i < emitters_.size(); ++i) {
            double t;
            if (hit_emitter(ray, emitters_[i], best, t)) {
                best = t;
                const Emitter &e = emitters_[i];
                hit.t = t;
                hit.n = e.normal * (dot(e.normal, ray.d) < 0.0 ? 1.0 : -1.0);
                hit.albedo = e.reflectance;
                hit.emitter = static_cast<int>(i);
            }
        }
        if (!std::isfinite(hit.t)) return false;
        hit.p = ray.o + ray.d * hit.t;
        return true;
    }

    // The room is convex, so only furnishings and fixtures can block a segment inside it.
    bool unoccluded(const Vec3 &o, const Vec3 &d, double t_max) const {
        const Ray ray{o, d};
        for (const auto &b : boxes_) {
            double t;
            int axis;
            if (slab(ray, b, t_max, t, axis) && t > 0.0 && t < t_max) return false;
        }
        for (const auto &e : emitters_) {
            double t;
            if (hit_emitter(ray, e, t_max, t)) return false;
        }
        return true;
    }

    Vec3 size_;
    Room room_;
    RenderFlags flags_;
    int bounces_ = 0;
    std::vector<Box> boxes_;
    std::vector<Emitter> emitters_;
    std::vector<int> lights_;
};

struct PinholeCamera {
    Vec3 origin, forward, right, up;
    double tan_half, aspect;

    PinholeCamera(const Camera &c, int w, int h) : origin(c.position_m) {
        forward = normalize(c.look_at_m - c.position_m);
        right = normalize(cross(forward, c.up));
        up = cross(right, forward);
        tan_half = std::tan(c.vfov_deg * std::numbers::pi / 360.0);
        aspect = static_cast<double>(w) / h;
    }

    Ray ray(double sx, double sy, int w, int h) const {
        const double px = (2.0 * sx / w - 1.0) * aspect * tan_half;
        const double py = (1.0 - 2.0 * sy / h) * tan_half;
        return {origin, normalize(forward + right * px + up * py)};
    }
};

}  // namespace

ImageBuffer render(const Scene &scene, const RenderRequest &req, const RenderOptions &opts) {
    const Camera *cam = scene.find_camera(req.camera_id);
    if (!cam) throw RenderError("unknown camera '" + req.camera_id + "'");
    if (req.width < 8 || req.height < 8) throw RenderError("image must be at least 8x8 pixels");
    if (req.spp < 1) throw RenderError("spp must be >= 1");
    if (req.flags.max_bounces < 0) throw RenderError("max_bounces must be >= 0");
    const std::uint64_t samples =
        static_cast<std::uint64_t>(req.width) * static_cast<std::uint64_t>(req.height) * static_cast<std::uint64_t>(req.spp);
    if (samples > opts.sample_budget)
        throw RenderError("sample budget exceeded: " + std::to_string(samples) + " > " +
                          std::to_string(opts.sample_budget));

    const Tracer tracer(scene, req.flags);
    const PinholeCamera pinhole(*cam, req.width, req.height);
    ImageBuffer img(req.width, req.height);

    auto render_rows = [&](int first, int stride) {
        for (int y = first; y < req.height; y += stride) {
            for (int x = 0; x < req.width; ++x) {
                Rgb sum;
                for (int s = 0; s < req.spp; ++s) {
                    SplitMix rng(sample_key(req.seed, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y),
                                            static_cast<std::uint64_t>(s)));
                    const double jx = rng.next_double(), jy = rng.next_double();
                    sum += tracer.trace(pinhole.ray(x + jx, y + jy, req.width, req.height), rng);
                }
                img.set(x, y, sum / static_cast<double>(req.spp));
            }
        }
    };

    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(req.height));
    if (threads <= 1) {
        render_rows(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(render_rows, static_cast<int>(t), static_cast<int>(threads));
    }
    return img;
}

double render_superposition_check(const Scene &scene, const RenderRequest &req, const RenderOptions &opts) {
    std::vector<std::size_t> lit;
    for (std::size_t i = 0; i < scene.fixtures.size(); ++i)
        if (scene.fixtures[i].enabled) lit.push_back(i);
    if (lit.size() < 2) throw PreconditionError("superposition check needs at least two enabled fixtures");

    const ImageBuffer all = render(scene, req, opts);
    std::vector<double> sum(all.data.size(), 0.0);
    for (std::size_t only : lit) {
        Scene single = scene;
        for (std::size_t i = 0; i < single.fixtures.size(); ++i)
            if (i != only) single.fixtures[i].dimmer = 0.0;
        const ImageBuffer part = render(single, req, opts);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += part.data[k];
    }
    double residual = 0.0;
    for (std::size_t k = 0; k < sum.size(); ++k) residual = std::max(residual, std::abs(all.data[k] - sum[k]));
    return residual;
}

}  // namespace twinlight
