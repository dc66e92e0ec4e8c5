// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "twinlight/image.hpp"
#include "twinlight/render_flags.hpp"
#include "twinlight/scene.hpp"

namespace twinlight {

inline constexpr std::uint64_t kDefaultSampleBudget = 64ULL << 20;  // 64 Mi samples

struct RenderRequest {
    std::string camera_id;
    int width = 128;
    int height = 128;
    int spp = 16;
    std::uint64_t seed = 0;
    RenderFlags flags;
};

struct RenderOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
    std::uint64_t sample_budget = kDefaultSampleBudget;
};

/// Unidirectional path tracer with next-event estimation over the enabled fixtures.
///
/// Light selection is uniform over enabled fixtures and no sampling decision ever reads an
/// emission value, so the image is exactly linear in every fixture's emission. Each sample's
/// random stream is keyed by (seed, x, y, sample index); output is bit-identical for any
/// thread count.
///
/// Throws RenderError for an unknown camera, a malformed request, or an exceeded sample budget.
ImageBuffer render(const Scene &scene, const RenderRequest &req, const RenderOptions &opts = {});

/// max |render(all) - sum_i render(only fixture i)| over every pixel channel, where "only i"
/// zeroes the other fixtures' dimmers but keeps them enabled.
/// Throws PreconditionError when fewer than two fixtures are enabled.
double render_superposition_check(const Scene &scene, const RenderRequest &req, const RenderOptions &opts = {});

}  // namespace twinlight
