// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <json.hpp>

#include "twinlight/render_flags.hpp"
#include "twinlight/scene.hpp"

namespace twinlight {

// Object-notation views shared by the CLI and the service.

nlohmann::json scene_to_json(const Scene &scene);
Scene scene_from_json(const nlohmann::json &doc);

/// Reads {dimmer?, cct_k?, color_rgb?, enabled?}. Unknown keys or wrong types throw ValidationError.
FixtureUpdate fixture_update_from_json(std::string fixture_id, const nlohmann::json &body);

nlohmann::json flags_to_json(const RenderFlags &flags);
RenderFlags flags_from_json(const nlohmann::json &doc);

/// Rounds to 6 significant digits so serialized numbers are canonical.
double canonical_number(double v);

}  // namespace twinlight
