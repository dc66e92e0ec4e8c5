// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <utility>

#include "twinlight/render_flags.hpp"
#include "twinlight/scene.hpp"

namespace twinlight {

/// Validation conditions for a twin, from most degraded to final.
///   B: furniture removed and every CCT pushed bluer by kConditionBCctShiftK.
///   C: geometry intact but no bounce light and no shadows.
///   D: the twin as modelled.
enum class Condition { B, C, D };

inline constexpr double kConditionBCctShiftK = 3000.0;

Condition parse_condition(std::string_view text);
const char *to_string(Condition c);
const char *describe(Condition c);

std::pair<Scene, RenderFlags> fidelity_preset(const Scene &scene, Condition condition,
                                              RenderFlags full = {});

}  // namespace twinlight
