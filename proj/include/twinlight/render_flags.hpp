// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace twinlight {

struct RenderFlags {
    bool indirect = true;  // bounce lighting
    bool shadows = true;   // occlusion tests on direct lighting
    int max_bounces = 4;   // path vertices that gather direct light

    /// indirect=off caps the path at the first hit.
    int effective_bounces() const { return indirect ? max_bounces : (max_bounces > 0 ? 1 : 0); }
    bool operator==(const RenderFlags &) const = default;
};

}  // namespace twinlight
