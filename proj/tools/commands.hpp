// Copyright 2026 The twinlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinlight/fidelity.hpp"

namespace twinlight::cli {

/// Stable exit codes for scripts.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitRuntime = 2;

struct TableOptions {
    std::string scene_path;
    std::string reference_path;
    std::string camera_id;  // empty = first camera
    int width = 128;
    int height = 128;
    int spp = 64;
    std::uint64_t seed = 1;
    std::string encoder = "builtin";
};

struct TableRow {
    Condition condition;
    std::string description;
    double percent = 0.0;
    double published_percent = 0.0;
};

struct TableReport {
    std::vector<TableRow> rows;  // B, C, D
    std::string encoder_id;
    std::string scene_path;
    std::string reference_path;
};

/// Renders conditions B, C and D of the scene and scores each against the reference photo.
TableReport run_table(const TableOptions &opts);
nlohmann::json table_to_json(const TableReport &report);
std::string table_to_text(const TableReport &report);

/// Full command line: render | table | calibrate | similarity | serve.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace twinlight::cli
