#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "roilink/protocol.hpp"
#include "roilink/selection.hpp"

namespace roilink {

struct PluginSpec {
  std::string command;  // run through /bin/sh -c
  std::chrono::milliseconds timeout{5000};
};

struct PluginResult {
  std::vector<ScoredBox> boxes;  // frame coordinates
  bool ok = true;
  std::string error;
};

/// Parses "x y w h score" lines in tile-local coordinates and maps them into
/// the frame; boxes are clipped to the tile. Blank lines are skipped.
/// Throws ParseError on a malformed line.
std::vector<ScoredBox> parse_plugin_output(std::string_view text, const RectPx& tile);

/// Spawns the plugin, writes the tile as PNG to its stdin and parses its
/// stdout. Failures (spawn error, nonzero exit, malformed output, timeout)
/// come back as ok == false instead of throwing.
PluginResult run_detector_plugin(const wire::RoiTile& tile, const PluginSpec& spec);

}  // namespace roilink
