#pragma once

#include "castelet/scene.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace castelet {

// JSON form: {"tick", "time", "layers": [{"kind", "oav", "light"?, "screen"?,
// "polygon": [[x,y],...], "holes": [[[x,y],...],...], "color": [r,g,b,a], "depth"}]}
nlohmann::json frame_to_json(const RenderFrame& frame);
RenderFrame frame_from_json(const nlohmann::json& j);

// Canonical serialization; the hash input.
std::string serialize_frame(const RenderFrame& frame);
// Hex SHA-256 of serialize_frame.
std::string frame_hash(const RenderFrame& frame);
std::string sha256_hex(std::string_view bytes);

// One <g> per layer, painter's order, even-odd fill for holes.
std::string frame_to_svg(const RenderFrame& frame, double width, double height);

}  // namespace castelet
