#pragma once

#include "castelet/clips.hpp"
#include "castelet/retarget.hpp"
#include "castelet/scene.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace castelet {

namespace step {
struct TriggerAction {
  std::string oav;
  std::string action;
};
struct Suspend {
  std::string oav;
};
struct SetLive {
  std::string oav;
  bool on = true;
};
struct Effect {
  SceneEffect effect;
};
struct Wait {
  double seconds = 0.0;
};
}  // namespace step

using CueStep = std::variant<step::TriggerAction, step::Suspend, step::SetLive, step::Effect, step::Wait>;

struct Cue {
  std::size_t index = 0;
  std::string label;
  std::vector<CueStep> steps;
};

CueStep cue_step_from_json(const nlohmann::json& j);
nlohmann::json cue_step_to_json(const CueStep& s);
SceneEffect scene_effect_from_json(const nlohmann::json& j);
nlohmann::json scene_effect_to_json(const SceneEffect& e);

// Live input of one avatar: the mocap skeleton bound onto the avatar's rig.
struct LiveInput {
  std::string retarget_id;
  std::shared_ptr<const BoundRetarget> binding;
  double unit_scale = 0.01;  // stream translation units to meters
};

struct AvatarConfig {
  std::string id;
  std::string initial_idle;
  double fade_duration = 0.4;
  std::optional<LiveInput> live;
};

struct Show {
  std::string name;
  std::filesystem::path bundle_dir;
  std::map<std::string, std::string> spaces;  // documentation only (A, B, C, E)
  CasteletScene scene;
  std::shared_ptr<const ClipLibrary> library;
  std::map<std::string, std::shared_ptr<const Rig>> rigs;
  std::vector<AvatarConfig> avatars;  // aligned with scene.oavs
  std::vector<Cue> cues;
  std::size_t cursor = 0;
  double tick_rate = 60.0;
  double clock = 0.0;
  double chain_tolerance = kDefaultChainTolerance;

  std::optional<std::size_t> avatar_index(std::string_view id) const;
};

struct LoadIssue {
  std::string where;
  std::string message;
};

struct LoadReport {
  std::vector<LoadIssue> errors;
  std::vector<LoadIssue> warnings;
  bool ok() const { return errors.empty(); }
  std::string to_string() const;
};

class LoadError : public std::runtime_error {
 public:
  explicit LoadError(LoadReport report);
  const LoadReport& report() const { return report_; }

 private:
  LoadReport report_;
};

// Loads a show bundle directory (show.json, rigs, clips/*.bvh + *.clip.json,
// retarget sources). Collects every problem before failing with LoadError.
Show load_show(const std::filesystem::path& bundle, LoadReport* report = nullptr);

// Sidecar manifest of one clip in a bundle's clips directory.
struct ClipSidecar {
  std::string id;
  ClipKind kind = ClipKind::idle;
  std::string skeleton;  // rig id
  std::string bvh;       // file name relative to the sidecar
  std::string start_idle;
  std::string end_idle;
  double unit_scale = 0.01;
};

ClipSidecar clip_sidecar_from_json(const nlohmann::json& j);
nlohmann::json clip_sidecar_to_json(const ClipSidecar& s);

SilhouetteMesh mesh_from_json(const nlohmann::json& j, const Skeleton& skeleton);
nlohmann::json mesh_to_json(const SilhouetteMesh& mesh, const Skeleton& skeleton);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace castelet
