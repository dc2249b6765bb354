#pragma once

#include "castelet/skeleton.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace castelet {

struct Rgba {
  double r = 0.0, g = 0.0, b = 0.0, a = 1.0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

// Finite planar screen n.x = d; bounds is a convex polygon lying in the plane.
struct Screen {
  std::string name;
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::vector<Vec3> bounds;
  double translucency = 1.0;
};

struct PointLight {
  std::string name;
  Vec3 position = Vec3::Zero();
  bool enabled = true;
};

struct Camera {
  enum class Kind { orthographic, perspective };
  Kind kind = Kind::perspective;
  Vec3 position = Vec3(0, 1.5, 8);
  Vec3 look = -Vec3::UnitZ();
  Vec3 up = Vec3::UnitY();
  double fov_y = 0.8;        // radians, perspective only
  double view_height = 4.0;  // meters, orthographic only
  double viewport_width = 1280.0;
  double viewport_height = 720.0;
};

// Skeleton + flat silhouette, with the bind pose inverted once at load time.
struct Rig {
  std::string id;
  Skeleton skeleton;
  SilhouetteMesh mesh;
  std::vector<Transform> bind_inverse;

  static std::shared_ptr<const Rig> make(std::string id, Skeleton skeleton, SilhouetteMesh mesh);
};

struct OavInstance {
  std::string id;
  std::shared_ptr<const Rig> rig;
  Vec3 position = Vec3::Zero();
  double yaw_deg = 0.0;  // about +y
  bool visible = true;
  bool casts_shadow = true;
  Rgba tint;

  Transform root_transform() const;
};

struct CasteletScene {
  Box stage;
  std::vector<Screen> screens;
  std::vector<PointLight> lights;
  std::vector<OavInstance> oavs;
  Camera camera;

  const OavInstance* find_oav(std::string_view id) const;
};

// Returns warnings (e.g. casters without an enabled light); throws
// ValidationError on broken invariants.
std::vector<std::string> validate_scene(const CasteletScene& scene);
void validate_camera(const Camera& camera);

struct Layer {
  enum class Kind { silhouette, shadow };
  Kind kind = Kind::silhouette;
  std::string oav;
  std::string light;   // shadows only
  std::string screen;  // shadows only
  std::vector<Vec2> polygon;
  std::vector<std::vector<Vec2>> holes;
  Rgba color;
  double depth = 0.0;
};

struct RenderFrame {
  std::uint64_t tick = 0;
  double time = 0.0;
  std::vector<Layer> layers;  // painter's order: descending depth
};

// Point where the ray from the light through `point` meets the plane, or
// nothing when the ray is parallel or the plane is not beyond the point.
std::optional<Vec3> project_shadow_point(const Vec3& light, const Vec3& normal, double offset, const Vec3& point);

std::optional<Vec2> camera_project(const Camera& camera, const Vec3& point);
// Signed distance along the view direction.
double camera_depth(const Camera& camera, const Vec3& point);

// Sutherland-Hodgman clip of a polygon lying in a plane against a convex
// boundary polygon in the same plane; keeps unclipped vertices bit-exact.
std::vector<Vec3> clip_to_convex(std::span<const Vec3> subject, std::span<const Vec3> boundary, const Vec3& normal);

// World-space silhouette vertices of an avatar for a pose.
std::vector<Vec3> silhouette_world(const OavInstance& oav, const Pose& pose);

struct ShadowPolygon {
  std::vector<Vec3> outline;
  std::vector<std::vector<Vec3>> holes;
};

// Projects the silhouette onto the screen and clips it to the bounds. Empty
// when any vertex fails to project or nothing survives clipping.
std::optional<ShadowPolygon> cast_shadow(const PointLight& light, const Screen& screen,
                                         std::span<const Vec3> world_vertices, const SilhouetteMesh& mesh);

RenderFrame compose_frame(const CasteletScene& scene, std::span<const Pose> poses, std::uint64_t tick, double time);

namespace effect {
struct SetVisible {
  std::string oav;
  bool value = true;
};
struct SetCastsShadow {
  std::string oav;
  bool value = true;
};
struct MoveLight {
  std::string light;
  Vec3 position = Vec3::Zero();
};
struct SetTranslucency {
  std::string screen;
  double value = 1.0;
};
struct MoveOav {
  std::string oav;
  Vec3 position = Vec3::Zero();
  double yaw_deg = 0.0;
};
}  // namespace effect

using SceneEffect =
    std::variant<effect::SetVisible, effect::SetCastsShadow, effect::MoveLight, effect::SetTranslucency, effect::MoveOav>;

std::string describe(const SceneEffect& e);

// Returns a copy of the scene with the effect applied; throws EffectError
// when the target does not resolve or the value is out of range.
CasteletScene apply_scene_effect(const CasteletScene& scene, const SceneEffect& effect);
// In-place variant used by the engine.
void apply_scene_effect_in_place(CasteletScene& scene, const SceneEffect& effect);

}  // namespace castelet
