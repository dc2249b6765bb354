#include "castelet/scene.hpp"

#include "castelet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace castelet {

std::shared_ptr<const Rig> Rig::make(std::string id, Skeleton skeleton, SilhouetteMesh mesh) {
  validate_mesh(mesh, skeleton);
  auto rig = std::make_shared<Rig>();
  rig->id = std::move(id);
  rig->bind_inverse = bind_pose(skeleton);
  for (auto& t : rig->bind_inverse) t = t.inverse();
  rig->skeleton = std::move(skeleton);
  rig->mesh = std::move(mesh);
  return rig;
}

Transform OavInstance::root_transform() const {
  return {Quat(Eigen::AngleAxisd(yaw_deg * std::numbers::pi / 180.0, Vec3::UnitY())), position};
}

const OavInstance* CasteletScene::find_oav(std::string_view id) const {
  for (const auto& o : oavs)
    if (o.id == id) return &o;
  return nullptr;
}

void validate_camera(const Camera& camera) {
  if (!(camera.look.norm() > 0.0) || !(camera.up.norm() > 0.0))
    throw ValidationError("camera look/up vectors must be nonzero");
  if (camera.look.normalized().cross(camera.up.normalized()).norm() < 1e-9)
    throw ValidationError("camera look and up are parallel");
  if (camera.kind == Camera::Kind::perspective && !(camera.fov_y > 0.0 && camera.fov_y < std::numbers::pi))
    throw ValidationError("camera field of view must lie in (0, pi)");
  if (camera.kind == Camera::Kind::orthographic && !(camera.view_height > 0.0))
    throw ValidationError("orthographic view height must be positive");
  if (!(camera.viewport_width > 0.0 && camera.viewport_height > 0.0))
    throw ValidationError("viewport must have positive size");
}

namespace {

Vec3 newell_normal(std::span<const Vec3> poly) {
  Vec3 n = Vec3::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % poly.size()];
    n += a.cross(b);
  }
  return n;
}

Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return pts.empty() ? c : Vec3(c / static_cast<double>(pts.size()));
}

}  // namespace

std::vector<std::string> validate_scene(const CasteletScene& scene) {
  std::vector<std::string> warnings;
  validate_camera(scene.camera);
  for (const auto& s : scene.screens) {
    if (std::abs(s.normal.norm() - 1.0) > 1e-9) throw ValidationError("screen '" + s.name + "' normal is not unit length");
    if (!(s.translucency >= 0.0 && s.translucency <= 1.0))
      throw ValidationError("screen '" + s.name + "' translucency outside [0,1]");
    if (s.bounds.size() < 3) throw ValidationError("screen '" + s.name + "' needs at least 3 bound vertices");
    for (const auto& p : s.bounds)
      if (std::abs(s.normal.dot(p) - s.offset) > 1e-6)
        throw ValidationError("screen '" + s.name + "' bound vertex lies off its plane");
    const Vec3 nb = newell_normal(s.bounds);
    const double sign = nb.dot(s.normal) >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < s.bounds.size(); ++i) {
      const Vec3& a = s.bounds[i];
      const Vec3& b = s.bounds[(i + 1) % s.bounds.size()];
      const Vec3& c = s.bounds[(i + 2) % s.bounds.size()];
      if (sign * (b - a).cross(c - b).dot(s.normal) < -1e-12)
        throw ValidationError("screen '" + s.name + "' bounds are not convex");
    }
  }
  bool any_caster = false;
  for (const auto& o : scene.oavs) {
    if (!o.rig) throw ValidationError("avatar '" + o.id + "' has no rig");
    if (!(o.tint.a >= 0.0 && o.tint.a <= 1.0)) throw ValidationError("avatar '" + o.id + "' alpha outside [0,1]");
    any_caster = any_caster || o.casts_shadow;
  }
  const bool any_light = std::any_of(scene.lights.begin(), scene.lights.end(), [](const auto& l) { return l.enabled; });
  if (any_caster && !any_light) warnings.emplace_back("shadow-casting avatars present but no light is enabled");
  return warnings;
}

std::optional<Vec3> project_shadow_point(const Vec3& light, const Vec3& normal, double offset, const Vec3& point) {
  const Vec3 dir = point - light;
  const double denom = normal.dot(dir);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (offset - normal.dot(light)) / denom;
  if (t < 1.0) return std::nullopt;
  if (t == 1.0) return point;
  return Vec3(light + t * dir);
}

double camera_depth(const Camera& camera, const Vec3& point) {
  return (point - camera.position).dot(camera.look.normalized());
}

std::optional<Vec2> camera_project(const Camera& camera, const Vec3& point) {
  const Vec3 f = camera.look.normalized();
  const Vec3 r = f.cross(camera.up).normalized();
  const Vec3 u = r.cross(f);
  const Vec3 p = point - camera.position;
  const double x = p.dot(r);
  const double y = p.dot(u);
  const double aspect = camera.viewport_width / camera.viewport_height;
  double nx = 0.0;
  double ny = 0.0;
  if (camera.kind == Camera::Kind::perspective) {
    const double z = p.dot(f);
    if (z <= 1e-9) return std::nullopt;
    const double half = std::tan(camera.fov_y / 2.0);
    ny = y / (z * half);
    nx = x / (z * half * aspect);
  } else {
    const double half = camera.view_height / 2.0;
    ny = y / half;
    nx = x / (half * aspect);
  }
  return Vec2(camera.viewport_width / 2.0 * (1.0 + nx), camera.viewport_height / 2.0 * (1.0 - ny));
}

std::vector<Vec3> clip_to_convex(std::span<const Vec3> subject, std::span<const Vec3> boundary, const Vec3& normal) {
  std::vector<Vec3> out(subject.begin(), subject.end());
  if (boundary.size() < 3) return {};
  const double sign = newell_normal(boundary).dot(normal) >= 0.0 ? 1.0 : -1.0;
  std::vector<Vec3> in;
  for (std::size_t e = 0; e < boundary.size() && !out.empty(); ++e) {
    const Vec3& a = boundary[e];
    const Vec3 edge = boundary[(e + 1) % boundary.size()] - a;
    auto side = [&](const Vec3& p) { return sign * edge.cross(p - a).dot(normal); };
    in.swap(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec3& cur = in[i];
      const Vec3& prev = in[(i + in.size() - 1) % in.size()];
      const double dc = side(cur);
      const double dp = side(prev);
      if (dc >= 0.0) {
        if (dp < 0.0) out.push_back(prev + (dp / (dp - dc)) * (cur - prev));
        out.push_back(cur);
      } else if (dp >= 0.0) {
        out.push_back(prev + (dp / (dp - dc)) * (cur - prev));
      }
    }
  }
  return out;
}

std::vector<Vec3> silhouette_world(const OavInstance& oav, const Pose& pose) {
  const Rig& rig = *oav.rig;
  const auto fk = forward_kinematics(rig.skeleton, pose);
  auto verts = skin_silhouette(rig.mesh, rig.bind_inverse, fk);
  const Transform root = oav.root_transform();
  for (auto& v : verts) v = root.apply(v);
  return verts;
}

std::optional<ShadowPolygon> cast_shadow(const PointLight& light, const Screen& screen,
                                         std::span<const Vec3> world_vertices, const SilhouetteMesh& mesh) {
  std::vector<Vec3> projected(world_vertices.size());
  for (std::size_t i = 0; i < world_vertices.size(); ++i) {
    auto s = project_shadow_point(light.position, screen.normal, screen.offset, world_vertices[i]);
    if (!s) return std::nullopt;
    projected[i] = *s;
  }
  auto ring = [&](const std::vector<int>& idx) {
    std::vector<Vec3> r;
    r.reserve(idx.size());
    for (int k : idx) r.push_back(projected[static_cast<std::size_t>(k)]);
    return clip_to_convex(r, screen.bounds, screen.normal);
  };
  ShadowPolygon poly;
  poly.outline = ring(mesh.polygons.front());
  if (poly.outline.size() < 3) return std::nullopt;
  for (std::size_t h = 1; h < mesh.polygons.size(); ++h) {
    auto hole = ring(mesh.polygons[h]);
    if (hole.size() >= 3) poly.holes.push_back(std::move(hole));
  }
  return poly;
}

namespace {

bool project_ring(const Camera& cam, std::span<const Vec3> ring, std::vector<Vec2>& out) {
  out.clear();
  out.reserve(ring.size());
  for (const auto& p : ring) {
    auto v = camera_project(cam, p);
    if (!v) return false;
    out.push_back(*v);
  }
  return true;
}

}  // namespace

RenderFrame compose_frame(const CasteletScene& scene, std::span<const Pose> poses, std::uint64_t tick, double time) {
  if (poses.size() != scene.oavs.size())
    throw ContractError("compose_frame needs one pose per avatar (" + std::to_string(scene.oavs.size()) + "), got " +
                        std::to_string(poses.size()));
  RenderFrame frame;
  frame.tick = tick;
  frame.time = time;
  std::vector<Vec3> ring3;
  for (std::size_t i = 0; i < scene.oavs.size(); ++i) {
    const OavInstance& oav = scene.oavs[i];
    if (!oav.visible && !oav.casts_shadow) continue;
    const Rig& rig = *oav.rig;
    const auto fk = forward_kinematics(rig.skeleton, poses[i]);
    auto verts = skin_silhouette(rig.mesh, rig.bind_inverse, fk);
    const Transform root = oav.root_transform();
    for (auto& v : verts) v = root.apply(v);

    if (oav.visible) {
      Layer layer;
      layer.kind = Layer::Kind::silhouette;
      layer.oav = oav.id;
      layer.color = oav.tint;
      layer.depth = camera_depth(scene.camera, root.apply(fk[0].translation));
      bool ok = true;
      for (std::size_t p = 0; p < rig.mesh.polygons.size() && ok; ++p) {
        ring3.clear();
        for (int k : rig.mesh.polygons[p]) ring3.push_back(verts[static_cast<std::size_t>(k)]);
        std::vector<Vec2> ring2;
        ok = project_ring(scene.camera, ring3, ring2);
        if (p == 0) layer.polygon = std::move(ring2);
        else layer.holes.push_back(std::move(ring2));
      }
      if (ok) frame.layers.push_back(std::move(layer));
    }

    if (!oav.casts_shadow) continue;
    for (const auto& light : scene.lights) {
      if (!light.enabled) continue;
      for (const auto& screen : scene.screens) {
        auto shadow = cast_shadow(light, screen, verts, rig.mesh);
        if (!shadow) continue;
        Layer layer;
        layer.kind = Layer::Kind::shadow;
        layer.oav = oav.id;
        layer.light = light.name;
        layer.screen = screen.name;
        layer.color = Rgba{0.0, 0.0, 0.0, screen.translucency * oav.tint.a};
        layer.depth = camera_depth(scene.camera, centroid(screen.bounds));
        if (!project_ring(scene.camera, shadow->outline, layer.polygon)) continue;
        bool ok = true;
        for (const auto& hole : shadow->holes) {
          std::vector<Vec2> h;
          ok = ok && project_ring(scene.camera, hole, h);
          layer.holes.push_back(std::move(h));
        }
        if (ok) frame.layers.push_back(std::move(layer));
      }
    }
  }
  std::stable_sort(frame.layers.begin(), frame.layers.end(),
                   [](const Layer& a, const Layer& b) { return a.depth > b.depth; });
  return frame;
}

std::string describe(const SceneEffect& e) {
  std::ostringstream os;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, effect::SetVisible>) os << "set_visible(" << x.oav << ", " << x.value << ")";
        else if constexpr (std::is_same_v<T, effect::SetCastsShadow>)
          os << "set_casts_shadow(" << x.oav << ", " << x.value << ")";
        else if constexpr (std::is_same_v<T, effect::MoveLight>)
          os << "move_light(" << x.light << ", " << x.position.transpose() << ")";
        else if constexpr (std::is_same_v<T, effect::SetTranslucency>)
          os << "set_translucency(" << x.screen << ", " << x.value << ")";
        else os << "move_oav(" << x.oav << ", " << x.position.transpose() << ", " << x.yaw_deg << ")";
      },
      e);
  return os.str();
}

namespace {

OavInstance& oav_ref(CasteletScene& s, const std::string& id) {
  for (auto& o : s.oavs)
    if (o.id == id) return o;
  throw EffectError("unknown avatar '" + id + "'");
}

}  // namespace

void apply_scene_effect_in_place(CasteletScene& scene, const SceneEffect& e) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, effect::SetVisible>) {
          oav_ref(scene, x.oav).visible = x.value;
        } else if constexpr (std::is_same_v<T, effect::SetCastsShadow>) {
          oav_ref(scene, x.oav).casts_shadow = x.value;
        } else if constexpr (std::is_same_v<T, effect::MoveLight>) {
          if (!x.position.allFinite()) throw EffectError("light position must be finite");
          for (auto& l : scene.lights)
            if (l.name == x.light) {
              l.position = x.position;
              return;
            }
          throw EffectError("unknown light '" + x.light + "'");
        } else if constexpr (std::is_same_v<T, effect::SetTranslucency>) {
          if (!(x.value >= 0.0 && x.value <= 1.0)) throw EffectError("translucency outside [0,1]");
          for (auto& s : scene.screens)
            if (s.name == x.screen) {
              s.translucency = x.value;
              return;
            }
          throw EffectError("unknown screen '" + x.screen + "'");
        } else {
          if (!x.position.allFinite() || !std::isfinite(x.yaw_deg)) throw EffectError("avatar placement must be finite");
          OavInstance& o = oav_ref(scene, x.oav);
          o.position = x.position;
          o.yaw_deg = x.yaw_deg;
        }
      },
      e);
}

CasteletScene apply_scene_effect(const CasteletScene& scene, const SceneEffect& e) {
  CasteletScene out = scene;
  apply_scene_effect_in_place(out, e);
  return out;
}

}  // namespace castelet
