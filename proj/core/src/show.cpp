#include "castelet/show.hpp"

#include "castelet/bvh.hpp"
#include "castelet/error.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace castelet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-vector, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Rgba rgba(const json& j) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 4)) throw ValidationError("expected [r,g,b(,a)], got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j.size() == 4 ? j[3].get<double>() : 1.0};
}

}  // namespace

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

SceneEffect scene_effect_from_json(const json& j) {
  const std::string kind = j.at("effect").get<std::string>();
  if (kind == "set_visible") return effect::SetVisible{j.at("oav").get<std::string>(), j.at("value").get<bool>()};
  if (kind == "set_casts_shadow")
    return effect::SetCastsShadow{j.at("oav").get<std::string>(), j.at("value").get<bool>()};
  if (kind == "move_light") return effect::MoveLight{j.at("light").get<std::string>(), vec3(j.at("position"))};
  if (kind == "set_translucency")
    return effect::SetTranslucency{j.at("screen").get<std::string>(), j.at("value").get<double>()};
  if (kind == "move_oav")
    return effect::MoveOav{j.at("oav").get<std::string>(), vec3(j.at("position")), j.value("yaw_deg", 0.0)};
  throw ValidationError("unknown scene effect '" + kind + "'");
}

json scene_effect_to_json(const SceneEffect& e) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, effect::SetVisible>)
          return {{"effect", "set_visible"}, {"oav", x.oav}, {"value", x.value}};
        else if constexpr (std::is_same_v<T, effect::SetCastsShadow>)
          return {{"effect", "set_casts_shadow"}, {"oav", x.oav}, {"value", x.value}};
        else if constexpr (std::is_same_v<T, effect::MoveLight>)
          return {{"effect", "move_light"}, {"light", x.light}, {"position", vec3_json(x.position)}};
        else if constexpr (std::is_same_v<T, effect::SetTranslucency>)
          return {{"effect", "set_translucency"}, {"screen", x.screen}, {"value", x.value}};
        else
          return {{"effect", "move_oav"}, {"oav", x.oav}, {"position", vec3_json(x.position)}, {"yaw_deg", x.yaw_deg}};
      },
      e);
}

CueStep cue_step_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "trigger") return step::TriggerAction{j.at("oav").get<std::string>(), j.at("action").get<std::string>()};
  if (type == "suspend") return step::Suspend{j.at("oav").get<std::string>()};
  if (type == "set_live") return step::SetLive{j.at("oav").get<std::string>(), j.value("on", true)};
  if (type == "effect") return step::Effect{scene_effect_from_json(j)};
  if (type == "wait") return step::Wait{j.at("seconds").get<double>()};
  throw ValidationError("unknown cue step type '" + type + "'");
}

json cue_step_to_json(const CueStep& s) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, step::TriggerAction>)
          return {{"type", "trigger"}, {"oav", x.oav}, {"action", x.action}};
        else if constexpr (std::is_same_v<T, step::Suspend>)
          return {{"type", "suspend"}, {"oav", x.oav}};
        else if constexpr (std::is_same_v<T, step::SetLive>)
          return {{"type", "set_live"}, {"oav", x.oav}, {"on", x.on}};
        else if constexpr (std::is_same_v<T, step::Effect>) {
          json e = scene_effect_to_json(x.effect);
          e["type"] = "effect";
          return e;
        } else
          return {{"type", "wait"}, {"seconds", x.seconds}};
      },
      s);
}

ClipSidecar clip_sidecar_from_json(const json& j) {
  ClipSidecar s;
  s.id = j.at("id").get<std::string>();
  s.kind = parse_clip_kind(j.at("kind").get<std::string>());
  s.skeleton = j.at("skeleton").get<std::string>();
  s.bvh = j.value("bvh", s.id + ".bvh");
  s.start_idle = j.value("start_idle", "");
  s.end_idle = j.value("end_idle", "");
  s.unit_scale = j.value("unit_scale", 0.01);
  return s;
}

json clip_sidecar_to_json(const ClipSidecar& s) {
  json j = {{"id", s.id}, {"kind", std::string(to_string(s.kind))}, {"skeleton", s.skeleton}, {"bvh", s.bvh},
            {"unit_scale", s.unit_scale}};
  if (s.kind == ClipKind::action) {
    j["start_idle"] = s.start_idle;
    j["end_idle"] = s.end_idle;
  }
  return j;
}

SilhouetteMesh mesh_from_json(const json& j, const Skeleton& skeleton) {
  SilhouetteMesh m;
  for (const auto& v : j.at("vertices")) m.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  for (const auto& p : j.at("polygons")) m.polygons.push_back(p.get<std::vector<int>>());
  for (const auto& vw : j.at("weights")) {
    std::vector<SkinInfluence> infl;
    for (const auto& pair : vw) {
      int joint = -1;
      if (pair.at(0).is_string()) {
        const auto idx = skeleton.find(pair.at(0).get<std::string>());
        if (!idx) throw ValidationError("mesh weight names unknown joint '" + pair.at(0).get<std::string>() + "'");
        joint = static_cast<int>(*idx);
      } else {
        joint = pair.at(0).get<int>();
      }
      infl.push_back({joint, pair.at(1).get<double>()});
    }
    m.skin_weights.push_back(std::move(infl));
  }
  return m;
}

json mesh_to_json(const SilhouetteMesh& mesh, const Skeleton& skeleton) {
  json verts = json::array(), weights = json::array();
  for (const auto& v : mesh.vertices) verts.push_back({v.x(), v.y()});
  for (const auto& vw : mesh.skin_weights) {
    json a = json::array();
    for (const auto& inf : vw) a.push_back({skeleton.joint(static_cast<std::size_t>(inf.joint)).name, inf.weight});
    weights.push_back(std::move(a));
  }
  return {{"vertices", verts}, {"polygons", mesh.polygons}, {"weights", weights}};
}

std::optional<std::size_t> Show::avatar_index(std::string_view id) const {
  for (std::size_t i = 0; i < scene.oavs.size(); ++i)
    if (scene.oavs[i].id == id) return i;
  return std::nullopt;
}

std::string LoadReport::to_string() const {
  std::ostringstream os;
  for (const auto& e : errors) os << "error: " << e.where << ": " << e.message << '\n';
  for (const auto& w : warnings) os << "warning: " << w.where << ": " << w.message << '\n';
  os << errors.size() << " error(s), " << warnings.size() << " warning(s)\n";
  return os.str();
}

LoadError::LoadError(LoadReport report)
    : std::runtime_error("show failed to load with " + std::to_string(report.errors.size()) + " error(s)"),
      report_(std::move(report)) {}

namespace {

class Loader {
 public:
  explicit Loader(fs::path dir) : dir_(std::move(dir)) {}

  Show run(LoadReport& report) {
    report_ = &report;
    show_.bundle_dir = dir_;
    json manifest;
    try {
      manifest = read_json_file(dir_ / "show.json");
    } catch (const std::exception& e) {
      error("show.json", e.what());
      return std::move(show_);
    }
    guard("show.json", [&] { header(manifest); });
    guard("rigs", [&] { rigs(manifest.value("rigs", json::array())); });
    guard("clips", [&] { clips(manifest.value("clips_dir", std::string("clips"))); });
    guard("retargets", [&] { retargets(manifest.value("retargets", json::array())); });
    guard("scene", [&] { scene(manifest.at("scene")); });
    guard("oavs", [&] { avatars(manifest.value("oavs", json::array())); });
    guard("cues", [&] { cues(manifest.value("cues", json::array())); });
    if (report.errors.empty()) {
      guard("scene", [&] {
        for (auto& w : validate_scene(show_.scene)) warning("scene", w);
      });
    }
    show_.library = std::make_shared<const ClipLibrary>(std::move(library_));
    return std::move(show_);
  }

 private:
  void error(const std::string& where, const std::string& msg) { report_->errors.push_back({where, msg}); }
  void warning(const std::string& where, const std::string& msg) { report_->warnings.push_back({where, msg}); }

  template <class F>
  void guard(const std::string& where, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      error(where, e.what());
    }
  }

  void header(const json& m) {
    show_.name = m.value("name", dir_.filename().string());
    show_.tick_rate = m.value("tick_rate", 60.0);
    if (!(show_.tick_rate > 0.0)) error("show.json", "tick_rate must be positive");
    show_.chain_tolerance = m.value("chain_tolerance", kDefaultChainTolerance);
    default_fade_ = m.value("default_fade_duration", kDefaultFadeDurationSeconds);
    if (m.contains("spaces"))
      for (auto& [k, v] : m.at("spaces").items()) show_.spaces[k] = v.get<std::string>();
  }

  void rigs(const json& arr) {
    for (const auto& r : arr) {
      const std::string id = r.at("id").get<std::string>();
      guard("rig '" + id + "'", [&] {
        Skeleton sk = parse_bvh_hierarchy(read_text(dir_ / r.at("skeleton").get<std::string>()));
        SilhouetteMesh mesh = mesh_from_json(read_json_file(dir_ / r.at("mesh").get<std::string>()), sk);
        auto rig = Rig::make(id, std::move(sk), std::move(mesh));
        if (!show_.rigs.emplace(id, std::move(rig)).second) throw ValidationError("duplicate rig id");
      });
    }
  }

  void clips(const std::string& rel) {
    const fs::path cdir = dir_ / rel;
    if (!fs::exists(cdir)) return;
    std::vector<fs::path> sidecars;
    for (const auto& e : fs::directory_iterator(cdir)) {
      const std::string name = e.path().filename().string();
      if (name.size() > 10 && name.ends_with(".clip.json")) sidecars.push_back(e.path());
    }
    std::sort(sidecars.begin(), sidecars.end());
    for (const auto& p : sidecars) {
      guard(fs::relative(p, dir_).string(), [&] {
        const ClipSidecar sc = clip_sidecar_from_json(read_json_file(p));
        const auto rig = show_.rigs.find(sc.skeleton);
        if (rig == show_.rigs.end()) throw ValidationError("clip '" + sc.id + "' references unknown rig '" + sc.skeleton + "'");
        const BvhDocument doc = load_bvh_file((p.parent_path() / sc.bvh).string());
        const Skeleton& rs = rig->second->skeleton;
        bool same = doc.skeleton.size() == rs.size();
        for (std::size_t j = 0; same && j < rs.size(); ++j)
          same = doc.skeleton.joint(j).name == rs.joint(j).name && doc.skeleton.joint(j).parent == rs.joint(j).parent;
        if (!same) throw ValidationError("clip '" + sc.id + "' hierarchy does not match rig '" + sc.skeleton + "'");
        Take take = frames_to_take(doc, sc.unit_scale, sc.id);
        AnimationClip clip;
        clip.id = sc.id;
        clip.kind = sc.kind;
        clip.skeleton_ref = sc.skeleton;
        clip.samples = std::move(take.samples);
        clip.frame_time = doc.frame_time;
        clip.start_idle_id = sc.start_idle;
        clip.end_idle_id = sc.end_idle;
        library_.add(std::move(clip));
      });
    }
    for (const auto& v : library_.validate(show_.chain_tolerance).violations) {
      std::string msg = v.message;
      if (v.distance > 0.0) msg += " (distance " + std::to_string(v.distance) + ")";
      error("clip '" + v.from_clip + "'", msg);
    }
  }

  void retargets(const json& arr) {
    for (const auto& r : arr) {
      const std::string id = r.at("id").get<std::string>();
      guard("retarget '" + id + "'", [&] {
        Skeleton source = parse_bvh_hierarchy(read_text(dir_ / r.at("source_skeleton").get<std::string>()));
        const std::string rig_id = r.at("target_rig").get<std::string>();
        const auto rig = show_.rigs.find(rig_id);
        if (rig == show_.rigs.end()) throw ValidationError("unknown target rig '" + rig_id + "'");
        RetargetMap map;
        map.root_translation_scale = r.value("root_translation_scale", 1.0);
        for (const auto& e : r.value("entries", json::array())) {
          RetargetEntry entry{e.at("source").get<std::string>(), e.at("target").get<std::string>(), Quat::Identity()};
          if (e.contains("offset_quat")) {
            const auto& q = e.at("offset_quat");
            entry.rotation_offset = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                         q.at(3).get<double>());
          } else if (e.contains("offset_euler_deg")) {
            entry.rotation_offset =
                euler_to_quaternion(vec3(e.at("offset_euler_deg")), e.value("order", std::string("ZXY")));
          }
          map.entries.push_back(std::move(entry));
        }
        auto bound = std::make_shared<const BoundRetarget>(bind_map(map, source, rig->second->skeleton));
        (void)ChannelLayout(source);  // the stream must be convertible
        if (!bound->report().unmapped_target.empty())
          warning("retarget '" + id + "'", std::to_string(bound->report().unmapped_target.size()) +
                                               " target joint(s) held at rest");
        LiveInput li{id, std::move(bound), r.value("unit_scale", 0.01)};
        if (!retargets_.emplace(id, std::move(li)).second) throw ValidationError("duplicate retarget id");
      });
    }
  }

  void scene(const json& s) {
    CasteletScene& sc = show_.scene;
    if (s.contains("stage")) {
      sc.stage.min = vec3(s.at("stage").at("min"));
      sc.stage.max = vec3(s.at("stage").at("max"));
    }
    for (const auto& sj : s.value("screens", json::array())) {
      Screen screen;
      screen.name = sj.at("name").get<std::string>();
      const Vec3 n = vec3(sj.at("normal"));
      const double len = n.norm();
      if (!(len > 0.0)) {
        error("screen '" + screen.name + "'", "zero normal");
        continue;
      }
      screen.normal = n / len;
      screen.offset = sj.at("offset").get<double>() / len;
      for (const auto& p : sj.at("bounds")) screen.bounds.push_back(vec3(p));
      screen.translucency = sj.value("translucency", 1.0);
      sc.screens.push_back(std::move(screen));
    }
    for (const auto& lj : s.value("lights", json::array()))
      sc.lights.push_back({lj.at("name").get<std::string>(), vec3(lj.at("position")), lj.value("enabled", true)});
    if (s.contains("camera")) {
      const auto& cj = s.at("camera");
      Camera& c = sc.camera;
      const std::string kind = cj.value("kind", std::string("perspective"));
      if (kind != "perspective" && kind != "orthographic") throw ValidationError("unknown camera kind '" + kind + "'");
      c.kind = kind == "perspective" ? Camera::Kind::perspective : Camera::Kind::orthographic;
      if (cj.contains("position")) c.position = vec3(cj.at("position"));
      if (cj.contains("look")) c.look = vec3(cj.at("look"));
      if (cj.contains("up")) c.up = vec3(cj.at("up"));
      c.fov_y = cj.value("fov_y_deg", 45.0) * std::numbers::pi / 180.0;
      c.view_height = cj.value("view_height", 4.0);
      if (cj.contains("viewport")) {
        c.viewport_width = cj.at("viewport").at(0).get<double>();
        c.viewport_height = cj.at("viewport").at(1).get<double>();
      }
    }
    std::set<std::string> names;
    for (const auto& screen : sc.screens)
      if (!names.insert("screen:" + screen.name).second) error("scene", "duplicate screen '" + screen.name + "'");
    for (const auto& l : sc.lights)
      if (!names.insert("light:" + l.name).second) error("scene", "duplicate light '" + l.name + "'");
  }

  void avatars(const json& arr) {
    std::set<std::string> ids;
    for (const auto& oj : arr) {
      const std::string id = oj.at("id").get<std::string>();
      const std::string where = "oav '" + id + "'";
      if (!ids.insert(id).second) {
        error(where, "duplicate avatar id");
        continue;
      }
      OavInstance oav;
      oav.id = id;
      AvatarConfig cfg;
      cfg.id = id;
      const std::string rig_id = oj.at("rig").get<std::string>();
      const auto rig = show_.rigs.find(rig_id);
      if (rig == show_.rigs.end()) {
        error(where, "unknown rig '" + rig_id + "'");
        continue;
      }
      oav.rig = rig->second;
      oav.position = oj.contains("position") ? vec3(oj.at("position")) : Vec3::Zero();
      oav.yaw_deg = oj.value("yaw_deg", 0.0);
      oav.visible = oj.value("visible", true);
      oav.casts_shadow = oj.value("casts_shadow", true);
      if (oj.contains("tint")) oav.tint = rgba(oj.at("tint"));
      cfg.fade_duration = oj.value("fade_duration", default_fade_);
      if (!(cfg.fade_duration >= 0.0)) error(where, "fade_duration must be nonnegative");
      cfg.initial_idle = oj.at("initial_idle").get<std::string>();
      const AnimationClip* idle = library_.find(cfg.initial_idle);
      if (!idle) error(where, "unknown initial idle '" + cfg.initial_idle + "'");
      else if (idle->kind != ClipKind::idle) error(where, "initial clip '" + cfg.initial_idle + "' is not an idle");
      else if (idle->skeleton_ref != rig_id) error(where, "initial idle '" + cfg.initial_idle + "' uses another rig");
      if (oj.contains("live_retarget")) {
        const std::string rid = oj.at("live_retarget").get<std::string>();
        const auto it = retargets_.find(rid);
        if (it == retargets_.end()) error(where, "unknown live retarget '" + rid + "'");
        else if (!it->second.binding->target().same_topology(rig->second->skeleton))
          error(where, "live retarget '" + rid + "' targets another rig");
        else cfg.live = it->second;
      }
      show_.scene.oavs.push_back(std::move(oav));
      show_.avatars.push_back(std::move(cfg));
    }
  }

  void check_step(const CueStep& s, const std::string& where) {
    auto avatar = [&](const std::string& id) -> const AvatarConfig* {
      for (const auto& a : show_.avatars)
        if (a.id == id) return &a;
      error(where, "unknown oav '" + id + "'");
      return nullptr;
    };
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, step::TriggerAction>) {
            avatar(x.oav);
            const AnimationClip* c = library_.find(x.action);
            if (!c) error(where, "unknown action '" + x.action + "'");
            else if (c->kind != ClipKind::action) error(where, "clip '" + x.action + "' is not an action");
            else if (const auto* o = show_.scene.find_oav(x.oav); o && o->rig->id != c->skeleton_ref)
              error(where, "action '" + x.action + "' uses rig '" + c->skeleton_ref + "', oav '" + x.oav +
                               "' uses '" + o->rig->id + "'");
          } else if constexpr (std::is_same_v<T, step::Suspend>) {
            avatar(x.oav);
          } else if constexpr (std::is_same_v<T, step::SetLive>) {
            const AvatarConfig* a = avatar(x.oav);
            if (a && !a->live) error(where, "oav '" + x.oav + "' has no live retarget");
          } else if constexpr (std::is_same_v<T, step::Effect>) {
            try {
              (void)apply_scene_effect(show_.scene, x.effect);
            } catch (const EffectError& e) {
              error(where, e.what());
            }
          } else {
            if (!(x.seconds >= 0.0)) error(where, "wait must be nonnegative");
          }
        },
        s);
  }

  void cues(const json& arr) {
    std::set<std::string> labels;
    std::size_t index = 0;
    for (const auto& cj : arr) {
      Cue cue;
      cue.index = index++;
      cue.label = cj.value("label", "cue " + std::to_string(cue.index));
      const std::string where = "cue " + std::to_string(cue.index) + " ('" + cue.label + "')";
      if (!labels.insert(cue.label).second) error(where, "duplicate label");
      for (const auto& sj : cj.value("steps", json::array())) {
        try {
          cue.steps.push_back(cue_step_from_json(sj));
          check_step(cue.steps.back(), where);
        } catch (const std::exception& e) {
          error(where, e.what());
        }
      }
      show_.cues.push_back(std::move(cue));
    }
  }

  static constexpr double kDefaultFadeDurationSeconds = 0.4;

  fs::path dir_;
  LoadReport* report_ = nullptr;
  Show show_;
  ClipLibrary library_;
  std::map<std::string, LiveInput> retargets_;
  double default_fade_ = kDefaultFadeDurationSeconds;
};

}  // namespace

Show load_show(const fs::path& bundle, LoadReport* report_out) {
  LoadReport report;
  Show show = Loader(bundle).run(report);
  if (report_out) *report_out = report;
  if (!report.ok()) throw LoadError(std::move(report));
  return show;
}

}  // namespace castelet
