#include "castelet/bvh.hpp"
#include "castelet/clips.hpp"
#include "castelet/control.hpp"
#include "castelet/engine.hpp"
#include "castelet/fsm.hpp"
#include "castelet/retarget.hpp"
#include "castelet/scene.hpp"
#include "castelet/service.hpp"
#include "castelet/session.hpp"
#include "castelet/show.hpp"
#include "castelet/stream.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include <boost/asio.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace castelet;
namespace tk = castelet::testkit;
namespace fs = std::filesystem;
using nlohmann::json;
using oracle::Mat3;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// BVH round trip on the corpus.
Outcome bvh_round_trip() {
  double drift = 0.0;
  bool structural = true;
  std::size_t files = 0;
  for (const char* name : {"neuron_59.bvh", "cmu_style.bvh", "tab_xyz.bvh"}) {
    const BvhDocument doc = load_bvh_file(tk::corpus_file(name).string());
    const BvhDocument back = parse_bvh(serialize_bvh(doc));
    ++files;
    bool same = back.skeleton.same_topology(doc.skeleton) && back.frames.size() == doc.frames.size() &&
                back.frame_time == doc.frame_time;
    for (std::size_t j = 0; same && j < doc.skeleton.size(); ++j) {
      const Joint& a = doc.skeleton.joint(j);
      const Joint& b = back.skeleton.joint(j);
      same = a.offset == b.offset && a.end_site.has_value() == b.end_site.has_value() &&
             (!a.end_site || *a.end_site == *b.end_site);
    }
    for (std::size_t f = 0; same && f < doc.frames.size(); ++f) {
      same = doc.frames[f].size() == back.frames[f].size();
      for (std::size_t c = 0; same && c < doc.frames[f].size(); ++c)
        drift = std::max(drift, std::abs(doc.frames[f][c] - back.frames[f][c]));
    }
    if (!same) std::cout << "  structure differs after round trip: " << name << '\n';
    structural = structural && same;
  }
  return {structural && drift < 1e-4, fmt("%zu files, structure %s, max drift %.3g", files,
                                          structural ? "exact" : "DIFFERS", drift)};
}

// Forward kinematics against dense 4x4 products.
Outcome fk_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> joints(1, 10);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Skeleton sk = tk::random_skeleton(joints(rng), rng);
    const Pose pose = tk::random_pose(sk, rng, 180.0);
    const auto world = forward_kinematics(sk, pose);
    const auto dense = oracle::dense_fk(sk, pose);
    for (std::size_t j = 0; j < sk.size(); ++j)
      worst = std::max(worst, (world[j].translation - dense[j].block<3, 1>(0, 3)).norm());
  }
  return {worst < 1e-9, fmt("1000 instances, max position error %.3g m", worst)};
}

// Idle rotating 0 -> 30 degrees about z, sampled on the 60 Hz grid.
Outcome palindrome_continuity() {
  const double ft = 1.0 / 60.0;
  const std::size_t n = 121;
  AnimationClip idle;
  idle.id = "sweep";
  idle.kind = ClipKind::idle;
  idle.skeleton_ref = "one";
  idle.frame_time = ft;
  for (std::size_t i = 0; i < n; ++i) {
    Pose p = Pose::identity(2);
    const double a = oracle::rad(30.0 * static_cast<double>(i) / static_cast<double>(n - 1));
    p.rotations[0] = Quat(Eigen::AngleAxisd(a, Vec3::UnitZ()));
    p.rotations[1] = Quat(Eigen::AngleAxisd(0.5 * a, Vec3::UnitX()));
    idle.samples.push_back({static_cast<double>(i) * ft, p});
  }
  double intra = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    intra = std::max(intra, pose_distance(idle.samples[i].pose, idle.samples[i + 1].pose));

  double pal = 0.0, loop = 0.0;
  const int ticks = 4 * static_cast<int>(n);
  Pose prev_pal = sample_palindrome(idle, 0.0), prev_loop = sample_forward_loop(idle, 0.0);
  for (int k = 1; k <= ticks; ++k) {
    const double t = k / 60.0;
    const Pose p = sample_palindrome(idle, t), q = sample_forward_loop(idle, t);
    pal = std::max(pal, pose_distance(prev_pal, p));
    loop = std::max(loop, pose_distance(prev_loop, q));
    prev_pal = p;
    prev_loop = q;
  }
  const bool pass = std::abs(pal - intra) <= 1e-9 && loop > pal && loop >= 10.0 * pal;
  return {pass, fmt("palindrome max %.6g rad, intra-clip max %.6g rad, wrap jump %.6g rad (%.1fx)", pal, intra, loop,
                    loop / pal)};
}

// Split random takes in three and join them back.
Outcome split_reassemble() {
  std::mt19937_64 rng(2024);
  std::size_t exact = 0;
  double worst_boundary = 0.0, worst_time = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Skeleton sk = tk::random_skeleton(std::uniform_int_distribution<std::size_t>(2, 12)(rng), rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(8, 300)(rng);
    const double ft = std::array{1.0 / 30.0, 1.0 / 60.0, 1.0 / 120.0, 0.0125}[c % 4];
    Take take;
    take.id = "take";
    take.skeleton_ref = "rig";
    take.frame_time = ft;
    for (std::size_t i = 0; i < n; ++i) take.samples.push_back({static_cast<double>(i) * ft, tk::random_pose(sk, rng, 90.0)});
    const std::size_t k1 = std::uniform_int_distribution<std::size_t>(1, n - 4)(rng);
    const std::size_t k2 = std::uniform_int_distribution<std::size_t>(k1 + 1, n - 2)(rng);
    std::uniform_real_distribution<double> jitter(-0.4 * ft, 0.4 * ft);
    const SplitResult parts = split_take(take, static_cast<double>(k1) * ft + jitter(rng),
                                         static_cast<double>(k2) * ft + jitter(rng), {"in", "act", "out"});
    const std::array<const AnimationClip*, 3> seq{&parts.idle_start, &parts.action, &parts.idle_end};
    const Take back = concatenate_clips(seq, "back");

    bool same = back.samples.size() == take.samples.size() && parts.action.samples.size() == k2 - k1 + 1;
    for (std::size_t i = 0; same && i < n; ++i) {
      same = back.samples[i].pose == take.samples[i].pose;
      worst_time = std::max(worst_time, std::abs(back.samples[i].time - take.samples[i].time));
    }
    worst_boundary = std::max({worst_boundary,
                               pose_distance(parts.action.samples.front().pose, parts.idle_start.samples.back().pose),
                               pose_distance(parts.action.samples.back().pose, parts.idle_end.samples.front().pose)});
    if (same) ++exact;
  }
  const bool pass = exact == 100 && worst_boundary == 0.0 && worst_time <= 1e-9;
  return {pass, fmt("%zu/100 reassembled pose-exact, boundary distance %.3g, timestamp drift %.3g s", exact,
                    worst_boundary, worst_time)};
}

// Random operator sequences against the animation state machine.
Outcome fsm_safety() {
  std::mt19937_64 rng(77);
  const Skeleton sk = tk::random_skeleton(6, rng);
  const Pose p0 = tk::random_pose(sk, rng, 25), p1 = tk::random_pose(sk, rng, 25), p2 = tk::random_pose(sk, rng, 25);
  const double ft = 1.0 / 60.0;
  ClipLibrary lib;
  lib.add(tk::smooth_clip("I0", ClipKind::idle, "rig", p0, p0, 61, ft, 4.0, rng));
  lib.add(tk::smooth_clip("I1", ClipKind::idle, "rig", p1, p1, 61, ft, 4.0, rng));
  lib.add(tk::smooth_clip("I2", ClipKind::idle, "rig", p2, p2, 61, ft, 4.0, rng));
  auto act = [&](const std::string& id, const Pose& a, const Pose& b, const std::string& s, const std::string& e) {
    AnimationClip c = tk::smooth_clip(id, ClipKind::action, "rig", a, b, 31, ft, 20.0, rng);
    c.start_idle_id = s;
    c.end_idle_id = e;
    lib.add(std::move(c));
  };
  act("A1", p0, p1, "I0", "I1");
  act("A2", p1, p2, "I1", "I2");
  act("A3", p2, p0, "I2", "I0");
  auto binding = std::make_shared<BoundRetarget>(bind_map(identity_map(sk, sk), sk, sk));
  const std::array<std::string, 3> actions{"A1", "A2", "A3"};
  const std::array<double, 3> fades{0.1, 0.25, 0.4};
  std::uniform_real_distribution<double> dt_any(1e-4, 0.2);

  std::size_t illegal = 0, broken_chain = 0, negative = 0, ticks = 0;
  double worst_sum = 0.0;
  for (int seq = 0; seq < 10000; ++seq) {
    OavFsm fsm(lib, "I" + std::to_string(seq % 3), fades[static_cast<std::size_t>(seq) % 3]);
    fsm.set_live_binding(binding);
    FsmState state = fsm.state();
    const int events = std::uniform_int_distribution<int>(5, 30)(rng);
    for (int e = 0; e < events; ++e) {
      switch (std::uniform_int_distribution<int>(0, 9)(rng)) {
        case 0: case 1: case 2: case 3: fsm.trigger_action(actions[rng() % 3], lib); break;
        case 4: fsm.suspend(); break;
        case 5: fsm.set_live(true, lib); break;
        case 6: fsm.set_live(false, lib); break;
        default: break;
      }
      const int n = std::uniform_int_distribution<int>(1, 6)(rng);
      for (int k = 0; k < n; ++k) {
        const double dt = rng() % 2 ? 1.0 / 60.0 : dt_any(rng);
        const Pose streamed = tk::random_pose(sk, rng, 40.0);
        fsm.tick(dt, lib, rng() % 3 == 0 ? &streamed : nullptr);
        ++ticks;
        const FsmSnapshot s = fsm.snapshot();
        for (const auto& t : s.transitions) {
          if (!is_legal_transition(t.from, t.to)) ++illegal;
          if (t.from != state) ++broken_chain;
          state = t.to;
        }
        if (state != fsm.state()) ++broken_chain;
        state = fsm.state();
        double sum = 0.0;
        for (const auto& m : s.mix) {
          if (!(m.weight >= 0.0)) ++negative;
          sum += m.weight;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      }
    }
  }
  const bool pass = illegal == 0 && broken_chain == 0 && negative == 0 && worst_sum <= 1e-6;
  return {pass, fmt("10000 sequences, %zu ticks, %zu illegal, %zu unreported, %zu negative weights, max |sum-1| %.3g",
                    ticks, illegal, broken_chain, negative, worst_sum)};
}

Vec3 unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

Vec3 perpendicular(const Vec3& n) { return (std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(n).normalized(); }

CasteletScene flag_scene(bool visible, bool casts) {
  Skeleton sk({Joint{"root", -1, Vec3::Zero(), {"Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation",
                                                "Yrotation"},
                     {}}});
  SilhouetteMesh mesh;
  mesh.vertices = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
  mesh.polygons = {{0, 1, 2, 3}};
  mesh.skin_weights.assign(4, {SkinInfluence{0, 1.0}});
  CasteletScene s;
  s.camera.kind = Camera::Kind::orthographic;
  s.camera.position = Vec3(0, 0, 20);
  s.camera.look = -Vec3::UnitZ();
  s.camera.view_height = 20.0;
  for (int i = 0; i < 2; ++i) {
    const double z = -static_cast<double>(i);
    Screen w;
    w.name = "wall" + std::to_string(i);
    w.offset = z;
    w.bounds = {{-50, -50, z}, {50, -50, z}, {50, 50, z}, {-50, 50, z}};
    s.screens.push_back(w);
    s.lights.push_back(PointLight{"lamp" + std::to_string(i), Vec3(0.1 * i, 0, 2), true});
  }
  OavInstance o;
  o.id = "sq";
  o.rig = Rig::make("square", std::move(sk), std::move(mesh));
  o.position = Vec3(0, 0, 1);
  o.visible = visible;
  o.casts_shadow = casts;
  s.oavs.push_back(o);
  return s;
}

// Shadow projection, similar triangles and the visibility flag matrix.
Outcome shadow_correctness() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double plane_err = 0.0, line_err = 0.0, similar_err = 0.0;
  std::size_t unprojected = 0, vertices = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 n = unit(rng);
    const double d = 4.0 * u(rng) - 2.0;
    const Vec3 t1 = perpendicular(n), t2 = n.cross(t1);
    const double h = 1.0 + 4.0 * u(rng);
    const Vec3 light = n * (d + h) + t1 * (2 * u(rng) - 1) + t2 * (2 * u(rng) - 1);
    const double frac = 0.15 + 0.7 * u(rng);
    const Vec3 centre = light - n * (h * frac) + 0.3 * (t1 * (2 * u(rng) - 1) + t2 * (2 * u(rng) - 1));
    const double radius = 0.9 * std::min(frac, 1.0 - frac) * h;
    const bool parallel = i % 4 == 0;
    const Vec3 pn = parallel ? n : unit(rng);
    const Vec3 a1 = perpendicular(pn), a2 = pn.cross(a1);
    const int sides = 3 + static_cast<int>(rng() % 6);
    std::vector<Vec3> poly;
    for (int k = 0; k < sides; ++k) {
      const double ang = 2.0 * std::numbers::pi * (k + 0.3 * u(rng)) / sides;
      poly.push_back(centre + radius * (0.4 + 0.6 * u(rng)) * (std::cos(ang) * a1 + std::sin(ang) * a2));
    }
    for (const Vec3& v : poly) {
      ++vertices;
      const auto s = project_shadow_point(light, n, d, v);
      if (!s) {
        ++unprojected;
        continue;
      }
      plane_err = std::max(plane_err, std::abs(n.dot(*s) - d));
      line_err = std::max(line_err, (*s - light).cross(v - light).norm() / (v - light).norm());
      if (parallel) {
        const double hl = n.dot(light) - d, hv = n.dot(v) - d;
        similar_err = std::max(similar_err, (*s - (light + (v - light) * hl / (hl - hv))).norm());
      }
    }
  }

  using Entry = std::tuple<int, std::string, std::string, std::string>;
  std::size_t matrix_ok = 0;
  for (bool visible : {false, true})
    for (bool casts : {false, true}) {
      const CasteletScene s = flag_scene(visible, casts);
      const std::vector<Pose> poses{Pose::identity(1)};
      const RenderFrame f = compose_frame(s, poses, 0, 0.0);
      std::multiset<Entry> got, want;
      for (const auto& l : f.layers) got.insert({static_cast<int>(l.kind), l.oav, l.light, l.screen});
      if (visible) want.insert({static_cast<int>(Layer::Kind::silhouette), "sq", "", ""});
      if (casts)
        for (const auto& light : {"lamp0", "lamp1"})
          for (const auto& screen : {"wall0", "wall1"})
            want.insert({static_cast<int>(Layer::Kind::shadow), "sq", light, screen});
      if (got == want) ++matrix_ok;
    }
  const bool pass = unprojected == 0 && plane_err <= 1e-9 && line_err <= 1e-9 && similar_err <= 1e-9 && matrix_ok == 4;
  return {pass, fmt("%zu vertices (%zu unprojected), plane %.3g, collinearity %.3g, similar triangles %.3g, "
                    "flag matrix %zu/4",
                    vertices, unprojected, plane_err, line_err, similar_err, matrix_ok)};
}

std::string read_first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

// Headless renders of the demo and replay of a live session log.
Outcome determinism() {
  const fs::path bundle = tk::demo_bundle();
  const Show show = load_show(bundle);
  const Script script = script_from_json(read_json_file(bundle / "script.json"), show.tick_rate);
  Engine a(show), b(show);
  const RenderResult ra = run_script(a, script), rb = run_script(b, script);
  const bool renders = ra.hashes == rb.hashes && ra.final_hash == rb.final_hash && ra.ticks == script.ticks;

  std::stringstream log;
  {
    Engine live(show);
    live.set_event_sink([&](const json& r) { log << r.dump() << '\n'; });
    live.set_hash_frames(true);
    EngineRunner runner(live);
    MocapServer mocap(runner, live, MocapServerOptions{"127.0.0.1", 0, "shadow"});
    mocap.start();
    runner.start();
    auto control = [&](const std::string& text) {
      const ControlMessage m = parse_control(std::string_view(text));
      runner.post([m](Engine& e) { apply_control(e, m); });
    };
    control(R"({"type":"go"})");
    control(R"({"type":"goto","args":{"index":2}})");
    control(R"({"type":"go"})");
    control(R"({"type":"set_live","args":{"oav":"shadow","on":true}})");
    StreamClientOptions o;
    o.port = mocap.port();
    o.rate = 60.0;
    const std::string rejected = stream_bvh(load_bvh_file(tk::corpus_file("neuron_59.bvh").string()), o);
    if (!rejected.empty()) std::cout << "  mocap stream rejected: " << rejected << '\n';
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    control(R"({"type":"set_live","args":{"oav":"shadow","on":false}})");
    control(R"({"type":"go"})");
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    runner.stop();
    mocap.stop();
  }
  const std::string text = log.str();
  std::size_t mocap = 0;
  for (std::size_t p = text.find("\"source\":\"mocap\""); p != std::string::npos;
       p = text.find("\"source\":\"mocap\"", p + 1))
    ++mocap;
  Engine fresh(show);
  std::istringstream in(text);
  const ReplayResult rr = replay_log(fresh, in);
  const bool replayed = rr.ok() && rr.compared == rr.ticks && mocap > 0;

  const fs::path golden = fs::path(CASTELET_GOLDEN_DIR) / "demo_final_hash.txt";
  const std::string expected = fs::exists(golden) ? read_first_line(golden) : "";
  const char* golden_state = expected.empty() ? "absent" : expected == ra.final_hash ? "matches" : "differs";

  std::cout << "  demo final hash " << ra.final_hash << '\n';
  return {renders && replayed,
          fmt("render x2 %s over %llu ticks; live log %llu ticks, %zu mocap records, %zu mismatches; golden %s",
              renders ? "identical" : "DIFFER", static_cast<unsigned long long>(ra.ticks),
              static_cast<unsigned long long>(rr.ticks), mocap, rr.mismatches, golden_state)};
}

// Retargeted source pose built from raw channel values and the map config.
struct RetargetOracle {
  struct Link {
    int source = -1;
    Mat3 offset = Mat3::Identity();
  };
  std::vector<Link> links;
  double root_scale = 1.0;
  double unit_scale = 1.0;
  Skeleton source;

  std::pair<Vec3, std::vector<Mat3>> apply(const std::vector<double>& row) const {
    std::vector<Mat3> src(source.size(), Mat3::Identity());
    Vec3 root = Vec3::Zero();
    std::size_t c = 0;
    for (std::size_t j = 0; j < source.size(); ++j)
      for (const auto& label : source.joint(j).channels) {
        const double v = row[c++];
        const int axis = oracle::axis_of(label[0]);
        if (label.find("position") != std::string::npos)
          root[axis] = v * unit_scale;
        else
          src[j] = src[j] * oracle::axis_matrix(axis, v);
      }
    std::vector<Mat3> out;
    for (const auto& l : links) out.push_back(l.source < 0 ? Mat3::Identity() : Mat3(l.offset * src[static_cast<std::size_t>(l.source)]));
    return {root * root_scale, out};
  }
};

RetargetOracle oracle_for(const fs::path& bundle, const std::string& retarget_id, const Skeleton& target) {
  const json cfg = read_json_file(bundle / "show.json");
  RetargetOracle o;
  for (const auto& r : cfg.at("retargets")) {
    if (r.at("id") != retarget_id) continue;
    o.root_scale = r.value("root_translation_scale", 1.0);
    o.unit_scale = r.value("unit_scale", 1.0);
    std::ifstream in(bundle / r.at("source_skeleton").get<std::string>());
    std::stringstream text;
    text << in.rdbuf();
    o.source = parse_bvh_hierarchy(text.str());
    o.links.assign(target.size(), {});
    for (const auto& e : r.at("entries")) {
      const auto t = target.find(e.at("target").get<std::string>());
      const auto s = o.source.find(e.at("source").get<std::string>());
      if (!t || !s) continue;
      o.links[*t].source = static_cast<int>(*s);
      if (e.contains("offset_euler_deg")) {
        const auto deg = e.at("offset_euler_deg").get<std::vector<double>>();
        o.links[*t].offset = oracle::euler_matrix(Vec3(deg[0], deg[1], deg[2]), e.value("order", "ZXY"));
      }
    }
  }
  return o;
}

template <typename P>
bool wait_for(P&& pred, std::chrono::milliseconds limit) {
  const auto until = std::chrono::steady_clock::now() + limit;
  while (!pred()) {
    if (std::chrono::steady_clock::now() > until) return false;
    std::this_thread::yield();
  }
  return true;
}

// Corpus BVH over TCP into a live avatar, recorded and compared per pose.
Outcome live_loopback() {
  namespace asio = boost::asio;
  const fs::path bundle = tk::demo_bundle();
  const Show show = load_show(bundle);
  const std::size_t shadow = *show.avatar_index("shadow");
  const BvhDocument doc = load_bvh_file(tk::corpus_file("neuron_59.bvh").string());
  const RetargetOracle oracle = oracle_for(bundle, show.avatars[shadow].live->retarget_id,
                                           show.scene.oavs[shadow].rig->skeleton);

  Engine engine(show);
  EngineRunner runner(engine);
  MocapServer server(runner, engine, MocapServerOptions{"127.0.0.1", 0, "shadow"});
  server.start();

  asio::io_context ioc;
  asio::ip::tcp::socket sock(ioc);
  sock.connect({asio::ip::make_address("127.0.0.1"), server.port()});
  sock.set_option(asio::ip::tcp::no_delay(true));
  asio::write(sock, asio::buffer(encode_handshake(make_stream_header(doc.skeleton, doc.frame_time))));

  std::vector<std::vector<double>> sent;
  bool stalled = false;
  for (std::size_t k = 0; k < doc.frames.size(); ++k) {
    const std::vector<float> ch(doc.frames[k].begin(), doc.frames[k].end());
    std::vector<std::uint8_t> bytes;
    append_frame(bytes, static_cast<std::uint32_t>(k), ch);
    asio::write(sock, asio::buffer(bytes));
    sent.emplace_back(ch.begin(), ch.end());
    if (!wait_for([&] { return server.health().frames == k + 1; }, std::chrono::seconds(5))) {
      stalled = true;
      break;
    }
    if (k == 0)
      runner.post([](Engine& e) {
        e.set_live("shadow", true);
        e.start_recording("shadow");
      });
    runner.step();
  }
  Take take;
  runner.post([&](Engine& e) { take = e.stop_recording(); });
  runner.step();
  sock.close();
  server.stop();

  double worst = 0.0, worst_time = 0.0;
  const bool complete = !stalled && take.samples.size() == doc.frames.size();
  for (std::size_t k = 0; complete && k < take.samples.size(); ++k) {
    const auto [root, rots] = oracle.apply(sent[k]);
    const Pose& p = take.samples[k].pose;
    double e = (p.root_translation - root).norm();
    for (std::size_t j = 0; j < rots.size(); ++j) e = std::max(e, (oracle::quat_matrix(p.rotations[j]) - rots[j]).norm());
    worst = std::max(worst, e);
    worst_time = std::max(worst_time, std::abs(take.samples[k].time - static_cast<double>(k) * engine.dt()));
  }
  const bool pass = complete && worst <= 1e-6 && worst_time <= 1e-9;
  return {pass, fmt("%zu/%zu frames recorded, max pose error %.3g, max time error %.3g s", take.samples.size(),
                    doc.frames.size(), worst, worst_time)};
}

// Median engine tick at 10 avatars x 60 joints x 2 lights x 2 screens.
Outcome throughput() {
  tk::SyntheticShowOptions o;
  o.oavs = 10;
  o.joints = 60;
  o.lights = 2;
  o.screens = 2;
  o.tick_rate = 100.0;
  Show show = tk::synthetic_show(o);
  const std::array<std::string, 3> acts{"act_1", "act_2", "act_3"};
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<CueStep> steps;
    for (const auto& a : show.scene.oavs) steps.push_back(step::TriggerAction{a.id, acts[c]});
    show.cues.push_back(Cue{c, "all " + acts[c], steps});
  }
  Engine engine(std::move(show));
  for (int k = 0; k < 100; ++k) engine.tick();
  std::vector<double> times;
  for (int k = 0; k < 3000; ++k) {
    if (k % 120 == 0) {
      if (engine.cursor() == 3) engine.goto_cue(0);
      engine.go();
    }
    const auto t0 = std::chrono::steady_clock::now();
    engine.tick();
    times.push_back(seconds_since(t0));
  }
  std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
  const double median = times[times.size() / 2];
  const double headroom = 0.01 / median;
  return {headroom >= 5.0, fmt("median tick %.3f ms, headroom %.1fx against the 10 ms budget", median * 1e3, headroom)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"bvh_round_trip", 5.0, bvh_round_trip},
      {"fk_oracle", 10.0, fk_oracle},
      {"palindrome_continuity", 1.0, palindrome_continuity},
      {"split_reassemble", 10.0, split_reassemble},
      {"fsm_safety_convexity", 60.0, fsm_safety},
      {"shadow_correctness", 10.0, shadow_correctness},
      {"end_to_end_determinism", 30.0, determinism},
      {"live_loopback", 30.0, live_loopback},
      {"throughput", 0.0, throughput},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double took = seconds_since(t0);
    const bool in_time = c.limit_s <= 0.0 || took <= c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << " (" << fmt("%.2f", took) << " s"
              << (in_time ? "" : fmt(", over the %.0f s limit", c.limit_s)) << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
