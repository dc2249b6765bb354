#include "castelet/bvh.hpp"
#include "castelet/clips.hpp"
#include "castelet/control.hpp"
#include "castelet/engine.hpp"
#include "castelet/error.hpp"
#include "castelet/frame_io.hpp"
#include "castelet/service.hpp"
#include "castelet/session.hpp"
#include "castelet/show.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace castelet;

namespace {

constexpr int kUsage = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  return kUsage;
}

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

int cmd_validate(const fs::path& bundle) {
  LoadReport report;
  try {
    const Show show = load_show(bundle, &report);
    std::cout << "show '" << show.name << "': " << show.scene.oavs.size() << " oav(s), "
              << show.library->clips().size() << " clip(s), " << show.cues.size() << " cue(s)\n";
  } catch (const LoadError&) {
  }
  std::cout << report.to_string();
  return report.ok() ? 0 : 1;
}

int cmd_split(const fs::path& take_path, double t1, double t2, const fs::path& out, const std::string& ids_arg,
              const std::string& rig, double unit_scale) {
  if (!(t2 > t1)) return usage_error("--t2 must be greater than --t1");
  const auto ids = split_ids(ids_arg);
  if (ids.size() != 3) return usage_error("--ids needs three comma-separated ids (idle,action,idle)");
  const BvhDocument doc = load_bvh_file(take_path.string());
  Take take = frames_to_take(doc, unit_scale, take_path.stem().string());
  take.skeleton_ref = rig.empty() ? take_path.stem().string() : rig;
  const SplitResult parts = split_take(take, t1, t2, {ids[0], ids[1], ids[2]});
  fs::create_directories(out);
  for (const AnimationClip* c : {&parts.idle_start, &parts.action, &parts.idle_end}) {
    save_bvh_file((out / (c->id + ".bvh")).string(), samples_to_bvh(doc.skeleton, c->samples, doc.frame_time, unit_scale));
    ClipSidecar side{c->id, c->kind, c->skeleton_ref, c->id + ".bvh", c->start_idle_id, c->end_idle_id, unit_scale};
    std::ofstream(out / (c->id + ".clip.json")) << clip_sidecar_to_json(side).dump(2) << '\n';
    std::cout << c->id << ": " << c->samples.size() << " samples, " << c->duration() << " s\n";
  }
  return 0;
}

int cmd_render(const fs::path& bundle, const fs::path& script_path, const fs::path& out, bool svg, int svg_every,
               bool write_frames) {
  Engine engine(load_show(bundle));
  const Script script = script_from_json(read_json_file(script_path), engine.show().tick_rate);
  fs::create_directories(out);
  EventLogWriter log(new_session_log_path(engine.show().name));
  engine.set_event_sink(log.sink());
  engine.set_hash_frames(true);

  std::ofstream frames;
  if (write_frames) frames.open(out / "frames.ndjson");
  const Camera& cam = engine.show().scene.camera;
  const RenderResult r = run_script(engine, script, [&](const RenderFrame& f) {
    if (write_frames) frames << serialize_frame(f) << '\n';
    if (svg && svg_every > 0 && f.tick % static_cast<std::uint64_t>(svg_every) == 0) {
      std::ofstream(out / ("frame_" + std::to_string(f.tick) + ".svg"))
          << frame_to_svg(f, cam.viewport_width, cam.viewport_height);
    }
  });
  if (svg)
    std::ofstream(out / "final.svg") << frame_to_svg(engine.last_frame(), cam.viewport_width, cam.viewport_height);
  std::ofstream hashes(out / "hashes.txt");
  for (const auto& h : r.hashes) hashes << h << '\n';
  std::ofstream(out / "final_hash.txt") << r.final_hash << '\n';
  std::ofstream replies(out / "replies.ndjson");
  for (const auto& j : r.replies) replies << j.dump() << '\n';
  std::cout << "ticks " << r.ticks << "\nfinal hash " << r.final_hash << "\nsession log " << log.path().string()
            << '\n';
  return 0;
}

int cmd_replay(const fs::path& bundle, const fs::path& log_path) {
  Engine engine(load_show(bundle));
  std::ifstream in(log_path);
  if (!in) return usage_error("cannot open log '" + log_path.string() + "'");
  const ReplayResult r = replay_log(engine, in);
  std::cout << "ticks " << r.ticks << "\ncompared " << r.compared << "\nmismatches " << r.mismatches << '\n';
  if (r.first_mismatch) std::cout << "first mismatch at tick " << *r.first_mismatch << '\n';
  std::cout << "final hash " << r.final_hash << '\n' << (r.ok() ? "replay matches" : "replay differs") << '\n';
  return r.ok() ? 0 : 1;
}

int cmd_play(const fs::path& bundle, std::uint16_t control_port, const std::vector<std::string>& mocap, double duration) {
  Engine engine(load_show(bundle));
  EventLogWriter log(new_session_log_path(engine.show().name));
  engine.set_event_sink(log.sink());
  engine.set_hash_frames(true);
  EngineRunner runner(engine);

  std::vector<MocapServerOptions> mocap_options;
  for (const auto& spec : mocap) {
    const auto colon = spec.find(':');
    MocapServerOptions o;
    o.address = "0.0.0.0";
    o.port = static_cast<std::uint16_t>(std::stoul(spec.substr(0, colon)));
    if (colon != std::string::npos) {
      o.oav = spec.substr(colon + 1);
    } else {
      for (const auto& a : engine.show().avatars)
        if (a.live) {
          o.oav = a.id;
          break;
        }
      if (o.oav.empty()) return usage_error("no avatar in the show has a live retarget");
    }
    mocap_options.push_back(o);
  }
  std::vector<std::unique_ptr<MocapServer>> mocap_servers;
  for (const auto& o : mocap_options) mocap_servers.push_back(std::make_unique<MocapServer>(runner, engine, o));

  ControlServerOptions co;
  co.address = "0.0.0.0";
  co.port = control_port;
  co.on_take = [&engine](const Take& take) {
    const auto rig = engine.show().rigs.at(take.skeleton_ref);
    const fs::path path = session_log_dir() / (take.id + "-" + std::to_string(engine.tick_count()) + ".bvh");
    fs::create_directories(path.parent_path());
    save_bvh_file(path.string(), samples_to_bvh(rig->skeleton, take.samples, take.frame_time, 1.0));
    return path.string();
  };
  ControlServer control(runner, co);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  control.start();
  for (auto& m : mocap_servers) m->start();
  runner.start();
  std::cout << "control ws://0.0.0.0:" << control.port() << '\n';
  for (std::size_t i = 0; i < mocap_servers.size(); ++i)
    std::cout << "mocap tcp://0.0.0.0:" << mocap_servers[i]->port() << " -> " << mocap_options[i].oav << '\n';
  std::cout << "session log " << log.path().string() << std::endl;

  const auto start = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration > 0 && std::chrono::steady_clock::now() - start >= std::chrono::duration<double>(duration)) break;
  }
  control.stop();
  for (auto& m : mocap_servers) m->stop();
  runner.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"castelet: virtual shadow theater engine"};
  app.require_subcommand(1);

  fs::path bundle, take, out, script, log_path;
  double t1 = 0, t2 = 0, unit_scale = 0.01, duration = 0;
  std::string ids, rig;
  bool svg = false, no_frames = false;
  int svg_every = 0;
  std::uint16_t control_port = 8765;
  std::vector<std::string> mocap;
  std::string stream_file;
  std::uint16_t stream_port = 0;
  double stream_rate = 60;

  auto* validate = app.add_subcommand("validate", "Load a show bundle and print the full report");
  validate->add_option("bundle", bundle, "Show bundle directory")->required();

  auto* split = app.add_subcommand("split", "Split a take into idle, action and idle clips");
  split->add_option("take", take, "Take BVH file")->required()->check(CLI::ExistingFile);
  split->add_option("--t1", t1, "First cut (seconds)")->required();
  split->add_option("--t2", t2, "Second cut (seconds)")->required();
  split->add_option("--out", out, "Output directory")->required();
  split->add_option("--ids", ids, "idle,action,idle clip ids")->required();
  split->add_option("--rig", rig, "Rig id written to the sidecars (default: file stem)");
  split->add_option("--unit-scale", unit_scale, "Root translation units to meters")->capture_default_str();

  auto* render = app.add_subcommand("render", "Run a show headless from an event script");
  render->add_option("bundle", bundle, "Show bundle directory")->required();
  render->add_option("--script", script, "Event script (JSON)")->required()->check(CLI::ExistingFile);
  render->add_option("--out", out, "Output directory")->required();
  render->add_flag("--svg", svg, "Write the final frame as SVG");
  render->add_option("--svg-every", svg_every, "Also write every Nth frame as SVG");
  render->add_flag("--no-frames", no_frames, "Skip frames.ndjson");

  auto* play = app.add_subcommand("play", "Run a show live with the control and mocap services");
  play->add_option("bundle", bundle, "Show bundle directory")->required();
  play->add_option("--control-port", control_port, "WebSocket control port")->capture_default_str();
  play->add_option("--mocap-port", mocap, "PORT[:oav] mocap listener (repeatable)");
  play->add_option("--duration", duration, "Stop after this many seconds (0 runs until interrupted)");

  auto* replay = app.add_subcommand("replay", "Re-run a session log and compare frame hashes");
  replay->add_option("bundle", bundle, "Show bundle directory")->required();
  replay->add_option("--log", log_path, "Session log (NDJSON)")->required()->check(CLI::ExistingFile);

  auto* stream = app.add_subcommand("stream", "Send a BVH file to a mocap port");
  stream->add_option("file", stream_file, "BVH file")->required()->check(CLI::ExistingFile);
  stream->add_option("--port", stream_port, "Mocap port")->required();
  stream->add_option("--rate", stream_rate, "Frames per second (0: as fast as possible)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*validate) return cmd_validate(bundle);
    if (*split) return cmd_split(take, t1, t2, out, ids, rig, unit_scale);
    if (*render) return cmd_render(bundle, script, out, svg, svg_every, !no_frames);
    if (*replay) return cmd_replay(bundle, log_path);
    if (*play) return cmd_play(bundle, control_port, mocap, duration);
    if (*stream) {
      StreamClientOptions o;
      o.port = stream_port;
      o.rate = stream_rate;
      const std::string rejected = stream_bvh(load_bvh_file(stream_file), o);
      if (!rejected.empty()) {
        std::cerr << "rejected: " << rejected << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const LoadError& e) {
    std::cerr << e.report().to_string();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
