#include "castelet/bvh.hpp"
#include "castelet/engine.hpp"
#include "castelet/error.hpp"
#include "castelet/frame_io.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace castelet;
namespace tk = castelet::testkit;

namespace {

Show small_show() {
  tk::SyntheticShowOptions o;
  o.oavs = 2;
  o.joints = 8;
  o.lights = 1;
  o.screens = 1;
  o.tick_rate = 60.0;
  Show show = tk::synthetic_show(o);
  show.scene.oavs[1].visible = false;
  auto cue = [&](std::string label, std::vector<CueStep> steps) {
    show.cues.push_back(Cue{show.cues.size(), std::move(label), std::move(steps)});
  };
  cue("first", {step::TriggerAction{"oav0", "act_1"}});
  cue("second", {step::TriggerAction{"oav0", "act_2"}});
  cue("delayed", {step::Effect{effect::SetTranslucency{"screen0", 0.5}}, step::Wait{0.5},
                  step::Effect{effect::SetVisible{"oav1", true}}});
  tk::add_live_input(show, 1);
  return show;
}

std::vector<float> row_of(const Engine& e, std::size_t avatar, const Pose& p) {
  const auto& live = *e.show().avatars[avatar].live;
  const ChannelLayout layout(live.binding->source());
  const auto row = layout.to_row(p, live.unit_scale);
  return {row.begin(), row.end()};
}

std::string layers_only(RenderFrame f) {
  f.tick = 0;
  f.time = 0;
  return serialize_frame(f);
}

}  // namespace

TEST(Engine, GoFiresAndAdvancesCursor) {
  Engine e(small_show());
  const GoResult r = e.go();
  EXPECT_TRUE(r.fired);
  EXPECT_EQ(r.status, "fired");
  EXPECT_EQ(r.cursor, 1u);
  ASSERT_EQ(r.steps.size(), 1u);
  EXPECT_EQ(r.steps[0].status, "accepted");
  EXPECT_EQ(r.steps[0].target, "oav0");
  EXPECT_EQ(e.fsm(0).state(), FsmState::transition_in);
}

TEST(Engine, RapidChainedGoQueuesTheSecondAction) {
  Engine e(small_show());
  e.go();
  const GoResult r = e.go();
  EXPECT_EQ(r.steps[0].status, "queued");
  bool saw_second = false;
  for (int k = 0; k < 600 && !saw_second; ++k) {
    e.tick();
    saw_second = e.fsm(0).snapshot().action_id == "act_2";
    if (!saw_second) {
      EXPECT_NE(e.fsm(0).snapshot().idle_id, "idle_c");
    }
  }
  EXPECT_TRUE(saw_second);
  EXPECT_EQ(e.fsm(0).snapshot().idle_id, "idle_b");
}

TEST(Engine, EndOfShowLeavesStateAlone) {
  Engine e(small_show());
  for (int i = 0; i < 3; ++i) e.go();
  for (int k = 0; k < 10; ++k) e.tick();
  const auto before = e.fsm(0).snapshot();
  const GoResult r = e.go();
  EXPECT_FALSE(r.fired);
  EXPECT_EQ(r.status, "end of show");
  EXPECT_EQ(r.cursor, 3u);
  EXPECT_EQ(e.fsm(0).snapshot(), before);
}

TEST(Engine, BackAndGoto) {
  Engine e(small_show());
  const CursorResult at_start = e.back();
  EXPECT_FALSE(at_start.ok);
  EXPECT_EQ(at_start.status, "already at first cue");
  e.go();
  const CursorResult b = e.back();
  EXPECT_TRUE(b.ok);
  EXPECT_EQ(e.cursor(), 0u);
  EXPECT_FALSE(b.warning.empty());
  e.go();
  e.go();
  const CursorResult g = e.goto_cue(0);
  EXPECT_TRUE(g.ok);
  EXPECT_EQ(g.cursor, 0u);
  EXPECT_FALSE(g.warning.empty());
  const CursorResult bad = e.goto_cue(99);
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.status, "index out of range");
  EXPECT_EQ(e.cursor(), 0u);
}

TEST(Engine, WaitSchedulesLaterSteps) {
  Engine e(small_show());
  e.goto_cue(2);
  const GoResult r = e.go();
  ASSERT_EQ(r.steps.size(), 3u);
  EXPECT_EQ(r.steps[0].status, "applied");
  EXPECT_EQ(r.steps[2].status, "scheduled");
  EXPECT_NE(r.steps[2].target.find("oav1"), std::string::npos);
  auto visible_layers = [](const RenderFrame& f) {
    return std::count_if(f.layers.begin(), f.layers.end(),
                         [](const Layer& l) { return l.kind == Layer::Kind::silhouette && l.oav == "oav1"; });
  };
  for (int k = 0; k < 30; ++k) EXPECT_EQ(visible_layers(e.tick()), 0) << k;
  EXPECT_EQ(visible_layers(e.tick()), 1);
  const EngineSnapshot s = e.snapshot();
  ASSERT_FALSE(s.notices.empty());
  EXPECT_NE(s.notices.back().find("applied"), std::string::npos);
}

TEST(Engine, QuiescentShowPlaysIdles) {
  Engine e(small_show());
  const AnimationClip& idle = e.show().library->at("idle_a");
  for (int k = 0; k < 200; ++k) {
    e.tick();
    EXPECT_EQ(e.fsm(0).state(), FsmState::idle);
    EXPECT_LT(pose_distance(e.fsm(0).output(), sample_palindrome(idle, (k + 1) / 60.0)), 1e-9);
  }
}

TEST(Engine, SameScriptSameHashes) {
  auto run = [] {
    Engine e(small_show());
    std::vector<std::string> hashes;
    for (int k = 0; k < 400; ++k) {
      if (k == 10 || k == 40 || k == 100) e.go();
      if (k == 250) e.suspend("oav0");
      hashes.push_back(frame_hash(e.tick(1.0 / 60.0)));
    }
    return hashes;
  };
  EXPECT_EQ(run(), run());
}

TEST(Engine, RecordsLiveSamples) {
  Engine e(small_show());
  EXPECT_THROW(e.start_recording("oav1"), ContractError);
  EXPECT_THROW(e.stop_recording(), ContractError);
  ASSERT_EQ(e.set_live("oav1", true).status, "applied");
  e.start_recording("oav1");
  EXPECT_THROW(e.start_recording("oav1"), ContractError);
  EXPECT_EQ(e.snapshot().recording.state, RecordingState::armed);

  std::mt19937_64 rng(4);
  const Pose constant = tk::random_pose(e.show().scene.oavs[1].rig->skeleton, rng, 60.0);
  const auto row = row_of(e, 1, constant);
  const std::size_t n = 37;
  for (std::size_t k = 0; k < n; ++k) {
    e.push_stream_channels("oav1", static_cast<std::uint32_t>(k), row);
    e.tick();
    EXPECT_EQ(e.snapshot().recording.state, RecordingState::rolling);
  }
  const Take take = e.stop_recording();
  EXPECT_EQ(e.snapshot().recording.state, RecordingState::stopped);
  ASSERT_EQ(take.samples.size(), n);
  EXPECT_DOUBLE_EQ(take.frame_time, 1.0 / 60.0);
  EXPECT_EQ(take.skeleton_ref, "synth");
  EXPECT_NO_THROW(validate_take(take));
  for (const auto& s : take.samples) {
    EXPECT_TRUE(s.pose == take.samples.front().pose);
    EXPECT_LT(pose_distance(s.pose, constant), 1e-5);
  }
}

TEST(Engine, StreamSlotsAreLatestWins) {
  Engine e(small_show());
  e.set_live("oav1", true);
  std::mt19937_64 rng(9);
  const Skeleton& sk = e.show().scene.oavs[1].rig->skeleton;
  const Pose p1 = tk::random_pose(sk, rng, 30), p2 = tk::random_pose(sk, rng, 30), p3 = tk::random_pose(sk, rng, 30);
  e.push_stream_channels("oav1", 1, row_of(e, 1, p1));
  e.push_stream_channels("oav1", 2, row_of(e, 1, p2));
  e.push_stream_channels("oav1", 3, row_of(e, 1, p3));
  e.tick();
  EXPECT_LT(pose_distance(e.fsm(1).live_pose(), p3), 1e-5);
  const EngineSnapshot s = e.snapshot();
  ASSERT_EQ(s.streams.count("oav1"), 1u);
  EXPECT_EQ(s.streams.at("oav1").discarded, 2u);
  EXPECT_EQ(s.streams.at("oav1").frames, 3u);
  EXPECT_THROW(e.push_stream_channels("oav0", 1, row_of(e, 1, p1)), ContractError);
  EXPECT_THROW(e.push_stream_channels("oav1", 1, std::vector<float>(3)), ContractError);
}

TEST(Engine, ResetRestoresTheInitialShow) {
  Engine fresh(small_show());
  const std::string first = layers_only(fresh.tick());

  Engine e(small_show());
  e.go();
  e.goto_cue(2);
  e.go();
  for (int k = 0; k < 90; ++k) e.tick();
  e.reset();
  EXPECT_EQ(e.cursor(), 0u);
  EXPECT_DOUBLE_EQ(e.clock(), 0.0);
  EXPECT_EQ(e.fsm(0).state(), FsmState::idle);
  EXPECT_DOUBLE_EQ(e.show().scene.screens[0].translucency, 0.8);
  EXPECT_EQ(layers_only(e.tick()), first);
}

TEST(Engine, EventLogRecords) {
  std::vector<nlohmann::json> log;
  Engine e(small_show());
  e.set_event_sink([&](const nlohmann::json& j) { log.push_back(j); });
  e.set_hash_frames(true);
  e.go();
  e.set_live("oav1", true);
  e.push_stream_channels("oav1", 5, row_of(e, 1, Pose::identity(8)));
  e.tick();
  ASSERT_GE(log.size(), 5u);
  EXPECT_EQ(log[0]["source"], "session");
  EXPECT_EQ(log[0]["event"]["tick_rate"], 60.0);
  EXPECT_EQ(log[1]["source"], "control");
  EXPECT_EQ(log[1]["event"]["type"], "go");
  EXPECT_EQ(log[3]["source"], "mocap");
  EXPECT_EQ(log[3]["event"]["seq"], 5);
  EXPECT_EQ(log[4]["source"], "engine");
  EXPECT_EQ(log[4]["event"]["hash"], frame_hash(e.last_frame()));
  EXPECT_EQ(log[4]["tick"], 0);
}

TEST(Engine, SnapshotJson) {
  Engine e(small_show());
  e.go();
  e.tick();
  const nlohmann::json j = to_json(e.snapshot());
  EXPECT_EQ(j["cursor"], 1);
  EXPECT_EQ(j["cue_count"], 3);
  EXPECT_EQ(j["oavs"].size(), 2u);
  EXPECT_EQ(j["oavs"][0]["fsm"]["state"], "TransitionIn");
}
