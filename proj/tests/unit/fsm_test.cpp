#include "castelet/error.hpp"
#include "castelet/fsm.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <random>

using namespace castelet;
namespace tk = castelet::testkit;

namespace {

constexpr double kDt = 0.125;
constexpr double kFade = 0.25;

struct Fixture {
  Skeleton sk;
  Pose a, b;
  ClipLibrary lib;
};

// I0 <-> I1 through A1 (I0 -> I1) and A2 (I1 -> I0); actions last 1 s, idles 2 s.
Fixture make_fixture(double frame_time = 0.125, std::size_t action_frames = 9, std::size_t idle_frames = 17) {
  std::mt19937_64 rng(42);
  Fixture f;
  f.sk = tk::random_skeleton(6, rng);
  f.a = tk::random_pose(f.sk, rng, 25.0);
  f.b = tk::random_pose(f.sk, rng, 25.0);
  f.lib.add(tk::smooth_clip("I0", ClipKind::idle, "rig", f.a, f.a, idle_frames, frame_time, 4.0, rng));
  f.lib.add(tk::smooth_clip("I1", ClipKind::idle, "rig", f.b, f.b, idle_frames, frame_time, 4.0, rng));
  auto act = [&](const std::string& id, const Pose& from, const Pose& to, const std::string& s, const std::string& e) {
    AnimationClip c = tk::smooth_clip(id, ClipKind::action, "rig", from, to, action_frames, frame_time, 20.0, rng);
    c.start_idle_id = s;
    c.end_idle_id = e;
    f.lib.add(std::move(c));
  };
  act("A1", f.a, f.b, "I0", "I1");
  act("A2", f.b, f.a, "I1", "I0");
  act("A1b", f.a, f.b, "I0", "I1");
  return f;
}

void expect_convex(const FsmSnapshot& s) {
  double sum = 0.0;
  for (const auto& m : s.mix) {
    EXPECT_GE(m.weight, 0.0) << m.source;
    sum += m.weight;
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

}  // namespace

TEST(Fsm, HappyPathTrace) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  const TriggerResult r = fsm.trigger_action("A1", f.lib);
  EXPECT_EQ(r.outcome, TriggerOutcome::accepted);
  EXPECT_EQ(fsm.state(), FsmState::transition_in);
  fsm.tick(kDt, f.lib);
  EXPECT_EQ(fsm.state(), FsmState::transition_in);
  EXPECT_DOUBLE_EQ(fsm.snapshot().audible_channel_weight(), 0.5);
  fsm.tick(kDt, f.lib);
  EXPECT_EQ(fsm.state(), FsmState::acting);
  EXPECT_DOUBLE_EQ(fsm.snapshot().audible_channel_weight(), 1.0);
}

TEST(Fsm, RejectsMismatchedStartIdle) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  const TriggerResult r = fsm.trigger_action("A2", f.lib);
  EXPECT_EQ(r.outcome, TriggerOutcome::rejected);
  EXPECT_NE(r.reason.find("I0"), std::string::npos);
  EXPECT_NE(r.reason.find("I1"), std::string::npos);
  EXPECT_EQ(fsm.state(), FsmState::idle);
  EXPECT_THROW(fsm.trigger_action("nope", f.lib), ContractError);
}

TEST(Fsm, QueuedActionTraceMatchesStateTable) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  using S = FsmState;
  // Expected state after each tick, simulated by hand for dt 0.125, fade 0.25,
  // 1 s actions: ramp done after 2 ticks, action ends at tick 8, crossfade done
  // after 2 more ticks, where the queued A2 starts on the same tick.
  const std::vector<S> table{S::transition_in, S::acting,         S::acting,         S::acting,
                             S::acting,        S::acting,         S::acting,         S::transition_out,
                             S::transition_out, S::transition_in, S::transition_in, S::acting};
  ASSERT_EQ(fsm.trigger_action("A1", f.lib).outcome, TriggerOutcome::accepted);
  for (std::size_t k = 0; k < table.size(); ++k) {
    fsm.tick(kDt, f.lib);
    if (k == 2) {
      const TriggerResult r = fsm.trigger_action("A2", f.lib);
      EXPECT_EQ(r.outcome, TriggerOutcome::queued);
      EXPECT_EQ(fsm.snapshot().queue, std::vector<std::string>{"A2"});
    }
    EXPECT_EQ(fsm.state(), table[k]) << "tick " << k + 1;
    expect_convex(fsm.snapshot());
  }
  const FsmSnapshot s = fsm.snapshot();
  EXPECT_EQ(s.action_id, "A2");
  EXPECT_TRUE(s.queue.empty());
}

TEST(Fsm, LandingTickRecordsBothTransitions) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  fsm.trigger_action("A1", f.lib);
  for (int k = 0; k < 3; ++k) fsm.tick(kDt, f.lib);
  fsm.trigger_action("A2", f.lib);
  for (int k = 3; k < 10; ++k) fsm.tick(kDt, f.lib);
  const std::vector<FsmTransition> expected{{FsmState::transition_out, FsmState::idle},
                                            {FsmState::idle, FsmState::transition_in}};
  EXPECT_EQ(fsm.snapshot().transitions, expected);
}

TEST(Fsm, SuspendEarlyLandsInStartIdle) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  fsm.trigger_action("A1", f.lib);
  fsm.tick(kDt, f.lib);
  fsm.trigger_action("A2", f.lib);
  const ControlResult r = fsm.suspend();
  EXPECT_TRUE(r.applied);
  EXPECT_EQ(r.detail, "I0");
  EXPECT_EQ(fsm.state(), FsmState::suspending);
  EXPECT_TRUE(fsm.snapshot().queue.empty());
  fsm.tick(kDt, f.lib);
  fsm.tick(kDt, f.lib);
  EXPECT_EQ(fsm.state(), FsmState::idle);
  EXPECT_EQ(fsm.snapshot().idle_id, "I0");
  EXPECT_EQ(fsm.trigger_action("A1", f.lib).outcome, TriggerOutcome::accepted);
}

TEST(Fsm, SuspendLateLandsInEndIdle) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  fsm.trigger_action("A1", f.lib);
  for (int k = 0; k < 7; ++k) fsm.tick(kDt, f.lib);
  ASSERT_EQ(fsm.state(), FsmState::acting);
  const ControlResult r = fsm.suspend();
  EXPECT_EQ(r.detail, "I1");
  while (fsm.state() != FsmState::idle) fsm.tick(kDt, f.lib);
  EXPECT_EQ(fsm.snapshot().idle_id, "I1");
  EXPECT_EQ(fsm.trigger_action("A2", f.lib).outcome, TriggerOutcome::accepted);
  EXPECT_FALSE(OavFsm(f.lib, "I0", kFade).suspend().applied);
}

TEST(Fsm, IdleSteadyStateIsPalindrome) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  const AnimationClip& idle = f.lib.at("I0");
  for (int k = 1; k <= 100; ++k) {
    const Pose& out = fsm.tick(kDt / 4, f.lib);
    EXPECT_LT(pose_distance(out, sample_palindrome(idle, k * kDt / 4)), 1e-12);
    const FsmSnapshot s = fsm.snapshot();
    ASSERT_EQ(s.mix.size(), 1u);
    EXPECT_DOUBLE_EQ(s.mix[0].weight, 1.0);
  }
}

TEST(Fsm, LiveHoldsThenFollowsStream) {
  Fixture f = make_fixture();
  OavFsm fsm(f.lib, "I0", kFade);
  EXPECT_FALSE(fsm.set_live(true, f.lib).applied);
  fsm.set_live_binding(std::make_shared<BoundRetarget>(bind_map(identity_map(f.sk, f.sk), f.sk, f.sk)));
  const Pose held = fsm.output();
  ASSERT_TRUE(fsm.set_live(true, f.lib).applied);
  for (int k = 0; k < 6; ++k) EXPECT_LT(pose_distance(fsm.tick(kDt, f.lib), held), 1e-12);

  std::mt19937_64 rng(1);
  const Pose streamed = tk::random_pose(f.sk, rng, 30.0);
  OavFsm fresh(f.lib, "I0", kFade);
  fresh.set_live_binding(fsm.live_binding());
  fresh.set_live(true, f.lib);
  fresh.tick(kDt, f.lib, &streamed);
  EXPECT_DOUBLE_EQ(fresh.snapshot().live_weight, 0.5);
  fresh.tick(kDt, f.lib, &streamed);
  EXPECT_DOUBLE_EQ(fresh.snapshot().live_weight, 1.0);
  EXPECT_LT(pose_distance(fresh.output(), streamed), 1e-12);
  EXPECT_EQ(fresh.trigger_action("A1", f.lib).outcome, TriggerOutcome::rejected);
}

TEST(Fsm, LeavingLivePicksNearestIdle) {
  Fixture f = make_fixture();
  std::mt19937_64 rng(77);
  auto binding = std::make_shared<BoundRetarget>(bind_map(identity_map(f.sk, f.sk), f.sk, f.sk));
  for (int trial = 0; trial < 20; ++trial) {
    OavFsm fsm(f.lib, "I0", kFade);
    fsm.set_live_binding(binding);
    fsm.set_live(true, f.lib);
    const Pose streamed = trial % 2 ? lerp_pose(f.a, f.b, 0.8) : tk::random_pose(f.sk, rng, 40.0);
    for (int k = 0; k < 3; ++k) fsm.tick(kDt, f.lib, &streamed);
    std::string best;
    double best_d = 1e300;
    for (const auto& [id, clip] : f.lib.clips()) {
      if (clip.kind != ClipKind::idle) continue;
      const double d = pose_distance(fsm.output(), clip.samples.front().pose);
      if (d < best_d) best_d = d, best = id;
    }
    const ControlResult r = fsm.set_live(false, f.lib);
    EXPECT_TRUE(r.applied);
    EXPECT_EQ(r.detail, best);
    EXPECT_EQ(fsm.state(), FsmState::idle);
    EXPECT_EQ(fsm.snapshot().idle_id, best);
    const Pose before = fsm.output();
    EXPECT_LT(pose_distance(fsm.tick(1e-6, f.lib), before), 1e-3);
  }
}

TEST(Fsm, TraversalContinuityAt60Hz) {
  Fixture f = make_fixture(1.0 / 60.0, 61, 91);
  const double dt = 1.0 / 60.0;
  const double fade = 0.4;

  double clip_step = 0.0;
  double spread = 0.0;
  std::vector<const Pose*> all;
  for (const auto& [id, clip] : f.lib.clips()) {
    for (double t = 0.0; t < 2.0 * clip.duration() + 1.0; t += dt) {
      const Pose p = clip.kind == ClipKind::idle ? sample_palindrome(clip, t) : sample_clip(clip, t);
      const Pose q = clip.kind == ClipKind::idle ? sample_palindrome(clip, t + dt) : sample_clip(clip, t + dt);
      clip_step = std::max(clip_step, pose_distance(p, q));
    }
    for (const auto& s : clip.samples) all.push_back(&s.pose);
  }
  for (const Pose* p : all)
    for (const Pose* q : all) spread = std::max(spread, pose_distance(*p, *q));
  const double bound = clip_step + (dt / fade) * spread;

  OavFsm fsm(f.lib, "I0", fade);
  Pose prev = fsm.output();
  double worst = 0.0;
  ASSERT_EQ(fsm.trigger_action("A1", f.lib).outcome, TriggerOutcome::accepted);
  for (int k = 0; k < 600; ++k) {
    if (k == 150) fsm.trigger_action("A2", f.lib);
    const Pose& out = fsm.tick(dt, f.lib);
    worst = std::max(worst, pose_distance(prev, out));
    prev = out;
    expect_convex(fsm.snapshot());
  }
  EXPECT_EQ(fsm.state(), FsmState::idle);
  EXPECT_LE(worst, bound);
}

TEST(Fsm, TransitionsAreAlwaysLegal) {
  Fixture f = make_fixture();
  auto binding = std::make_shared<BoundRetarget>(bind_map(identity_map(f.sk, f.sk), f.sk, f.sk));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> op(0, 7);
  OavFsm fsm(f.lib, "I0", kFade);
  fsm.set_live_binding(binding);
  for (int k = 0; k < 3000; ++k) {
    switch (op(rng)) {
      case 0: fsm.trigger_action("A1", f.lib); break;
      case 1: fsm.trigger_action("A2", f.lib); break;
      case 2: fsm.suspend(); break;
      case 3: fsm.set_live(k % 3 != 0, f.lib); break;
      default: break;
    }
    fsm.tick(kDt / 2, f.lib);
    const FsmSnapshot s = fsm.snapshot();
    for (const auto& t : s.transitions) EXPECT_TRUE(is_legal_transition(t.from, t.to));
    expect_convex(s);
  }
}

TEST(Fsm, ContractChecks) {
  Fixture f = make_fixture();
  EXPECT_THROW(OavFsm(f.lib, "A1", kFade), ContractError);
  EXPECT_THROW(OavFsm(f.lib, "missing", kFade), ContractError);
  OavFsm fsm(f.lib, "I0", kFade);
  EXPECT_THROW(fsm.tick(0.0, f.lib), ContractError);
}
