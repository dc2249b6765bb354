#include "castelet/bvh.hpp"
#include "castelet/error.hpp"
#include "castelet/retarget.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace castelet;
namespace tk = castelet::testkit;

namespace {

Quat about_z(double deg) { return Quat(Eigen::AngleAxisd(oracle::rad(deg), Vec3::UnitZ())); }

}  // namespace

TEST(BindMap, EmptyMapHoldsEveryTargetJoint) {
  std::mt19937_64 rng(1);
  const Skeleton src = tk::random_skeleton(5, rng), dst = tk::random_skeleton(4, rng);
  const BoundRetarget b = bind_map(RetargetMap{}, src, dst);
  ASSERT_EQ(b.report().unmapped_target.size(), dst.size());
  for (std::size_t j = 0; j < dst.size(); ++j) EXPECT_EQ(b.report().unmapped_target[j], dst.joint(j).name);
  const Pose out = b.apply(tk::random_pose(src, rng));
  for (const auto& q : out.rotations) EXPECT_TRUE(q.isApprox(Quat::Identity()));
}

TEST(BindMap, IdentityMapIsBijective) {
  std::mt19937_64 rng(2);
  const Skeleton sk = tk::random_skeleton(8, rng);
  const BoundRetarget b = bind_map(identity_map(sk, sk), sk, sk);
  EXPECT_TRUE(b.report().unmapped_target.empty());
  EXPECT_TRUE(b.report().unmapped_source.empty());
  const Pose p = tk::random_pose(sk, rng);
  EXPECT_LT(pose_distance(retarget_pose(b, p), p), 1e-12);
  EXPECT_TRUE(retarget_pose(b, Pose::identity(sk.size())) == Pose::identity(sk.size()));
}

TEST(BindMap, MisspelledJointIsNamed) {
  std::mt19937_64 rng(3);
  const Skeleton sk = tk::random_skeleton(3, rng);
  RetargetMap m = identity_map(sk, sk);
  m.entries[1].source_joint = "LeftArmm";
  try {
    bind_map(m, sk, sk);
    FAIL();
  } catch (const BindingError& e) {
    EXPECT_NE(std::string(e.what()).find("LeftArmm"), std::string::npos);
  }
  m = identity_map(sk, sk);
  m.entries.push_back(m.entries[0]);
  EXPECT_THROW(bind_map(m, sk, sk), BindingError);
}

TEST(RetargetPose, SameAxisComposition) {
  std::mt19937_64 rng(4);
  const Skeleton sk = tk::random_skeleton(3, rng);
  RetargetMap m = identity_map(sk, sk);
  m.entries[2].rotation_offset = about_z(90);
  const BoundRetarget b = bind_map(m, sk, sk);
  Pose p = Pose::identity(3);
  p.rotations[2] = about_z(30);
  EXPECT_LT(quaternion_angle(b.apply(p).rotations[2], about_z(120)), 1e-12);
}

TEST(RetargetPose, RootTranslationScale) {
  std::mt19937_64 rng(5);
  const Skeleton sk = tk::random_skeleton(3, rng);
  RetargetMap m = identity_map(sk, sk);
  m.root_translation_scale = 0.5;
  Pose p = Pose::identity(3);
  p.root_translation = Vec3(2, 4, 6);
  EXPECT_TRUE(bind_map(m, sk, sk).apply(p).root_translation.isApprox(Vec3(1, 2, 3)));
  EXPECT_THROW(bind_map(m, sk, sk).apply(Pose::identity(4)), ContractError);
}

TEST(RetargetPose, OffsetsMatchMatrixProducts) {
  const BvhDocument doc = load_bvh_file(tk::corpus_file("neuron_59.bvh").string());
  const Skeleton& sk = doc.skeleton;
  std::mt19937_64 rng(6);
  RetargetMap m = identity_map(sk, sk);
  for (auto& e : m.entries) e.rotation_offset = tk::random_rotation(rng);
  const BoundRetarget b = bind_map(m, sk, sk);
  const Take take = frames_to_take(doc, 0.01);
  const Pose out = b.apply(take.samples[17].pose);
  for (std::size_t j = 0; j < sk.size(); ++j) {
    const oracle::Mat3 expected =
        oracle::quat_matrix(m.entries[j].rotation_offset) * oracle::quat_matrix(take.samples[17].pose.rotations[j]);
    EXPECT_LT((oracle::quat_matrix(out.rotations[j]) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}
