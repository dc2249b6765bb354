#pragma once

#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace castelet {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

struct Joint {
  std::string name;
  int parent = -1;  // -1 for the root
  Vec3 offset = Vec3::Zero();
  std::vector<std::string> channels;  // as declared in the source data
  std::optional<Vec3> end_site;       // leaf offset from a BVH End Site block
};

// Joint hierarchy in topological order (parents precede children).
class Skeleton {
 public:
  Skeleton() = default;
  // Throws ContractError if the invariants do not hold.
  explicit Skeleton(std::vector<Joint> joints);

  std::size_t size() const noexcept { return joints_.size(); }
  const std::vector<Joint>& joints() const noexcept { return joints_; }
  const Joint& joint(std::size_t i) const { return joints_.at(i); }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t channel_count() const noexcept;

  // Same names, parents and channel specs (offsets are not compared).
  bool same_topology(const Skeleton& other) const;

 private:
  std::vector<Joint> joints_;
};

struct Pose {
  Vec3 root_translation = Vec3::Zero();
  std::vector<Quat> rotations;

  static Pose identity(std::size_t joint_count);
};

bool operator==(const Pose& a, const Pose& b);

struct Transform {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Transform operator*(const Transform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Transform inverse() const {
    const Quat inv = rotation.conjugate();
    return {inv, -(inv * translation)};
  }
};

struct SkinInfluence {
  int joint = 0;
  double weight = 0.0;
};

// Flat silhouette in the z=0 rig-local plane. polygons[0] is the outline,
// any further polygons are holes.
struct SilhouetteMesh {
  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> polygons;
  std::vector<std::vector<SkinInfluence>> skin_weights;
};

// Throws ContractError describing the first violated mesh invariant.
void validate_mesh(const SilhouetteMesh& mesh, const Skeleton& skeleton);

enum class RotationOrder { XYZ, XZY, YXZ, YZX, ZXY, ZYX };

// Accepts "XYZ", "ZXY", ... (case-insensitive). Throws ConfigError otherwise.
RotationOrder parse_rotation_order(std::string_view label);
std::string_view to_string(RotationOrder order);
// Axis index (0 = x, 1 = y, 2 = z) of the i-th rotation in the order.
int order_axis(RotationOrder order, int i);

// angles_deg[i] is the rotation about the i-th axis of the order; the result is
// R(axis0) * R(axis1) * R(axis2), the BVH channel convention.
Quat euler_to_quaternion(const Vec3& angles_deg, RotationOrder order);
Quat euler_to_quaternion(const Vec3& angles_deg, std::string_view order_label);
// Inverse of euler_to_quaternion for the same order, angles in degrees.
Vec3 quaternion_to_euler(const Quat& q, RotationOrder order);

void check_pose(const Skeleton& skeleton, const Pose& pose);

std::vector<Transform> forward_kinematics(const Skeleton& skeleton, const Pose& pose);

// Shortest-arc slerp per joint, linear root translation.
Pose lerp_pose(const Pose& a, const Pose& b, double w);
// Allocation-free variant; `out` may alias neither input.
void lerp_pose_into(const Pose& a, const Pose& b, double w, Pose& out);

// Geodesic angle between unit quaternions, in [0, pi], sign-invariant.
double quaternion_angle(const Quat& a, const Quat& b);
double pose_distance(const Pose& a, const Pose& b);

// World transform of every joint in the rest pose; the skinning bind pose.
std::vector<Transform> bind_pose(const Skeleton& skeleton);

std::vector<Vec3> skin_silhouette(const SilhouetteMesh& mesh,
                                  std::span<const Transform> bind_inverse,
                                  std::span<const Transform> world);
std::vector<Vec3> skin_silhouette(const SilhouetteMesh& mesh, const Skeleton& skeleton,
                                  std::span<const Transform> world);

}  // namespace castelet
