#include "castelet/skeleton.hpp"

#include "castelet/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace castelet {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Vec3 unit_axis(int axis) {
  Vec3 v = Vec3::Zero();
  v[axis] = 1.0;
  return v;
}

}  // namespace

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
  if (joints_.empty()) throw ContractError("skeleton has no joints");
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const Joint& j = joints_[i];
    if (i == 0) {
      if (j.parent != -1) throw ContractError("first joint must be the root");
    } else if (j.parent < 0 || static_cast<std::size_t>(j.parent) >= i) {
      throw ContractError("joint '" + j.name + "' is not in topological order");
    }
    if (!names.insert(j.name).second) throw ContractError("duplicate joint name '" + j.name + "'");
    if (!j.offset.allFinite()) throw ContractError("joint '" + j.name + "' has a non-finite offset");
    if (j.end_site && !j.end_site->allFinite())
      throw ContractError("joint '" + j.name + "' has a non-finite end site");
  }
}

std::optional<std::size_t> Skeleton::find(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i)
    if (joints_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Skeleton::channel_count() const noexcept {
  std::size_t n = 0;
  for (const auto& j : joints_) n += j.channels.size();
  return n;
}

bool Skeleton::same_topology(const Skeleton& other) const {
  if (joints_.size() != other.joints_.size()) return false;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const Joint& a = joints_[i];
    const Joint& b = other.joints_[i];
    if (a.name != b.name || a.parent != b.parent || a.channels != b.channels) return false;
  }
  return true;
}

Pose Pose::identity(std::size_t joint_count) {
  Pose p;
  p.rotations.assign(joint_count, Quat::Identity());
  return p;
}

bool operator==(const Pose& a, const Pose& b) {
  if (a.root_translation != b.root_translation) return false;
  if (a.rotations.size() != b.rotations.size()) return false;
  for (std::size_t i = 0; i < a.rotations.size(); ++i)
    if (a.rotations[i].coeffs() != b.rotations[i].coeffs()) return false;
  return true;
}

void validate_mesh(const SilhouetteMesh& mesh, const Skeleton& skeleton) {
  if (mesh.skin_weights.size() != mesh.vertices.size())
    throw ContractError("skin weight count differs from vertex count");
  if (mesh.polygons.empty() || mesh.polygons.front().size() < 3)
    throw ContractError("silhouette needs an outline polygon with at least 3 vertices");
  for (const auto& poly : mesh.polygons) {
    for (int idx : poly) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= mesh.vertices.size())
        throw ContractError("polygon references vertex " + std::to_string(idx) + " out of range");
    }
  }
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (!mesh.vertices[v].allFinite())
      throw ContractError("vertex " + std::to_string(v) + " is not finite");
    double sum = 0.0;
    for (const auto& inf : mesh.skin_weights[v]) {
      if (inf.joint < 0 || static_cast<std::size_t>(inf.joint) >= skeleton.size())
        throw ContractError("vertex " + std::to_string(v) + " bound to unknown joint " +
                            std::to_string(inf.joint));
      if (!(inf.weight >= 0.0))
        throw ContractError("vertex " + std::to_string(v) + " has a negative weight");
      sum += inf.weight;
    }
    if (sum == 0.0) throw ContractError("vertex " + std::to_string(v) + " has no skin weight");
    if (std::abs(sum - 1.0) > 1e-6)
      throw ContractError("vertex " + std::to_string(v) + " weights sum to " + std::to_string(sum));
  }
}

RotationOrder parse_rotation_order(std::string_view label) {
  std::string up(label);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "XYZ") return RotationOrder::XYZ;
  if (up == "XZY") return RotationOrder::XZY;
  if (up == "YXZ") return RotationOrder::YXZ;
  if (up == "YZX") return RotationOrder::YZX;
  if (up == "ZXY") return RotationOrder::ZXY;
  if (up == "ZYX") return RotationOrder::ZYX;
  throw ConfigError("unknown rotation order '" + std::string(label) + "'");
}

std::string_view to_string(RotationOrder order) {
  switch (order) {
    case RotationOrder::XYZ: return "XYZ";
    case RotationOrder::XZY: return "XZY";
    case RotationOrder::YXZ: return "YXZ";
    case RotationOrder::YZX: return "YZX";
    case RotationOrder::ZXY: return "ZXY";
    case RotationOrder::ZYX: return "ZYX";
  }
  return "?";
}

int order_axis(RotationOrder order, int i) {
  const std::string_view s = to_string(order);
  return s[static_cast<std::size_t>(i)] - 'X';
}

Quat euler_to_quaternion(const Vec3& angles_deg, RotationOrder order) {
  Quat q = Quat::Identity();
  for (int i = 0; i < 3; ++i) {
    q = q * Quat(Eigen::AngleAxisd(angles_deg[i] * kDegToRad, unit_axis(order_axis(order, i))));
  }
  return q.normalized();
}

Quat euler_to_quaternion(const Vec3& angles_deg, std::string_view order_label) {
  return euler_to_quaternion(angles_deg, parse_rotation_order(order_label));
}

Vec3 quaternion_to_euler(const Quat& q, RotationOrder order) {
  const Eigen::Matrix3d m = q.normalized().toRotationMatrix();
  const Vec3 rad = m.eulerAngles(order_axis(order, 0), order_axis(order, 1), order_axis(order, 2));
  return rad / kDegToRad;
}

void check_pose(const Skeleton& skeleton, const Pose& pose) {
  if (pose.rotations.size() != skeleton.size())
    throw ContractError("pose has " + std::to_string(pose.rotations.size()) +
                        " rotations, skeleton has " + std::to_string(skeleton.size()) + " joints");
  for (const auto& q : pose.rotations)
    if (std::abs(q.norm() - 1.0) > 1e-6) throw ContractError("pose rotation is not unit length");
}

std::vector<Transform> forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
  if (pose.rotations.size() != skeleton.size())
    throw ContractError("pose/skeleton joint count mismatch");
  std::vector<Transform> world(skeleton.size());
  const auto& joints = skeleton.joints();
  world[0] = Transform{pose.rotations[0], pose.root_translation + joints[0].offset};
  for (std::size_t j = 1; j < joints.size(); ++j) {
    const Transform& parent = world[static_cast<std::size_t>(joints[j].parent)];
    world[j] = parent * Transform{pose.rotations[j], joints[j].offset};
  }
  return world;
}

void lerp_pose_into(const Pose& a, const Pose& b, double w, Pose& out) {
  if (a.rotations.size() != b.rotations.size())
    throw ContractError("lerp_pose on poses of different skeletons");
  if (!(w >= 0.0 && w <= 1.0)) throw ContractError("lerp_pose weight outside [0,1]");
  if (w == 0.0) {
    out = a;
    return;
  }
  if (w == 1.0) {
    out = b;
    return;
  }
  out.root_translation = (1.0 - w) * a.root_translation + w * b.root_translation;
  out.rotations.resize(a.rotations.size());
  for (std::size_t i = 0; i < a.rotations.size(); ++i) {
    const Quat& qa = a.rotations[i];
    Quat qb = b.rotations[i];
    if (qa.dot(qb) < 0.0) qb.coeffs() = -qb.coeffs();
    out.rotations[i] = qa.slerp(w, qb).normalized();
  }
}

Pose lerp_pose(const Pose& a, const Pose& b, double w) {
  Pose out;
  lerp_pose_into(a, b, w, out);
  return out;
}

double quaternion_angle(const Quat& a, const Quat& b) {
  const Quat r = a.conjugate() * b;
  return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

double pose_distance(const Pose& a, const Pose& b) {
  if (a.rotations.size() != b.rotations.size())
    throw ContractError("pose_distance on poses of different skeletons");
  double d = (a.root_translation - b.root_translation).norm();
  for (std::size_t i = 0; i < a.rotations.size(); ++i)
    d += quaternion_angle(a.rotations[i], b.rotations[i]);
  return d;
}

std::vector<Transform> bind_pose(const Skeleton& skeleton) {
  return forward_kinematics(skeleton, Pose::identity(skeleton.size()));
}

std::vector<Vec3> skin_silhouette(const SilhouetteMesh& mesh,
                                  std::span<const Transform> bind_inverse,
                                  std::span<const Transform> world) {
  if (bind_inverse.size() != world.size())
    throw ContractError("bind pose and world transforms differ in joint count");
  if (mesh.skin_weights.size() != mesh.vertices.size())
    throw ContractError("mesh is not bound: missing skin weights");
  std::vector<Vec3> out;
  out.reserve(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3 rest(mesh.vertices[v].x(), mesh.vertices[v].y(), 0.0);
    Vec3 acc = Vec3::Zero();
    for (const auto& inf : mesh.skin_weights[v]) {
      if (inf.joint < 0 || static_cast<std::size_t>(inf.joint) >= world.size())
        throw ContractError("mesh is not bound to this skeleton");
      const auto j = static_cast<std::size_t>(inf.joint);
      acc += inf.weight * world[j].apply(bind_inverse[j].apply(rest));
    }
    out.push_back(acc);
  }
  return out;
}

std::vector<Vec3> skin_silhouette(const SilhouetteMesh& mesh, const Skeleton& skeleton,
                                  std::span<const Transform> world) {
  std::vector<Transform> inv = bind_pose(skeleton);
  for (auto& t : inv) t = t.inverse();
  return skin_silhouette(mesh, inv, world);
}

}  // namespace castelet
