#pragma once

#include "castelet/skeleton.hpp"

#include <optional>
#include <string>
#include <vector>

namespace castelet {

struct RetargetEntry {
  std::string source_joint;
  std::string target_joint;
  Quat rotation_offset = Quat::Identity();
};

struct RetargetMap {
  std::vector<RetargetEntry> entries;
  double root_translation_scale = 1.0;
};

struct BindReport {
  std::vector<std::string> unmapped_target;  // held at rest
  std::vector<std::string> unmapped_source;  // ignored
};

// Rotation-copy retarget resolved to joint indices. Immutable after binding.
class BoundRetarget {
 public:
  std::size_t source_joint_count() const { return source_count_; }
  std::size_t target_joint_count() const { return links_.size(); }
  const BindReport& report() const { return report_; }
  const Skeleton& source() const { return source_; }
  const Skeleton& target() const { return target_; }

  Pose apply(const Pose& source_pose) const;
  void apply_into(const Pose& source_pose, Pose& out) const;

 private:
  friend BoundRetarget bind_map(const RetargetMap&, const Skeleton&, const Skeleton&);

  struct Link {
    int source = -1;  // -1: held at rest
    Quat offset = Quat::Identity();
  };
  std::vector<Link> links_;
  std::size_t source_count_ = 0;
  double root_scale_ = 1.0;
  BindReport report_;
  Skeleton source_;
  Skeleton target_;
};

// Throws BindingError naming the first unknown or duplicated joint.
BoundRetarget bind_map(const RetargetMap& map, const Skeleton& source, const Skeleton& target);

// Maps every target joint to the source joint of the same name.
RetargetMap identity_map(const Skeleton& target, const Skeleton& source);

inline Pose retarget_pose(const BoundRetarget& bound, const Pose& source_pose) {
  return bound.apply(source_pose);
}

}  // namespace castelet
