#include "castelet/retarget.hpp"

#include "castelet/error.hpp"

#include <unordered_set>

namespace castelet {

BoundRetarget bind_map(const RetargetMap& map, const Skeleton& source, const Skeleton& target) {
  BoundRetarget bound;
  bound.links_.assign(target.size(), {});
  bound.source_count_ = source.size();
  bound.root_scale_ = map.root_translation_scale;
  bound.source_ = source;
  bound.target_ = target;

  std::vector<bool> source_used(source.size(), false);
  std::unordered_set<std::string> targets_seen;
  for (const auto& e : map.entries) {
    const auto s = source.find(e.source_joint);
    if (!s) throw BindingError("unknown source joint '" + e.source_joint + "'");
    const auto t = target.find(e.target_joint);
    if (!t) throw BindingError("unknown target joint '" + e.target_joint + "'");
    if (!targets_seen.insert(e.target_joint).second)
      throw BindingError("target joint '" + e.target_joint + "' mapped twice");
    if (std::abs(e.rotation_offset.norm() - 1.0) > 1e-6)
      throw BindingError("rotation offset for '" + e.target_joint + "' is not a unit quaternion");
    bound.links_[*t] = {static_cast<int>(*s), e.rotation_offset.normalized()};
    source_used[*s] = true;
  }
  for (std::size_t t = 0; t < target.size(); ++t)
    if (bound.links_[t].source < 0) bound.report_.unmapped_target.push_back(target.joint(t).name);
  for (std::size_t s = 0; s < source.size(); ++s)
    if (!source_used[s]) bound.report_.unmapped_source.push_back(source.joint(s).name);
  return bound;
}

void BoundRetarget::apply_into(const Pose& source_pose, Pose& out) const {
  if (source_pose.rotations.size() != source_count_)
    throw ContractError("source pose does not match the bound source skeleton");
  out.root_translation = source_pose.root_translation * root_scale_;
  out.rotations.resize(links_.size());
  for (std::size_t t = 0; t < links_.size(); ++t) {
    const Link& l = links_[t];
    out.rotations[t] = l.source < 0
                           ? Quat::Identity()
                           : (l.offset * source_pose.rotations[static_cast<std::size_t>(l.source)]).normalized();
  }
}

Pose BoundRetarget::apply(const Pose& source_pose) const {
  Pose out;
  apply_into(source_pose, out);
  return out;
}

RetargetMap identity_map(const Skeleton& target, const Skeleton& source) {
  RetargetMap m;
  for (const auto& j : target.joints())
    if (source.find(j.name)) m.entries.push_back({j.name, j.name, Quat::Identity()});
  return m;
}

}  // namespace castelet
