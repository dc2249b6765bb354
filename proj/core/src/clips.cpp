#include "castelet/clips.hpp"

#include "castelet/error.hpp"

#include <algorithm>
#include <cmath>

namespace castelet {

std::string_view to_string(ClipKind kind) { return kind == ClipKind::action ? "action" : "idle"; }

ClipKind parse_clip_kind(std::string_view s) {
  if (s == "action") return ClipKind::action;
  if (s == "idle") return ClipKind::idle;
  throw ValidationError("unknown clip kind '" + std::string(s) + "'");
}

void validate_samples(std::span<const PoseSample> samples, std::string_view what) {
  const std::string name(what);
  if (samples.empty()) throw ContractError(name + ": no samples");
  if (samples.front().time != 0.0) throw ContractError(name + ": first timestamp is not 0");
  const std::size_t joints = samples.front().pose.rotations.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && !(samples[i].time > samples[i - 1].time))
      throw ContractError(name + ": timestamps not strictly increasing at sample " + std::to_string(i));
    if (samples[i].pose.rotations.size() != joints)
      throw ContractError(name + ": sample " + std::to_string(i) + " has a different joint count");
  }
}

void validate_clip(const AnimationClip& clip) {
  validate_samples(clip.samples, "clip '" + clip.id + "'");
  if (!(clip.duration() > 0.0)) throw ContractError("clip '" + clip.id + "' has zero duration");
  if (clip.kind == ClipKind::idle && (!clip.start_idle_id.empty() || !clip.end_idle_id.empty()))
    throw ContractError("idle clip '" + clip.id + "' carries idle references");
  if (clip.kind == ClipKind::action && (clip.start_idle_id.empty() || clip.end_idle_id.empty()))
    throw ContractError("action clip '" + clip.id + "' lacks idle references");
}

void validate_take(const Take& take) { validate_samples(take.samples, "take '" + take.id + "'"); }

void ClipLibrary::add(AnimationClip clip) {
  validate_clip(clip);
  const std::string id = clip.id;
  if (!clips_.emplace(id, std::move(clip)).second) throw ContractError("duplicate clip id '" + id + "'");
}

const AnimationClip* ClipLibrary::find(const std::string& id) const {
  const auto it = clips_.find(id);
  return it == clips_.end() ? nullptr : &it->second;
}

const AnimationClip& ClipLibrary::at(const std::string& id) const {
  const AnimationClip* c = find(id);
  if (!c) throw ValidationError("unknown clip id '" + id + "'");
  return *c;
}

std::vector<const AnimationClip*> ClipLibrary::idles() const {
  std::vector<const AnimationClip*> out;
  for (const auto& [id, c] : clips_)
    if (c.kind == ClipKind::idle) out.push_back(&c);
  return out;
}

namespace {

void check_idle_ref(const ClipLibrary& lib, const AnimationClip& action, const std::string& idle_id,
                    bool start, double tolerance, ChainReport& report) {
  const AnimationClip* idle = lib.find(idle_id);
  const std::string side = start ? "start" : "end";
  if (!idle) {
    report.violations.push_back({action.id, idle_id, side + " idle '" + idle_id + "' does not resolve", 0.0});
    return;
  }
  if (idle->kind != ClipKind::idle) {
    report.violations.push_back({action.id, idle_id, side + " idle '" + idle_id + "' is not an idle clip", 0.0});
    return;
  }
  if (idle->skeleton_ref != action.skeleton_ref ||
      idle->samples.front().pose.rotations.size() != action.samples.front().pose.rotations.size()) {
    report.violations.push_back({action.id, idle_id, side + " idle '" + idle_id + "' uses another skeleton", 0.0});
    return;
  }
  const double d = start ? pose_distance(action.samples.front().pose, idle->samples.back().pose)
                         : pose_distance(action.samples.back().pose, idle->samples.front().pose);
  if (d > tolerance) {
    report.violations.push_back(
        {action.id, idle_id, side + " boundary pose differs from idle '" + idle_id + "'", d});
  }
}

}  // namespace

ChainReport ClipLibrary::validate(double tolerance) const {
  ChainReport report;
  for (const auto& [id, c] : clips_) {
    if (c.kind != ClipKind::action) continue;
    check_idle_ref(*this, c, c.start_idle_id, true, tolerance, report);
    check_idle_ref(*this, c, c.end_idle_id, false, tolerance, report);
  }
  return report;
}

SplitResult split_take(const Take& take, double t1, double t2, const SplitIds& ids) {
  validate_take(take);
  const double duration = take.duration();
  if (!(t1 > 0.0 && t1 < t2 && t2 < duration))
    throw SplitError("cut times must satisfy 0 < t1 < t2 < duration (" + std::to_string(duration) + " s)");
  auto nearest = [&](double t) {
    const auto it = std::lower_bound(take.samples.begin(), take.samples.end(), t,
                                     [](const PoseSample& s, double v) { return s.time < v; });
    std::size_t k = static_cast<std::size_t>(it - take.samples.begin());
    if (k > 0 && (k == take.samples.size() || t - take.samples[k - 1].time <= take.samples[k].time - t)) --k;
    return k;
  };
  const std::size_t k1 = nearest(t1);
  const std::size_t k2 = nearest(t2);
  const std::size_t last = take.samples.size() - 1;
  if (k1 < 1 || k2 <= k1 || k2 >= last)
    throw SplitError("each segment must contain at least 2 samples");

  auto make = [&](const std::string& id, ClipKind kind, std::size_t from, std::size_t to) {
    AnimationClip c;
    c.id = id;
    c.kind = kind;
    c.skeleton_ref = take.skeleton_ref;
    c.frame_time = take.frame_time;
    const double base = take.samples[from].time;
    c.samples.reserve(to - from + 1);
    for (std::size_t i = from; i <= to; ++i)
      c.samples.push_back({i == from ? 0.0 : take.samples[i].time - base, take.samples[i].pose});
    return c;
  };
  SplitResult r{make(ids.idle_start, ClipKind::idle, 0, k1), make(ids.action, ClipKind::action, k1, k2),
                make(ids.idle_end, ClipKind::idle, k2, last)};
  r.action.start_idle_id = ids.idle_start;
  r.action.end_idle_id = ids.idle_end;
  return r;
}

Take concatenate_clips(std::span<const AnimationClip* const> parts, std::string id) {
  Take take;
  take.id = std::move(id);
  if (parts.empty()) return take;
  take.skeleton_ref = parts.front()->skeleton_ref;
  take.frame_time = parts.front()->frame_time;
  double offset = 0.0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& samples = parts[p]->samples;
    for (std::size_t i = (p == 0 ? 0 : 1); i < samples.size(); ++i)
      take.samples.push_back({offset + samples[i].time, samples[i].pose});
    offset += parts[p]->duration();
  }
  return take;
}

void sample_clip_into(const AnimationClip& clip, double t, Pose& out) {
  const auto& s = clip.samples;
  if (s.empty()) throw ContractError("sample_clip on empty clip '" + clip.id + "'");
  if (!(t > 0.0)) {
    out = s.front().pose;
    return;
  }
  if (t >= s.back().time) {
    out = s.back().pose;
    return;
  }
  const auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const PoseSample& p) { return v < p.time; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (t == a.time) {
    out = a.pose;
    return;
  }
  const double w = std::clamp((t - a.time) / (b.time - a.time), 0.0, 1.0);
  lerp_pose_into(a.pose, b.pose, w, out);
}

Pose sample_clip(const AnimationClip& clip, double t) {
  Pose p;
  sample_clip_into(clip, t, p);
  return p;
}

double palindrome_time(double duration, double t) {
  if (!(duration > 0.0)) return 0.0;
  const double period = 2.0 * duration;
  double u = std::fmod(std::max(t, 0.0), period);
  if (u < 0.0) u += period;
  const double s = u <= duration ? u : period - u;
  return std::clamp(s, 0.0, duration);
}

Pose sample_palindrome(const AnimationClip& clip, double t) {
  if (clip.kind != ClipKind::idle) throw ContractError("sample_palindrome on non-idle clip '" + clip.id + "'");
  return sample_clip(clip, palindrome_time(clip.duration(), t));
}

Pose sample_forward_loop(const AnimationClip& clip, double t) {
  const double d = clip.duration();
  return sample_clip(clip, d > 0.0 ? std::fmod(std::max(t, 0.0), d) : 0.0);
}

IdleSampler palindrome_sampler() {
  return [](const AnimationClip& clip, double t, Pose& out) {
    sample_clip_into(clip, palindrome_time(clip.duration(), t), out);
  };
}

IdleSampler forward_loop_sampler() {
  return [](const AnimationClip& clip, double t, Pose& out) {
    const double d = clip.duration();
    sample_clip_into(clip, d > 0.0 ? std::fmod(std::max(t, 0.0), d) : 0.0, out);
  };
}

ChainReport validate_chain(const ClipLibrary& library, std::span<const std::string> sequence, double tolerance) {
  std::vector<const AnimationClip*> actions;
  for (const auto& id : sequence) {
    const AnimationClip* c = library.find(id);
    if (!c) throw ValidationError("unresolved clip id '" + id + "'");
    if (c->kind != ClipKind::action) throw ValidationError("clip '" + id + "' is not an action");
    actions.push_back(c);
  }
  ChainReport report;
  for (std::size_t k = 0; k + 1 < actions.size(); ++k) {
    const AnimationClip& a = *actions[k];
    const AnimationClip& b = *actions[k + 1];
    if (a.end_idle_id != b.start_idle_id) {
      report.violations.push_back({a.id, b.id,
                                   "'" + a.id + "' ends in idle '" + a.end_idle_id + "' but '" + b.id +
                                       "' starts from idle '" + b.start_idle_id + "'",
                                   0.0});
      continue;
    }
    const AnimationClip* idle = library.find(a.end_idle_id);
    if (!idle) throw ValidationError("unresolved idle id '" + a.end_idle_id + "'");
    const double d_in = pose_distance(a.samples.back().pose, idle->samples.front().pose);
    const double d_out = pose_distance(idle->samples.back().pose, b.samples.front().pose);
    if (d_in > tolerance)
      report.violations.push_back({a.id, idle->id, "'" + a.id + "' end pose differs from idle '" + idle->id + "'", d_in});
    if (d_out > tolerance)
      report.violations.push_back({idle->id, b.id, "idle '" + idle->id + "' does not lead into '" + b.id + "'", d_out});
  }
  return report;
}

}  // namespace castelet
