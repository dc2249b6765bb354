#pragma once

#include "castelet/skeleton.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace castelet {

struct PoseSample {
  double time = 0.0;
  Pose pose;
};

// A raw recording. Timestamps strictly increase from 0.
struct Take {
  std::string id;
  std::string skeleton_ref;
  std::vector<PoseSample> samples;
  double frame_time = 0.0;

  double duration() const { return samples.empty() ? 0.0 : samples.back().time; }
};

enum class ClipKind { action, idle };

std::string_view to_string(ClipKind kind);
ClipKind parse_clip_kind(std::string_view s);

struct AnimationClip {
  std::string id;
  ClipKind kind = ClipKind::idle;
  std::string skeleton_ref;
  std::vector<PoseSample> samples;
  double frame_time = 0.0;
  std::string start_idle_id;  // actions only
  std::string end_idle_id;    // actions only

  double duration() const { return samples.empty() ? 0.0 : samples.back().time; }
};

// Throws ContractError on broken sample invariants (ordering, start at 0,
// joint counts, idle references on idle clips, zero duration).
void validate_samples(std::span<const PoseSample> samples, std::string_view what);
void validate_clip(const AnimationClip& clip);
void validate_take(const Take& take);

inline constexpr double kDefaultChainTolerance = 0.05;

struct ChainViolation {
  std::string from_clip;
  std::string to_clip;
  std::string message;
  double distance = 0.0;  // measured boundary pose_distance, 0 when not applicable
};

struct ChainReport {
  std::vector<ChainViolation> violations;
  bool ok() const { return violations.empty(); }
};

class ClipLibrary {
 public:
  void add(AnimationClip clip);  // throws ContractError on duplicate id
  const AnimationClip* find(const std::string& id) const;
  const AnimationClip& at(const std::string& id) const;  // throws ValidationError
  const std::map<std::string, AnimationClip>& clips() const { return clips_; }
  std::vector<const AnimationClip*> idles() const;

  // Resolves every idle reference and checks boundary poses against tolerance.
  ChainReport validate(double tolerance = kDefaultChainTolerance) const;

 private:
  std::map<std::string, AnimationClip> clips_;
};

struct SplitIds {
  std::string idle_start;
  std::string action;
  std::string idle_end;
};

struct SplitResult {
  AnimationClip idle_start;
  AnimationClip action;
  AnimationClip idle_end;
};

// Cut times snap to the nearest sample; the cut sample is shared by both
// neighbouring clips. Throws SplitError on bad cuts.
SplitResult split_take(const Take& take, double t1, double t2, const SplitIds& ids);
// Inverse of split_take: joins clips dropping each duplicated boundary sample.
Take concatenate_clips(std::span<const AnimationClip* const> parts, std::string id);

Pose sample_clip(const AnimationClip& clip, double t);
void sample_clip_into(const AnimationClip& clip, double t, Pose& out);

// Source time of ping-pong playback: u = t mod 2D, s = u <= D ? u : 2D - u.
double palindrome_time(double duration, double t);
Pose sample_palindrome(const AnimationClip& clip, double t);
// Naive wrap-around looping (t mod D), kept for comparison with the palindrome.
Pose sample_forward_loop(const AnimationClip& clip, double t);

// Pluggable idle playback; the FSM uses palindrome playback by default.
using IdleSampler = std::function<void(const AnimationClip&, double, Pose&)>;
IdleSampler palindrome_sampler();
IdleSampler forward_loop_sampler();

ChainReport validate_chain(const ClipLibrary& library, std::span<const std::string> sequence,
                           double tolerance = kDefaultChainTolerance);

}  // namespace castelet
