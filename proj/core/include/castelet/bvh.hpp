#pragma once

#include "castelet/clips.hpp"
#include "castelet/skeleton.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace castelet {

struct BvhDocument {
  Skeleton skeleton;
  double frame_time = 0.0;
  std::vector<std::vector<double>> frames;  // one row per frame, declared channel order
};

// Parses a full document (HIERARCHY + MOTION). Throws ParseError with the line.
BvhDocument parse_bvh(std::string_view text);
// Parses just a HIERARCHY block (as carried in the stream handshake).
Skeleton parse_bvh_hierarchy(std::string_view text);

// Canonical output: tab indentation, 6 fractional digits.
std::string serialize_bvh(const BvhDocument& doc);
std::string serialize_bvh_hierarchy(const Skeleton& skeleton);

BvhDocument load_bvh_file(const std::string& path);
void save_bvh_file(const std::string& path, const BvhDocument& doc);

// Precomputed mapping from a channel row to a Pose.
class ChannelLayout {
 public:
  // Throws ConversionError on unsupported channel labels.
  explicit ChannelLayout(const Skeleton& skeleton);

  std::size_t channel_count() const noexcept { return channel_count_; }

  void to_pose(std::span<const double> row, double unit_scale, Pose& out) const;
  Pose to_pose(std::span<const double> row, double unit_scale) const;
  // Inverse of to_pose; rotations written in the declared order.
  std::vector<double> to_row(const Pose& pose, double unit_scale) const;

 private:
  struct JointChannels {
    std::size_t first = 0;
    int position_slot[3] = {-1, -1, -1};  // channel offset of X/Y/Z position, root only
    int rotation_slot[3] = {-1, -1, -1};  // channel offset of each rotation in order
    int rotation_axis[3] = {-1, -1, -1};
    int rotation_count = 0;
  };
  std::vector<JointChannels> joints_;
  std::size_t channel_count_ = 0;
};

// Converts every frame to a Pose; timestamps are index * frame_time.
Take frames_to_take(const BvhDocument& doc, double unit_scale, std::string id = "take");
Take frames_to_take(const Skeleton& skeleton, double frame_time,
                    std::span<const std::vector<double>> rows, double unit_scale,
                    std::string id = "take");

// Writes a take (or clip samples) back to BVH channels using the skeleton's channel specs.
BvhDocument samples_to_bvh(const Skeleton& skeleton, std::span<const PoseSample> samples,
                           double frame_time, double unit_scale);

}  // namespace castelet
