#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace sectrack {

using Point2 = Eigen::Vector2d;

// Anchor ground truth. `reported_pos` is what the tracker is told; it only
// differs from `true_pos` for location-spoofing anchors.
struct AnchorNode {
  int id = 0;
  Point2 true_pos = Point2::Zero();
  Point2 reported_pos = Point2::Zero();
  bool honest = true;
};

// One squared-distance measurement, tagged with the reporting anchor.
struct Measurement {
  int anchor_id = 0;
  double z = 0.0;  // m^2
};

struct MeasurementSet {
  int step = 0;
  std::vector<Measurement> items;
};

// Sample skipped because the target sat exactly on the anchor.
struct DroppedSample {
  int step = 0;
  int anchor_id = 0;
};

struct MeasurementStream {
  std::vector<MeasurementSet> steps;
  std::vector<DroppedSample> dropped;
};

}  // namespace sectrack
