#pragma once

#include <cstdint>

#include "corridornav/dataset.hpp"
#include "corridornav/geometry.hpp"
#include "corridornav/nn.hpp"
#include "corridornav/rng.hpp"

namespace corridornav {

// What the controller consumes each cycle. angle is the translational
// deviation cue in [0, pi]; distance the rotational cue in [0, 1].
struct DeviationEstimate {
  double angle = 1.5707963267948966;
  double distance = 0.5;
};

class DeviationEstimator {
 public:
  virtual ~DeviationEstimator() = default;
  virtual DeviationEstimate estimate_at(const Pose& pose) = 0;
};

struct OracleNoise {
  double sigma_angle = 0.0;  // radians
  double sigma_dist = 0.0;   // unit interval
  uint64_t seed = 0;
};

// Closed-form labels plus seeded Gaussian noise, clamped to the label ranges.
// Stands in for the trained networks when isolating the control loop.
class OracleEstimator : public DeviationEstimator {
 public:
  OracleEstimator(const CorridorSpec& corridor, const CameraModel& camera,
                  const OracleNoise& noise = {});
  DeviationEstimate estimate_at(const Pose& pose) override;

 private:
  CorridorSpec corridor_;
  CameraModel camera_;
  OracleNoise noise_;
  Rng rng_;
};

// Renders the onboard view at the pose, preprocesses it, and runs the two
// trained networks. Predictions are clamped to the label ranges (inference
// only; training never clamps).
class RegressorEstimator : public DeviationEstimator {
 public:
  RegressorEstimator(const CorridorSpec& corridor, const CameraModel& camera,
                     nn::Model angle_model, nn::Model distance_model,
                     const PreprocessConfig& preprocess = {});
  DeviationEstimate estimate_at(const Pose& pose) override;

 private:
  CorridorSpec corridor_;
  CameraModel camera_;
  nn::Model angle_model_;
  nn::Model distance_model_;
  PreprocessConfig preprocess_;
  nn::Workspace ws_;
};

}  // namespace corridornav
