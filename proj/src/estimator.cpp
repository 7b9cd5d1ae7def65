#include "corridornav/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "corridornav/render.hpp"

namespace corridornav {

OracleEstimator::OracleEstimator(const CorridorSpec& corridor, const CameraModel& camera,
                                 const OracleNoise& noise)
    : corridor_(corridor), camera_(camera), noise_(noise), rng_(noise.seed) {}

DeviationEstimate OracleEstimator::estimate_at(const Pose& pose) {
  DeviationEstimate est;
  est.angle = cbl_angle(pose, corridor_, camera_);
  if (const auto d = cbl_distance(pose, corridor_, camera_)) {
    est.distance = *d;
  } else {
    // Crossing outside the wide frame margin: saturate toward the tilt side.
    est.distance = pose.yaw > 0.0 ? 1.0 : 0.0;
  }
  est.angle = std::clamp(est.angle + rng_.gaussian(0.0, noise_.sigma_angle), 0.0, M_PI);
  est.distance = std::clamp(est.distance + rng_.gaussian(0.0, noise_.sigma_dist), 0.0, 1.0);
  return est;
}

RegressorEstimator::RegressorEstimator(const CorridorSpec& corridor, const CameraModel& camera,
                                       nn::Model angle_model, nn::Model distance_model,
                                       const PreprocessConfig& preprocess)
    : corridor_(corridor),
      camera_(camera),
      angle_model_(std::move(angle_model)),
      distance_model_(std::move(distance_model)),
      preprocess_(preprocess) {}

DeviationEstimate RegressorEstimator::estimate_at(const Pose& pose) {
  const Frame frame = render_frame(corridor_, pose, camera_);
  const nn::Tensor input = preprocess(frame, preprocess_);
  DeviationEstimate est;
  est.angle = std::clamp(nn::forward(angle_model_, input, ws_), 0.0, M_PI);
  est.distance = std::clamp(nn::forward(distance_model_, input, ws_), 0.0, 1.0);
  return est;
}

}  // namespace corridornav
