#include "corridornav/controller.hpp"

#include <cmath>

namespace corridornav {

const char* to_string(ControlCommand command) {
  switch (command) {
    case ControlCommand::PitchForward: return "PitchForward";
    case ControlCommand::RollLeft: return "RollLeft";
    case ControlCommand::RollRight: return "RollRight";
    case ControlCommand::YawLeft: return "YawLeft";
    case ControlCommand::YawRight: return "YawRight";
    case ControlCommand::Hover: return "Hover";
    case ControlCommand::Land: return "Land";
  }
  return "?";
}

ControlCommand decide(double angle, const std::function<double()>& distance_source,
                      ControllerState& state, double now, const ControllerConfig& config) {
  const double half_pi = M_PI / 2.0;

  if (angle < config.angle_lo || angle > config.angle_hi) {
    if (!state.out_of_bound_since) state.out_of_bound_since = now;
    if (now - *state.out_of_bound_since >= config.land_after) return ControlCommand::Land;
  } else {
    state.out_of_bound_since.reset();
  }

  if (std::abs(angle - half_pi) <= config.delta_angle) {
    const double dist = distance_source();
    if (std::abs(dist - 0.5) <= config.delta_dist) return ControlCommand::PitchForward;
    if (dist < 0.5 - config.delta_dist) return ControlCommand::YawLeft;
    return ControlCommand::YawRight;
  }
  if (angle < half_pi - config.delta_angle) return ControlCommand::RollRight;
  return ControlCommand::RollLeft;
}

void reset(ControllerState& state) { state.out_of_bound_since.reset(); }

}  // namespace corridornav
