#pragma once

#include <functional>
#include <optional>

namespace corridornav {

enum class ControlCommand { PitchForward, RollLeft, RollRight, YawLeft, YawRight, Hover, Land };

const char* to_string(ControlCommand command);

struct ControllerConfig {
  double delta_angle = 0.08726646259971647;  // 5 degrees
  double delta_dist = 0.05;
  double angle_lo = 0.3490658503988659;      // 20 degrees
  double angle_hi = 2.792526803190927;       // 160 degrees
  double land_after = 1.0;                   // seconds continuously out of bound
};

struct ControllerState {
  std::optional<double> out_of_bound_since;
};

// One decision cycle. Branch order: the landing timer first, then the
// near-90-degree band (the only place distance_source is queried), then the
// roll branches. Never returns Hover; that is the simulator's pre-estimate
// placeholder.
ControlCommand decide(double angle, const std::function<double()>& distance_source,
                      ControllerState& state, double now, const ControllerConfig& config = {});

void reset(ControllerState& state);

}  // namespace corridornav
