#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "corridornav/controller.hpp"
#include "corridornav/estimator.hpp"
#include "corridornav/geometry.hpp"

namespace corridornav {

struct WindConfig {
  double sigma_lateral = 0.0;  // m/s, zero-mean gust held per control period
  uint64_t seed = 0;
};

struct SimConfig {
  double dt = 0.01;              // seconds per kinematic tick
  double forward_speed = 0.4;    // m/s under PitchForward
  double lateral_speed = 0.3;    // m/s under Roll
  double yaw_rate = 0.3;         // rad/s under Yaw
  double latency_transport = 0.21;
  double latency_inference = 0.08;
  double capture_interval = 0.03;  // floor on the control period (camera rate)
  WindConfig wind;
  double wall_margin = 0.05;  // |x| >= width/2 - margin counts as a collision
  double end_margin = 1.0;    // stop zone before the front wall
  double max_time = 180.0;
  double yaw_limit = 1.2;  // rad, attitude envelope
};

enum class Outcome { EndReached, WallCollision, Landed, Timeout };

const char* to_string(Outcome outcome);

struct TraceTick {
  double t = 0.0;
  Pose pose;
  std::optional<DeviationEstimate> estimate;  // stale estimate in effect
  ControlCommand command = ControlCommand::Hover;
};

struct EpisodeTrace {
  std::vector<TraceTick> ticks;  // t strictly increasing
  Outcome outcome = Outcome::Timeout;
  bool success = false;  // outcome == EndReached
  double end_time = 0.0;
  bool reached_steady = false;   // first time inside both controller bands
  double steady_time = 0.0;
  double max_abs_x_steady = 0.0;  // worst |x| after reaching steady state
  // (capture time, decision time) per estimate; their difference is the
  // transport + inference latency whenever the period divides dt evenly.
  std::vector<std::pair<double, double>> estimate_times;
};

struct InvalidInitialPose : std::runtime_error {
  explicit InvalidInitialPose(const char* what) : std::runtime_error(what) {}
};

// One velocity-level kinematic tick; the drone's inner-loop attitude control
// is abstracted away. lateral_gust applies to every command, Land and Hover
// included.
Pose step(const Pose& pose, ControlCommand command, const SimConfig& sim, double lateral_gust);

// Closed-loop episode. Estimates are captured at pose(t) and take effect at
// t + transport + inference; commands hold between arrivals. The camera is
// only consulted for its geometry (steady-state band bookkeeping).
EpisodeTrace run_episode(const CorridorSpec& corridor, const Pose& initial,
                         DeviationEstimator& estimator, const ControllerConfig& ctrl = {},
                         const SimConfig& sim = {}, const CameraModel& camera = {});

// JSON-lines: one tick per line plus a final outcome record.
void save_trace(const EpisodeTrace& trace, const std::string& path);

struct SweepConfig {
  int n_episodes = 100;
  uint64_t master_seed = 0;
  double start_x_limit = 0.8;  // |x0| drawn uniformly within, meters
  double start_yaw_limit = 0.2617993877991494;  // 15 degrees
  double start_z = 0.0;
  double start_h = 1.0;
};

struct SweepSummary {
  int n = 0;
  int successes = 0;
  int collisions = 0;
  int landings = 0;
  int timeouts = 0;
  double success_rate = 0.0;
  double mean_abs_x = 0.0;  // averaged over every tick of every episode
  double max_abs_x = 0.0;
  double mean_end_time = 0.0;
  int steady_count = 0;
  double max_abs_x_steady = 0.0;  // worst over episodes that reached steady
};

using EstimatorFactory = std::function<std::unique_ptr<DeviationEstimator>(uint64_t episode_seed)>;

// Seeded batch of episodes with randomized starts and per-episode wind
// seeds. Identical inputs give identical summaries.
SweepSummary run_sweep(const CorridorSpec& corridor, const EstimatorFactory& factory,
                       const SweepConfig& sweep, const ControllerConfig& ctrl = {},
                       const SimConfig& sim = {}, const CameraModel& camera = {});

}  // namespace corridornav
