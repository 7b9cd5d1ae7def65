#include "corridornav/flightsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "corridornav/rng.hpp"
#include "json.hpp"

namespace corridornav {

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::EndReached: return "EndReached";
    case Outcome::WallCollision: return "WallCollision";
    case Outcome::Landed: return "Landed";
    case Outcome::Timeout: return "Timeout";
  }
  return "?";
}

Pose step(const Pose& pose, ControlCommand command, const SimConfig& sim, double lateral_gust) {
  Pose next = pose;
  switch (command) {
    case ControlCommand::PitchForward:
      next.z += sim.forward_speed * std::cos(pose.yaw) * sim.dt;
      next.x += -sim.forward_speed * std::sin(pose.yaw) * sim.dt;
      break;
    case ControlCommand::RollLeft:
      next.x -= sim.lateral_speed * sim.dt;
      break;
    case ControlCommand::RollRight:
      next.x += sim.lateral_speed * sim.dt;
      break;
    case ControlCommand::YawLeft:
      next.yaw = std::min(pose.yaw + sim.yaw_rate * sim.dt, sim.yaw_limit);
      break;
    case ControlCommand::YawRight:
      next.yaw = std::max(pose.yaw - sim.yaw_rate * sim.dt, -sim.yaw_limit);
      break;
    case ControlCommand::Hover:
    case ControlCommand::Land:
      break;
  }
  next.x += lateral_gust * sim.dt;
  return next;
}

namespace {

void check_sim(const SimConfig& sim) {
  if (sim.dt <= 0.0 || sim.forward_speed <= 0.0 || sim.lateral_speed <= 0.0 ||
      sim.yaw_rate <= 0.0 || sim.capture_interval <= 0.0 || sim.max_time <= 0.0 ||
      sim.latency_transport < 0.0 || sim.latency_inference < 0.0 ||
      sim.wind.sigma_lateral < 0.0)
    throw std::invalid_argument("SimConfig: non-positive field");
}

}  // namespace

EpisodeTrace run_episode(const CorridorSpec& corridor, const Pose& initial,
                         DeviationEstimator& estimator, const ControllerConfig& ctrl,
                         const SimConfig& sim, const CameraModel& camera) {
  check_sim(sim);
  if (!pose_inside(initial, corridor) ||
      std::abs(initial.x) >= corridor.width / 2.0 - sim.wall_margin)
    throw InvalidInitialPose("initial pose outside the flyable corridor volume");

  const double latency = sim.latency_transport + sim.latency_inference;
  const double period = std::max(latency, sim.capture_interval);
  const double steady_x = initial.h * std::tan(ctrl.delta_angle);
  const double steady_yaw = std::atan(ctrl.delta_dist * camera.image_width / camera.focal());
  const double eps = 1e-9;

  EpisodeTrace trace;
  Pose pose = initial;
  ControllerState state;
  ControlCommand cmd = ControlCommand::Hover;
  std::optional<DeviationEstimate> current_est;

  Rng wind_rng(sim.wind.seed);
  const auto draw_gust = [&]() {
    const double clamp3 = 3.0 * sim.wind.sigma_lateral;
    return std::clamp(wind_rng.gaussian(0.0, sim.wind.sigma_lateral), -clamp3, clamp3);
  };
  double gust = draw_gust();

  double next_capture = period - latency;
  double next_arrival = period;
  std::optional<DeviationEstimate> pending;
  double pending_capture_t = 0.0;

  const long max_ticks = std::lround(sim.max_time / sim.dt);
  for (long k = 0;; ++k) {
    const double t = k * sim.dt;

    // Arrival before capture so the pending slot frees up on the same tick a
    // new capture is due (latency == period); a second arrival check covers
    // the zero-latency case where capture and arrival share the tick.
    bool landed = false;
    const auto process_arrival = [&]() {
      if (!pending || t + eps < next_arrival) return;
      current_est = pending;
      trace.estimate_times.emplace_back(pending_capture_t, t);
      const DeviationEstimate est = *current_est;
      cmd = decide(
          est.angle, [&est]() { return est.distance; }, state, t, ctrl);
      pending.reset();
      next_arrival += period;
      next_capture = next_arrival - latency;
      gust = draw_gust();
      if (cmd == ControlCommand::Land) landed = true;
    };
    process_arrival();
    if (!landed && !pending && t + eps >= next_capture) {
      pending = estimator.estimate_at(pose);
      pending_capture_t = t;
      process_arrival();
    }
    if (landed) {
      trace.ticks.push_back({t, pose, current_est, cmd});
      trace.outcome = Outcome::Landed;
      trace.end_time = t;
      return trace;
    }

    if (k >= max_ticks) {
      trace.ticks.push_back({t, pose, current_est, cmd});
      trace.outcome = Outcome::Timeout;
      trace.end_time = t;
      return trace;
    }

    trace.ticks.push_back({t, pose, current_est, cmd});
    pose = step(pose, cmd, sim, gust);
    const double tn = (k + 1) * sim.dt;

    if (std::abs(pose.x) >= corridor.width / 2.0 - sim.wall_margin) {
      trace.ticks.push_back({tn, pose, current_est, cmd});
      trace.outcome = Outcome::WallCollision;
      trace.end_time = tn;
      return trace;
    }
    if (pose.z >= corridor.length - sim.end_margin) {
      trace.ticks.push_back({tn, pose, current_est, cmd});
      trace.outcome = Outcome::EndReached;
      trace.success = true;
      trace.end_time = tn;
      return trace;
    }
    if (!trace.reached_steady && std::abs(pose.x) <= steady_x &&
        std::abs(pose.yaw) <= steady_yaw) {
      trace.reached_steady = true;
      trace.steady_time = tn;
    }
    if (trace.reached_steady)
      trace.max_abs_x_steady = std::max(trace.max_abs_x_steady, std::abs(pose.x));
  }
}

void save_trace(const EpisodeTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const TraceTick& tick : trace.ticks) {
    nlohmann::ordered_json j;
    j["t"] = tick.t;
    j["pose"] = {{"x", tick.pose.x}, {"z", tick.pose.z}, {"h", tick.pose.h},
                 {"yaw", tick.pose.yaw}};
    if (tick.estimate)
      j["estimate"] = {{"angle", tick.estimate->angle}, {"distance", tick.estimate->distance}};
    else
      j["estimate"] = nullptr;
    j["command"] = to_string(tick.command);
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json tail;
  tail["outcome"] = to_string(trace.outcome);
  tail["success"] = trace.success;
  tail["end_time"] = trace.end_time;
  tail["reached_steady"] = trace.reached_steady;
  tail["steady_time"] = trace.steady_time;
  tail["max_abs_x_steady"] = trace.max_abs_x_steady;
  out << tail.dump() << '\n';
  if (!out) throw std::runtime_error("short write: " + path);
}

SweepSummary run_sweep(const CorridorSpec& corridor, const EstimatorFactory& factory,
                       const SweepConfig& sweep, const ControllerConfig& ctrl,
                       const SimConfig& sim, const CameraModel& camera) {
  if (sweep.n_episodes <= 0) throw std::invalid_argument("run_sweep: n_episodes must be positive");
  SweepSummary s;
  s.n = sweep.n_episodes;
  double abs_x_sum = 0.0;
  long tick_count = 0;
  double end_sum = 0.0;
  for (int e = 0; e < sweep.n_episodes; ++e) {
    Rng start_rng(hash64(sweep.master_seed, 17, static_cast<uint64_t>(e)));
    const Pose init{start_rng.uniform(-sweep.start_x_limit, sweep.start_x_limit), sweep.start_z,
                    sweep.start_h,
                    start_rng.uniform(-sweep.start_yaw_limit, sweep.start_yaw_limit)};
    SimConfig ep_sim = sim;
    ep_sim.wind.seed = hash64(sweep.master_seed, 19, static_cast<uint64_t>(e));
    const auto est = factory(hash64(sweep.master_seed, 23, static_cast<uint64_t>(e)));
    const EpisodeTrace trace = run_episode(corridor, init, *est, ctrl, ep_sim, camera);

    switch (trace.outcome) {
      case Outcome::EndReached: ++s.successes; break;
      case Outcome::WallCollision: ++s.collisions; break;
      case Outcome::Landed: ++s.landings; break;
      case Outcome::Timeout: ++s.timeouts; break;
    }
    for (const TraceTick& tick : trace.ticks) {
      abs_x_sum += std::abs(tick.pose.x);
      ++tick_count;
      s.max_abs_x = std::max(s.max_abs_x, std::abs(tick.pose.x));
    }
    if (trace.reached_steady) {
      ++s.steady_count;
      s.max_abs_x_steady = std::max(s.max_abs_x_steady, trace.max_abs_x_steady);
    }
    end_sum += trace.end_time;
  }
  s.success_rate = static_cast<double>(s.successes) / s.n;
  s.mean_abs_x = tick_count ? abs_x_sum / tick_count : 0.0;
  s.mean_end_time = end_sum / s.n;
  return s;
}

}  // namespace corridornav
