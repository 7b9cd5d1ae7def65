#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "corridornav/flightsim.hpp"
#include "json.hpp"

using namespace corridornav;

namespace {

const CorridorSpec kCorridor{};
const CameraModel kCamera{320, 180};

class PinnedEstimator : public DeviationEstimator {
 public:
  PinnedEstimator(double angle, double distance) : est_{angle, distance} {}
  DeviationEstimate estimate_at(const Pose&) override { return est_; }

 private:
  DeviationEstimate est_;
};

SimConfig zero_latency() {
  SimConfig sim;
  sim.latency_transport = 0.0;
  sim.latency_inference = 0.0;
  return sim;
}

}  // namespace

TEST_CASE("step kinematics per command") {
  SimConfig sim;
  sim.dt = 0.1;
  sim.forward_speed = 0.5;
  const Pose base{0.2, 3.0, 1.0, 0.0};

  const Pose hover = step(base, ControlCommand::Hover, sim, 0.0);
  CHECK(hover.x == base.x);
  CHECK(hover.z == base.z);
  CHECK(hover.yaw == base.yaw);

  const Pose fwd = step(base, ControlCommand::PitchForward, sim, 0.0);
  CHECK(fwd.z == doctest::Approx(3.05).epsilon(1e-12));
  CHECK(fwd.x == base.x);

  Pose yawed = base;
  yawed.yaw = 10.0 * M_PI / 180.0;
  const Pose drift = step(yawed, ControlCommand::PitchForward, sim, 0.0);
  CHECK(drift.x < yawed.x);  // left tilt steers left
  CHECK(drift.z == doctest::Approx(3.0 + 0.05 * std::cos(yawed.yaw)).epsilon(1e-12));

  const Pose rolled_r = step(base, ControlCommand::RollRight, sim, 0.0);
  CHECK(rolled_r.x == doctest::Approx(base.x + 0.03).epsilon(1e-12));
  const Pose rolled_l = step(base, ControlCommand::RollLeft, sim, 0.0);
  CHECK(rolled_l.x == doctest::Approx(base.x - 0.03).epsilon(1e-12));

  const Pose yaw_l = step(base, ControlCommand::YawLeft, sim, 0.0);
  CHECK(yaw_l.yaw == doctest::Approx(0.03).epsilon(1e-12));
  const Pose yaw_r = step(base, ControlCommand::YawRight, sim, 0.0);
  CHECK(yaw_r.yaw == doctest::Approx(-0.03).epsilon(1e-12));

  // Yaw saturates at the attitude envelope.
  Pose near_limit = base;
  near_limit.yaw = 1.19;
  CHECK(step(near_limit, ControlCommand::YawLeft, sim, 0.0).yaw == 1.2);

  // Gust applies to every command, Land included.
  const Pose gusted = step(base, ControlCommand::Land, sim, -0.4);
  CHECK(gusted.x == doctest::Approx(base.x - 0.04).epsilon(1e-12));
  CHECK(gusted.z == base.z);
}

TEST_CASE("run_episode rejects bad starts") {
  OracleEstimator est(kCorridor, kCamera);
  CHECK_THROWS_AS(run_episode(kCorridor, {0.97, 0.0, 1.0, 0.0}, est), InvalidInitialPose);
  CHECK_THROWS_AS(run_episode(kCorridor, {0.0, -0.5, 1.0, 0.0}, est), InvalidInitialPose);
  CHECK_THROWS_AS(run_episode(kCorridor, {0.0, 0.0, 1.0, 1.6}, est), InvalidInitialPose);
  SimConfig sim;
  sim.dt = -1.0;
  CHECK_THROWS_AS(run_episode(kCorridor, {0.0, 0.0, 1.0, 0.0}, est, {}, sim),
                  std::invalid_argument);
}

TEST_CASE("a centered noise-free start reaches the corridor end") {
  OracleEstimator est(kCorridor, kCamera);
  const auto trace = run_episode(kCorridor, {0.0, 0.0, 1.0, 0.0}, est);
  CHECK(trace.outcome == Outcome::EndReached);
  CHECK(trace.success);
  double max_x = 0.0;
  double prev_t = -1.0;
  for (const auto& tick : trace.ticks) {
    max_x = std::max(max_x, std::abs(tick.pose.x));
    CHECK(tick.t > prev_t);
    prev_t = tick.t;
  }
  CHECK(max_x < 0.1);
  CHECK(trace.ticks.back().pose.z >= kCorridor.length - 1.0 - 1e-9);
  // 19 m to cover at 0.4 m/s, plus the pre-arrival hover.
  CHECK(trace.end_time > 40.0);
  CHECK(trace.end_time < 60.0);
}

TEST_CASE("estimate timing bookkeeping matches the latency model") {
  OracleEstimator est(kCorridor, kCamera);
  const auto trace = run_episode(kCorridor, {0.1, 0.0, 1.0, 0.0}, est);
  REQUIRE(trace.estimate_times.size() > 10);
  for (const auto& [capture_t, decide_t] : trace.estimate_times)
    CHECK(decide_t - capture_t == doctest::Approx(0.29).epsilon(1e-9));
  for (size_t i = 1; i < trace.estimate_times.size(); ++i)
    CHECK(trace.estimate_times[i].second - trace.estimate_times[i - 1].second ==
          doctest::Approx(0.29).epsilon(1e-9));
  // Before the first arrival the command is the hover placeholder.
  for (const auto& tick : trace.ticks) {
    if (tick.t < 0.29 - 1e-9) {
      CHECK(tick.command == ControlCommand::Hover);
      CHECK_FALSE(tick.estimate.has_value());
    } else {
      break;
    }
  }
}

TEST_CASE("zero latency pins capture and decision to the same tick") {
  OracleEstimator est(kCorridor, kCamera);
  const auto trace = run_episode(kCorridor, {0.1, 0.0, 1.0, 0.0}, est, {}, zero_latency());
  REQUIRE(!trace.estimate_times.empty());
  for (const auto& [capture_t, decide_t] : trace.estimate_times)
    CHECK(decide_t == capture_t);
  CHECK(trace.outcome == Outcome::EndReached);
}

TEST_CASE("a forced out-of-bound estimate lands after the timer") {
  PinnedEstimator est(0.0, 0.5);

  // Default latency: decisions at k*0.29; the timer starts at 0.29 and the
  // first decision at least 1 s later is at 1.45.
  const auto trace = run_episode(kCorridor, {0.0, 0.0, 1.0, 0.0}, est);
  CHECK(trace.outcome == Outcome::Landed);
  CHECK_FALSE(trace.success);
  CHECK(trace.end_time == doctest::Approx(1.45).epsilon(1e-9));

  // Zero latency, 0.1 s camera: timer starts at 0.1, lands at 1.1.
  SimConfig sim = zero_latency();
  sim.capture_interval = 0.1;
  const auto fast = run_episode(kCorridor, {0.0, 0.0, 1.0, 0.0}, est, {}, sim);
  CHECK(fast.outcome == Outcome::Landed);
  CHECK(fast.end_time == doctest::Approx(1.1).epsilon(1e-9));
}

TEST_CASE("corrections engage in the documented order from a wall start") {
  OracleEstimator est(kCorridor, kCamera);
  const auto trace = run_episode(kCorridor, {-0.8, 0.0, 1.0, 0.0}, est, {}, zero_latency());
  CHECK(trace.outcome == Outcome::EndReached);
  REQUIRE(!trace.ticks.empty());
  // Translational correction first: RollRight from the left wall.
  bool saw_forward = false;
  bool saw_first = false;
  for (const auto& tick : trace.ticks) {
    if (!saw_first && tick.command != ControlCommand::Hover) {
      CHECK(tick.command == ControlCommand::RollRight);
      saw_first = true;
    }
    if (tick.command == ControlCommand::PitchForward) saw_forward = true;
    if (!saw_forward) CHECK(tick.pose.x >= -0.8 - 1e-9);
  }
  CHECK(saw_first);
  CHECK(saw_forward);
  // x never overshoots into the opposite half beyond the steady band.
  CHECK(trace.max_abs_x_steady < 0.1);
}

TEST_CASE("convergence: steady bands reached within a quarter corridor") {
  for (double x0 : {-0.8, 0.8}) {
    for (double yaw0 : {-0.349, 0.0, 0.349}) {
      OracleEstimator est(kCorridor, kCamera);
      const auto trace =
          run_episode(kCorridor, {x0, 0.0, 1.0, yaw0}, est, {}, zero_latency());
      CHECK(trace.outcome == Outcome::EndReached);
      CHECK(trace.reached_steady);
      bool found = false;
      for (const auto& tick : trace.ticks) {
        if (tick.t >= trace.steady_time) {
          CHECK(tick.pose.z < 0.25 * kCorridor.length);
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("a blind forward flier with a tilt hits the wall") {
  PinnedEstimator est(M_PI / 2, 0.5);  // always PitchForward
  const auto trace = run_episode(kCorridor, {0.0, 0.0, 1.0, 0.5}, est, {}, zero_latency());
  CHECK(trace.outcome == Outcome::WallCollision);
  CHECK_FALSE(trace.success);
  // Every tick but the terminal one stays inside the corridor volume.
  for (size_t i = 0; i + 1 < trace.ticks.size(); ++i)
    CHECK(pose_inside(trace.ticks[i].pose, kCorridor));
  CHECK(std::abs(trace.ticks.back().pose.x) >= kCorridor.width / 2.0 - 0.05 - 1e-9);
}

TEST_CASE("an endless yaw loop times out") {
  PinnedEstimator est(M_PI / 2, 0.2);  // always YawLeft
  SimConfig sim = zero_latency();
  sim.max_time = 2.0;
  const auto trace = run_episode(kCorridor, {0.0, 0.0, 1.0, 0.0}, est, {}, sim);
  CHECK(trace.outcome == Outcome::Timeout);
  CHECK(trace.end_time == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(trace.ticks.back().pose.z == 0.0);
  // Yawing since the first camera frame at 0.03 s: 0.3 rad/s * 1.97 s.
  CHECK(trace.ticks.back().pose.yaw == doctest::Approx(0.591).epsilon(1e-6));
}

TEST_CASE("save_trace writes one line per tick plus the outcome record") {
  PinnedEstimator est(0.0, 0.5);
  const auto trace = run_episode(kCorridor, {0.0, 0.0, 1.0, 0.0}, est);
  const auto path = std::filesystem::temp_directory_path() / "corridornav_test_trace.jsonl";
  save_trace(trace, path.string());

  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == trace.ticks.size() + 1);
  CHECK(lines[0]["command"] == "Hover");
  CHECK(lines[0]["estimate"].is_null());
  CHECK(lines[0]["pose"]["x"] == 0.0);
  CHECK(lines.back()["outcome"] == "Landed");
  CHECK(lines.back()["success"] == false);
  CHECK(lines[lines.size() - 2]["command"] == "Land");
  std::filesystem::remove(path);
}

TEST_CASE("run_sweep is reproducible and clean under zero noise") {
  const EstimatorFactory factory = [&](uint64_t seed) {
    OracleNoise noise;
    noise.seed = seed;
    return std::make_unique<OracleEstimator>(kCorridor, kCamera, noise);
  };
  SweepConfig cfg;
  cfg.n_episodes = 10;
  cfg.master_seed = 5;
  const SimConfig sim = zero_latency();
  const auto a = run_sweep(kCorridor, factory, cfg, {}, sim);
  const auto b = run_sweep(kCorridor, factory, cfg, {}, sim);
  CHECK(a.n == 10);
  CHECK(a.successes == 10);
  CHECK(a.success_rate == 1.0);
  CHECK(a.collisions == 0);
  CHECK(a.steady_count == 10);
  CHECK(a.max_abs_x_steady < 0.1);
  CHECK(a.successes == b.successes);
  CHECK(a.mean_abs_x == b.mean_abs_x);
  CHECK(a.max_abs_x == b.max_abs_x);
  CHECK(a.mean_end_time == b.mean_end_time);

  SweepConfig other = cfg;
  other.master_seed = 6;
  const auto c = run_sweep(kCorridor, factory, other, {}, sim);
  CHECK(a.mean_abs_x != c.mean_abs_x);
}

TEST_CASE("heavy wind breaks the loop; calm wind does not") {
  const EstimatorFactory factory = [&](uint64_t) {
    return std::make_unique<OracleEstimator>(kCorridor, kCamera);
  };
  SweepConfig cfg;
  cfg.n_episodes = 20;
  cfg.master_seed = 77;

  SimConfig calm = zero_latency();
  calm.wind.sigma_lateral = 0.05;
  const auto ok = run_sweep(kCorridor, factory, cfg, {}, calm);
  CHECK(ok.successes == 20);

  // Documented breaking threshold: gusts near 3 m/s overwhelm the 0.3 m/s
  // lateral authority.
  SimConfig gale = zero_latency();
  gale.wind.sigma_lateral = 3.0;
  const auto broken = run_sweep(kCorridor, factory, cfg, {}, gale);
  CHECK(broken.successes < 20);
  CHECK(broken.collisions > 0);
}
