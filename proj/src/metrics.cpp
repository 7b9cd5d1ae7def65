#include "corridornav/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "corridornav/render.hpp"

namespace corridornav::metrics {

namespace {

constexpr double kMreGuard = 1e-6;

void check_lists(const std::vector<double>& predicted, const std::vector<double>& target) {
  if (predicted.empty()) throw std::invalid_argument("metrics: empty input");
  if (predicted.size() != target.size()) throw std::invalid_argument("metrics: length mismatch");
}

}  // namespace

double mse(const std::vector<double>& predicted, const std::vector<double>& target) {
  check_lists(predicted, target);
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

double mae(const std::vector<double>& predicted, const std::vector<double>& target) {
  check_lists(predicted, target);
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) acc += std::abs(predicted[i] - target[i]);
  return acc / static_cast<double>(predicted.size());
}

double mre(const std::vector<double>& predicted, const std::vector<double>& target,
           int* skipped) {
  check_lists(predicted, target);
  double acc = 0.0;
  int used = 0, skip = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (std::abs(target[i]) < kMreGuard) {
      ++skip;
      continue;
    }
    acc += std::abs((predicted[i] - target[i]) / target[i]);
    ++used;
  }
  if (skipped) *skipped = skip;
  if (used == 0) throw std::invalid_argument("mre: every target below the zero guard");
  return acc / used;
}

EvalReport evaluate(const nn::Model& model, const std::vector<ManifestRecord>& records,
                    Target target, const std::string& base_dir,
                    const PreprocessConfig& preprocess_cfg) {
  EvalReport report;
  report.target = target == Target::Angle ? "angle" : "distance";
  report.unit = target == Target::Angle ? "radians" : "unit interval";

  std::vector<double> preds, gts;
  nn::Workspace ws;
  for (const ManifestRecord& rec : records) {
    double gt;
    if (target == Target::Angle) {
      gt = rec.angle;
    } else {
      if (!rec.distance) continue;
      gt = *rec.distance;
    }
    const Frame frame = load_ppm((std::filesystem::path(base_dir) / rec.frame).string());
    const double pred = nn::forward(model, preprocess(frame, preprocess_cfg), ws);
    preds.push_back(pred);
    gts.push_back(gt);
    report.samples.push_back({rec.id, gt, pred});
  }
  if (preds.empty()) throw std::invalid_argument("evaluate: no evaluable records");

  report.n = static_cast<int>(preds.size());
  report.mse = mse(preds, gts);
  report.mae = mae(preds, gts);
  report.mre = mre(preds, gts, &report.mre_skipped);
  if (target == Target::Angle) report.mae_degrees = report.mae * 180.0 / M_PI;
  return report;
}

std::string spot_line(double gt_degrees, double pr_degrees) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "GT: %.3f deg, PR: %.3f deg, ERR: %.3f deg", gt_degrees,
                pr_degrees, std::abs(gt_degrees - pr_degrees));
  return buf;
}

}  // namespace corridornav::metrics
