#pragma once

#include <string>
#include <vector>

#include "corridornav/dataset.hpp"
#include "corridornav/nn.hpp"

namespace corridornav::metrics {

// Exact formula evaluations over equal-length nonempty lists; all throw
// std::invalid_argument on empty or mismatched input.
double mse(const std::vector<double>& predicted, const std::vector<double>& target);
double mae(const std::vector<double>& predicted, const std::vector<double>& target);

// Mean of |(y_hat - y) / y|. Entries with |y| < 1e-6 are excluded from the
// mean and counted into *skipped when given; an all-skipped input throws.
double mre(const std::vector<double>& predicted, const std::vector<double>& target,
           int* skipped = nullptr);

struct SampleEval {
  std::string id;
  double gt = 0.0;
  double pred = 0.0;
};

struct EvalReport {
  std::string target;  // "angle" | "distance"
  int n = 0;
  double mse = 0.0;
  double mae = 0.0;
  double mre = 0.0;
  int mre_skipped = 0;
  std::string unit;         // "radians" | "unit interval"
  double mae_degrees = 0.0;  // angle only, 0 otherwise
  std::vector<SampleEval> samples;
};

enum class Target { Angle, Distance };

// Runs the model over every record (frames resolved against base_dir,
// preprocessing identical to training), in radians / raw unit interval with
// no inference clamp. Distance records without a label are skipped. Throws
// std::invalid_argument when nothing is evaluable.
EvalReport evaluate(const nn::Model& model, const std::vector<ManifestRecord>& records,
                    Target target, const std::string& base_dir,
                    const PreprocessConfig& preprocess = {});

// Qualitative spot check line, degrees: "GT: 90.720 deg, PR: 90.303 deg,
// ERR: 0.417 deg".
std::string spot_line(double gt_degrees, double pr_degrees);

}  // namespace corridornav::metrics
