#pragma once

#include <chrono>
#include <string>

namespace acceptance {

struct Env {
  std::string work;  // scratch directory shared by all criteria
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome c1_unit_weight_equivalence(const Env& env);
Outcome c2_gradient_check(const Env& env);
Outcome c3_mask_properties(const Env& env);
Outcome c4_metric_oracles(const Env& env);
Outcome c5_rollout_estimator(const Env& env);
Outcome c6_learning_signal(const Env& env);
Outcome c7_regularization_direction(const Env& env);
Outcome c8_scaling_direction(const Env& env);
Outcome c9_interface_parity(const Env& env);
Outcome c10_pipeline_determinism(const Env& env);

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace acceptance
