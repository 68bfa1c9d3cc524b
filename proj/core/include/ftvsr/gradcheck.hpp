#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ftvsr/tensor.hpp"

namespace ftvsr {

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  // Added to |fd| in the denominator of the relative error.
  double floor = 1e-8;
  // 0 checks every entry; otherwise a seeded random subset per input.
  std::size_t max_entries_per_input = 0;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

// Compares backward() against central differences of `loss_fn` with respect to
// every entry of `inputs`. The inputs must be requires_grad leaves that
// `loss_fn` reads; they are perturbed in place and restored.
GradCheckResult gradcheck(const std::string& name, const std::function<Tensor()>& loss_fn,
                          const std::vector<Tensor>& inputs, const GradCheckOptions& options = {});

// Scalar probe for non-scalar outputs: sum(out * weights) with fixed weights.
Tensor projection_loss(const Tensor& out, const Tensor& weights);

}  // namespace ftvsr
