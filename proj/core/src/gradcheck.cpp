#include "ftvsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ftvsr {

GradCheckResult gradcheck(const std::string& name, const std::function<Tensor()>& loss_fn,
                          const std::vector<Tensor>& inputs, const GradCheckOptions& options) {
  GradCheckResult result;
  result.name = name;

  for (auto input : inputs) {
    if (!input.requires_grad()) throw std::invalid_argument("gradcheck: input does not require grad");
    input.zero_grad();
  }
  const Tensor loss = loss_fn();
  backward(loss);

  std::mt19937_64 rng(options.seed);
  NoGradGuard no_grad;
  for (auto input : inputs) {
    const std::vector<double> analytic = input.has_grad()
                                             ? std::vector<double>(input.grad().begin(), input.grad().end())
                                             : std::vector<double>(input.numel(), 0.0);
    std::vector<std::size_t> entries(input.numel());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_input != 0 && entries.size() > options.max_entries_per_input) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_input);
      std::sort(entries.begin(), entries.end());
    }
    auto values = input.mutable_data();
    for (std::size_t e : entries) {
      const double original = values[e];
      values[e] = original + options.step;
      const double up = loss_fn().item();
      values[e] = original - options.step;
      const double down = loss_fn().item();
      values[e] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double rel = std::abs(analytic[e] - numeric) / (std::abs(numeric) + options.floor);
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.entries_checked;
    }
  }
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

Tensor projection_loss(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

}  // namespace ftvsr
