#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "imcgae/tape.hpp"

namespace imcgae::gradcheck {

/// Builds a scalar loss on a fresh tape from parameter leaves registered in
/// the given order. Called repeatedly with perturbed values, so it must not
/// keep state between calls.
using LossBuilder = std::function<ValueId(Tape&, const std::vector<ValueId>&)>;

/// Worst entrywise relative error between analytic gradients and central
/// finite differences (default step 1e-4). Near-zero entries are judged
/// against a 1e-3 denominator floor.
double max_rel_error(const LossBuilder& build, const std::vector<NumArray>& params,
                     double step = 1e-4);

struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Finite-difference checks for every tape primitive plus the end-to-end
/// training loss on a seeded 6-node, 3-level instance.
std::vector<CheckResult> run_all(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace imcgae::gradcheck
