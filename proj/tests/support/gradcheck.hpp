// Copyright 2026 The morphboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Central finite-difference oracle for the hand-written backward pass.

#ifndef MORPHBOOT_TESTS_GRADCHECK_HPP_
#define MORPHBOOT_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "morphboot/neural.hpp"

namespace testing {

struct GradCheckResult {
  std::vector<double> block_error;  // max relative error per parameter block
  std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|); pairs where both are tiny are
// compared absolutely, since their ratio is dominated by rounding.
inline double relative_error(double a, double n) {
  const double scale = std::max(std::abs(a), std::abs(n));
  if (scale < 1e-7) return std::abs(a - n) < 1e-10 ? 0.0 : 1.0;
  return std::abs(a - n) / scale;
}

// Every element of every block, perturbed by +-h and +-2h. Dropout masks come from a
// fresh generator with the same seed on each evaluation, so the loss is the
// same deterministic function throughout.
inline GradCheckResult gradient_check(morphboot::neural::Model<double> m,
                                      const morphboot::neural::EvalBatch& batch,
                                      std::uint64_t seed, bool dropout, double h = 1e-3) {
  using namespace morphboot::neural;
  auto loss = [&](Params<double>* g) {
    std::mt19937_64 rng(seed);
    return loss_and_grads(m, batch, g, dropout ? &rng : nullptr);
  };
  Params<double> analytic;
  loss(&analytic);
  GradCheckResult r;
  const auto blocks = m.params.blocks();
  const auto grads = analytic.blocks();
  for (std::size_t i = 0; i < Params<double>::kBlocks; ++i) {
    double worst = 0;
    auto& w = *blocks[i];
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double orig = w.data()[k];
      auto at = [&](double x) {
        w.data()[k] = x;
        return loss(nullptr);
      };
      // Fourth-order stencil: truncation O(h^4) and rounding O(eps / h)
      // both stay far below the gradients of a small random model.
      const double numeric =
          (at(orig - 2 * h) - 8 * at(orig - h) + 8 * at(orig + h) - at(orig + 2 * h)) / (12 * h);
      w.data()[k] = orig;
      const double e = relative_error(grads[i]->data()[k], numeric);
      if (std::getenv("GRADCHECK_TRACE") && e > 1e-6) {
        std::fprintf(stderr, "%s[%ld] analytic %.10g numeric %.10g\n", Params<double>::names()[i],
                     static_cast<long>(k), grads[i]->data()[k], numeric);
      }
      worst = std::max(worst, e);
      ++r.checked;
    }
    r.block_error.push_back(worst);
  }
  return r;
}

}  // namespace testing

#endif  // MORPHBOOT_TESTS_GRADCHECK_HPP_
