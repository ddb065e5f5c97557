#ifndef AVNAV_AUTODIFF_GRADCHECK_HPP_
#define AVNAV_AUTODIFF_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "avnav/autodiff/tape.hpp"

namespace avnav::ad {

// Builds a scalar loss from the leaves captured by the closure.
using LossBuilder = std::function<Tensor(Tape&)>;

struct GradCheckOptions {
  double step = 5e-3;              // central-difference half width
  std::size_t max_elements = 64;   // per leaf; larger leaves are sampled
  std::uint64_t seed = 7;
};

struct GradientError {
  // ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||) over the
  // compared elements (0 when both are exactly zero).
  double relative = 0.0;
  std::size_t compared = 0;
  // Elements whose +step and -step evaluations took different relu, clamp or
  // minimum branches; a central difference across a kink is meaningless.
  std::size_t skipped = 0;
};

GradientError gradient_error(const LossBuilder& loss, std::span<const Tensor> leaves,
                             const GradCheckOptions& options);

struct GradCheckEntry {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
  // At least three quarters of the sampled elements must be comparable.
  bool passed() const {
    return error <= tolerance && compared > 0 && compared >= 3 * skipped;
  }
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed() const;
  double max_error() const;
  // One line per entry: "<name> max_rel_err=<e> PASS|FAIL".
  void print(std::ostream& os) const;
};

// Every differentiable primitive on random inputs kept away from kinks.
// grad_reverse is checked separately, since its backward deliberately
// disagrees with finite differences.
void check_primitives(GradCheckReport& report, double tolerance,
                      const GradCheckOptions& options = {});

// |grad through grad_reverse(x, lambda) + lambda * grad through identity|,
// maximised over elements; exactly zero for a correct implementation.
double grad_reverse_identity_error(float lambda, std::uint64_t seed);

}  // namespace avnav::ad

#endif  // AVNAV_AUTODIFF_GRADCHECK_HPP_
