#ifndef AVNAV_POLICY_GRADCHECK_HPP_
#define AVNAV_POLICY_GRADCHECK_HPP_

#include <cstdint>

#include "avnav/autodiff/gradcheck.hpp"

namespace avnav::policy {

// Primitives, both four-layer auxiliary heads, the recurrent core, the full
// policy (reversal strength -1, which makes grad_reverse transparent to
// finite differences) and the exact -lambda identity of grad_reverse.
ad::GradCheckReport run_gradcheck_suite(double tolerance = 1e-3, std::uint64_t seed = 7);

}  // namespace avnav::policy

#endif  // AVNAV_POLICY_GRADCHECK_HPP_
