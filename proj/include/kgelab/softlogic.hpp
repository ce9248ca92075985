#pragma once

#include <cmath>

#include "kgelab/scoring.hpp"

namespace kgelab {

// Overflow-safe logistic function.
inline Real sigmoid(Real x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

// Soft truth value of an atom: the score squashed into (0, 1).
inline Real soft_truth_atom(const Model& m, const Triple& t) { return sigmoid(score(m, t)); }

// Product t-norm and its dual co-norm.
inline Real t_and(Real a, Real b) { return a * b; }
inline Real t_or(Real a, Real b) { return a + b - a * b; }
inline Real t_not(Real a) { return 1.0 - a; }

namespace detail {
// Soft truth of body => head, i.e. not(body) or (body and head), which is
// b*h - b + 1 = 1 - b*(1-h). Evaluated as h + (1-b)*(1-h) so the boundaries
// are exact in floating point: b == 1 gives h + 0 = h for every h, and b == 0
// gives h + fl(1-h), whose error against 1 is under half an ulp of 1 and so
// rounds to exactly 1.
inline Real implication(Real body, Real head) {
  return head + (1.0 - body) * (1.0 - head);
}
}  // namespace detail

// Grounding score of a single-body-atom rule (symmetry, inversion).
inline Real ground_score(Real body, Real head) { return detail::implication(body, head); }

// Two-atom body (composition), conjoined with the product t-norm first so both
// uses of the combined body truth round identically.
inline Real ground_score(Real body1, Real body2, Real head) {
  return detail::implication(t_and(body1, body2), head);
}

}  // namespace kgelab
