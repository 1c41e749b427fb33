#pragma once

#include "gtclust/types.hpp"

#include <vector>

namespace gtclust {

/// Exact balanced transportation LP: min sum pi_ij * cost_ij subject to
/// row sums = supply, column sums = demand. Solved by the transportation
/// simplex (basis tree, Bland's rule). Returns the minimal cost; the
/// optimal plan is written to *plan when given.
double transport_min_cost(const Vector& supply, const Vector& demand, const Matrix& cost,
                          Matrix* plan = nullptr);

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm with potentials). Returns row -> column.
std::vector<int> hungarian_assignment(const Matrix& cost);

}  // namespace gtclust
