#pragma once

#include <span>
#include <vector>

namespace infdecomp {

// Correctly rounded sum of doubles (Shewchuk partials, as in Python's
// math.fsum). Independent of summation order.
double exact_sum(std::span<const double> values);

// Linear-interpolation percentile (index p/100 * (n-1)) of an unsorted sample.
double percentile(std::vector<double> values, double p);

}  // namespace infdecomp
