#pragma once

#include <cstddef>

namespace bmsprt::detail {

/// sum_i exp(shift - 0.5 ((x - centers[i]) * inv_h)^2)
double shifted_gaussian_sum(const double* centers, std::size_t n, double x, double inv_h, double shift);

/// sum_i exp(values[i] - shift)
double shifted_exp_sum(const double* values, std::size_t n, double shift);

}  // namespace bmsprt::detail
