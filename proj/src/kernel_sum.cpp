#include "kernel_sum.hpp"

#include <cmath>

namespace bmsprt::detail {

double shifted_gaussian_sum(const double* centers, std::size_t n, double x, double inv_h, double shift) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (x - centers[i]) * inv_h;
        sum += std::exp(shift - 0.5 * z * z);
    }
    return sum;
}

double shifted_exp_sum(const double* values, std::size_t n, double shift) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(values[i] - shift);
    return sum;
}

}  // namespace bmsprt::detail
