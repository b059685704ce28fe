#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bmsprt/metrics.hpp"
#include "bmsprt/rng.hpp"
#include "bmsprt/session.hpp"

namespace bmsprt {

/// 2 (1 - Phi(|z|))
double two_sided_normal_p(double z) noexcept;

/// Fixed-sample two-sided z-test for a difference in the metric between two
/// groups, using the metric's standard-error estimator on each group.
/// Throws DegenerateBlock when the pooled variance is zero.
double z_test(std::span<const SessionRecord> group_a,
              std::span<const SessionRecord> group_b,
              const MetricKind& kind);

double z_test(const MetricEstimate& a, const MetricEstimate& b);

struct ChasingResult {
    double min_p = 1.0;
    bool ever_rejected = false;
    double final_p = 1.0;  ///< the single fixed-sample test on all the data
};

/// z-test p-values at `looks` evenly spaced time prefixes of an already
/// split dataset. `assignment[i]` says whether record i went to group B.
ChasingResult chasing_significance(std::span<const SessionRecord> records,
                                   const std::vector<bool>& assignment,
                                   std::size_t looks,
                                   double alpha,
                                   const MetricKind& kind);

/// Splits `records` A/A with `rng`, then runs chasing_significance.
ChasingResult chasing_significance_trial(std::span<const SessionRecord> records,
                                         std::size_t looks,
                                         double alpha,
                                         const MetricKind& kind,
                                         Rng& rng);

/// Log of the two-sample Bernoulli likelihood maximized over separate rates,
/// over the likelihood maximized over one pooled rate. Counts may be
/// fractional (offset-shifted); 0 log 0 = 0.
double maxsprt_bernoulli_llr(double successes_a, double n_a, double successes_b, double n_b);

struct MaxSprtConfig {
    double p0 = 0.05;
    double threshold = 0.0;        ///< reject once the LLR exceeds this
    std::size_t max_samples = 0;   ///< horizon per arm
    std::size_t block_size = 1000; ///< monitoring granularity per arm
};

struct MaxSprtOutcome {
    bool rejected = false;
    std::size_t blocks = 0;  ///< block pairs consumed (up to and including the rejecting one)
    double max_llr = 0.0;
};

/// Monitors cumulative success counts per arm block by block; `offset` is
/// added to arm B's realized rate.
MaxSprtOutcome run_maxsprt(std::span<const SessionRecord> group_a,
                           std::span<const SessionRecord> group_b,
                           const MaxSprtConfig& cfg,
                           double offset = 0.0);

/// Maximal LLR over the blocks of one synthetic null run (both arms
/// Bernoulli(p0)). Draws for block k depend only on (seed, trial, k), so
/// shorter horizons see a prefix of longer ones.
double simulate_null_max_llr(const MaxSprtConfig& cfg, std::uint64_t seed, std::uint64_t trial);

/// 64 geometrically spaced thresholds over [log 2, log 1e4].
std::vector<double> maxsprt_threshold_grid(std::size_t points = 64);

struct MaxSprtCalibration {
    double threshold = 0.0;
    double type1 = 0.0;  ///< simulated null crossing rate at the threshold
    std::vector<double> null_max_llr;
};

/// Smallest grid threshold whose simulated type-1 rate is <= alpha.
/// Throws CalibrationFailed when no grid value qualifies.
MaxSprtCalibration calibrate_maxsprt_threshold(const MaxSprtConfig& cfg,
                                               double alpha,
                                               std::size_t trials,
                                               std::uint64_t seed,
                                               const std::vector<double>& grid = maxsprt_threshold_grid());

/// Fraction of simulated null runs whose LLR ever exceeds `threshold`.
double maxsprt_type1(const MaxSprtConfig& cfg, std::size_t trials, std::uint64_t seed);

}  // namespace bmsprt
