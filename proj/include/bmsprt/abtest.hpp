#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bmsprt/bootstrap.hpp"
#include "bmsprt/metrics.hpp"
#include "bmsprt/msprt.hpp"
#include "bmsprt/session.hpp"

namespace bmsprt {

/// The k-th block of the control group (A) and of the variation group (B),
/// both of the configured block size.
struct AbBlockPair {
    std::size_t index = 0;
    std::span<const SessionRecord> control;
    std::span<const SessionRecord> variation;
    double offset = 0.0;  ///< added to the realized difference
};

struct AbSummary {
    BlockSummary summary;  ///< theta_hat includes the offset
    double metric_a = 0.0;
    double metric_b = 0.0;
    double offset = 0.0;
};

/// theta_hat = T(y) - T(x) + offset, sigma = sqrt(sigma_y^2 + sigma_x^2), and
/// the KDE of B paired studentized replicates
///
///   s*_b = (T(y*b) - T(x*b) - (T(y) - T(x))) / sqrt(sigma^2(T(y*b)) + sigma^2(T(x*b)))
///
/// where both groups are resampled independently. Throws DegenerateBlock when
/// either group is degenerate.
AbSummary ab_summary(const AbBlockPair& pair, const MetricKind& kind, const BootstrapConfig& cfg, Rng& rng);

struct AbUpdateRecord {
    UpdateRecord update;
    std::optional<double> metric_a;
    std::optional<double> metric_b;
    double offset = 0.0;
};

struct AbTestOptions {
    double theta0 = 0.0;
    double alpha = 0.05;
    double offset = 0.0;
    BootstrapConfig bootstrap;
    bool stop_on_reject = true;
};

struct AbTestResult {
    Decision decision;
    std::vector<double> p_trajectory;  ///< p-value after every processed pair
    std::vector<AbUpdateRecord> records;
    std::size_t pairs_processed = 0;
    std::size_t skipped_blocks = 0;
    double final_log_L = 0.0;
};

using AbRecordSink = std::function<void(const AbUpdateRecord&)>;

/// Pairs consecutive blocks of two record streams in arrival order. Pairs
/// stop at the shorter stream's last full block.
std::vector<AbBlockPair> pair_blocks(std::span<const SessionRecord> group_a,
                                     std::span<const SessionRecord> group_b,
                                     std::size_t block_size,
                                     double offset = 0.0);

/// Drives the sequential test over block pairs until rejection (when
/// stop_on_reject) or exhaustion. The bootstrap for pair k draws from the
/// substream make_rng(options.bootstrap.seed, k). `state` carries the prior
/// draws and any blocks already consumed.
AbTestResult run_ab_test(std::span<const AbBlockPair> pairs,
                         const MetricKind& kind,
                         MsprtState state,
                         const AbTestOptions& options,
                         const AbRecordSink& sink = {});

/// Convenience overload over two block streams, consumed in lockstep.
AbTestResult run_ab_test(std::span<const Block> stream_a,
                         std::span<const Block> stream_b,
                         const MetricKind& kind,
                         const Prior& prior,
                         const AbTestOptions& options,
                         const AbRecordSink& sink = {});

}  // namespace bmsprt
