#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bmsprt/abtest.hpp"
#include "bmsprt/baselines.hpp"
#include "bmsprt/bootstrap.hpp"
#include "bmsprt/metrics.hpp"
#include "bmsprt/msprt.hpp"
#include "bmsprt/session.hpp"

namespace bmsprt {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Per-session success probability ~ Beta(a, b), query count 1 + Geometric
/// with the given mean, successes ~ Binomial(queries, p). Queries inside a
/// session are therefore correlated.
struct CorrelatedQueries {
    double mean_queries = 3.0;
    double beta_a = 2.0;
    double beta_b = 8.0;
};

/// Revenue 0 with probability p_zero, otherwise LogNormal(log_mean, log_sd).
struct ZeroInflatedRevenue {
    double p_zero = 0.9;
    double log_mean = 3.0;
    double log_sd = 1.0;
};

/// One query per session that succeeds with probability p.
struct BernoulliSessions {
    double p = 0.05;
};

using SessionModel = std::variant<CorrelatedQueries, ZeroInflatedRevenue, BernoulliSessions>;

struct SyntheticConfig {
    std::size_t n_sessions = 200'000;
    SessionModel model = CorrelatedQueries{};
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr std::int64_t kSyntheticEpochMs = 1'600'000'000'000;

std::vector<SessionRecord> generate_sessions(const SyntheticConfig& cfg);

std::string model_name(const SessionModel& model);

// ---------------------------------------------------------------------------
// Tests under evaluation
// ---------------------------------------------------------------------------

struct TrialOutcome {
    double final_p = 1.0;  ///< NaN for tests without a p-value
    bool rejected = false;
    /// Records of both groups up to and including the rejecting block pair,
    /// or every record of the split when the test never rejects.
    std::size_t samples_consumed = 0;
};

struct TrialResult {
    std::size_t trial_id = 0;
    double final_p = 1.0;
    bool rejected = false;
    std::size_t samples_consumed = 0;
    double offset = 0.0;
};

/// A sequential test that can be run on one A/B split.
class SequentialTest {
public:
    virtual ~SequentialTest() = default;

    virtual TrialOutcome run(std::span<const SessionRecord> group_a,
                             std::span<const SessionRecord> group_b,
                             double offset,
                             std::size_t trial_id) const = 0;

    virtual std::string name() const = 0;
};

struct BootstrapMsprtSettings {
    MetricKind metric = MetricKind::query_success_rate();
    std::size_t block_size = 1000;
    double alpha = 0.05;
    Prior prior;
    BootstrapConfig bootstrap;
};

/// The bootstrap mixture SPRT with theta0 = 0. Prior draws are made once and
/// shared by all trials; the bootstrap seed of trial t is
/// derive_seed(bootstrap.seed, t).
class BootstrapMsprtTest final : public SequentialTest {
public:
    explicit BootstrapMsprtTest(BootstrapMsprtSettings settings);

    TrialOutcome run(std::span<const SessionRecord> group_a,
                     std::span<const SessionRecord> group_b,
                     double offset,
                     std::size_t trial_id) const override;

    /// Full trajectory of one trial, for callers that want more than the outcome.
    AbTestResult run_detailed(std::span<const SessionRecord> group_a,
                              std::span<const SessionRecord> group_b,
                              double offset,
                              std::size_t trial_id,
                              bool stop_on_reject = true) const;

    std::string name() const override { return "bootstrap_msprt"; }
    const BootstrapMsprtSettings& settings() const noexcept { return settings_; }

private:
    BootstrapMsprtSettings settings_;
    std::vector<double> prior_samples_;
};

/// Two-sample Bernoulli MaxSPRT on (successful_queries, queries) counts.
class MaxSprtTest final : public SequentialTest {
public:
    explicit MaxSprtTest(MaxSprtConfig cfg) : cfg_(cfg) {}

    TrialOutcome run(std::span<const SessionRecord> group_a,
                     std::span<const SessionRecord> group_b,
                     double offset,
                     std::size_t trial_id) const override;

    std::string name() const override { return "maxsprt"; }
    const MaxSprtConfig& config() const noexcept { return cfg_; }

private:
    MaxSprtConfig cfg_;
};

/// 3% (by default) of the metric on the given reference data.
double auto_tau(std::span<const SessionRecord> reference, const MetricKind& kind, double fraction = 0.03);

// ---------------------------------------------------------------------------
// Post A/A methodology
// ---------------------------------------------------------------------------

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Trial t splits `records` with make_rng(split_seed, t) and runs `test` on
/// the split with the given offset. Results are ordered by trial id and do
/// not depend on `threads`.
std::vector<TrialResult> run_aa_trials(std::span<const SessionRecord> records,
                                       const SequentialTest& test,
                                       std::size_t n_trials,
                                       std::uint64_t split_seed,
                                       double offset = 0.0,
                                       std::size_t threads = 1);

/// Chasing-significance z-test trials on the same splits as run_aa_trials.
std::vector<ChasingResult> run_chasing_trials(std::span<const SessionRecord> records,
                                              const MetricKind& kind,
                                              std::size_t looks,
                                              double alpha,
                                              std::size_t n_trials,
                                              std::uint64_t split_seed,
                                              std::size_t threads = 1);

struct QqPoint {
    double uniform_q = 0.0;
    double empirical_q = 0.0;
};

/// Sorted p-values against plotting positions (i - 0.5) / n.
std::vector<QqPoint> qq_points(std::span<const double> p_values);

/// Fraction of p-values <= alpha.
double empirical_cdf(std::span<const double> p_values, double alpha);

std::vector<double> final_p_values(std::span<const TrialResult> results);
double rejection_rate(std::span<const TrialResult> results);
double avg_duration(std::span<const TrialResult> results);

struct PowerPoint {
    double offset = 0.0;
    double rejection_rate = 0.0;
    std::size_t n_trials = 0;
    double avg_duration = 0.0;
};

/// Rejection rate and average duration per offset, reusing the same splits
/// for every offset.
std::vector<PowerPoint> power_curve(std::span<const SessionRecord> records,
                                    std::span<const double> offsets,
                                    const SequentialTest& test,
                                    std::size_t n_trials,
                                    std::uint64_t split_seed,
                                    std::size_t threads = 1);

struct BlockSizeReport {
    std::size_t block_size = 0;
    std::vector<TrialResult> trials;
    std::vector<QqPoint> qq;
    std::vector<std::pair<double, double>> cdf;  ///< (alpha, CDF(alpha))
    bool controls_type1 = false;                 ///< CDF(alpha) <= alpha at every alpha
};

struct BlockSizeSweep {
    std::vector<BlockSizeReport> reports;
    std::optional<std::size_t> selected;  ///< smallest block size that controls type-1
};

using TestFactory = std::function<std::unique_ptr<SequentialTest>(std::size_t block_size)>;

/// Post A/A trials at each block size; flags the smallest size whose
/// empirical p-value CDF stays at or below alpha at every tested alpha.
BlockSizeSweep block_size_sweep(std::span<const SessionRecord> records,
                                std::span<const std::size_t> block_sizes,
                                const TestFactory& make_test,
                                std::size_t n_trials,
                                std::uint64_t split_seed,
                                std::span<const double> alphas,
                                std::size_t threads = 1);

}  // namespace bmsprt
