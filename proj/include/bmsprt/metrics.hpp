#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bmsprt/session.hpp"

namespace bmsprt {

enum class MetricTag {
    MeanRevenue,       ///< average revenue per session
    QuerySuccessRate,  ///< sum of successful queries over sum of queries
    Custom,            ///< user-supplied plug-in functional
};

enum class StderrMethod {
    Auto,         ///< delta method for ratios, s/sqrt(N) for means, jackknife otherwise
    DeltaMethod,  ///< QuerySuccessRate only
    ClosedForm,   ///< MeanRevenue only
    Jackknife,
};

/// A plug-in statistic T(F_hat) together with the standard-error estimator
/// used to studentize it.
class MetricKind {
public:
    /// Must return a non-finite value (or throw DegenerateBlock) where the
    /// statistic is undefined.
    using Functional = std::function<double(std::span<const SessionRecord>)>;

    static MetricKind mean_revenue();
    static MetricKind query_success_rate();
    static MetricKind custom(std::string name, Functional fn);

    /// Parses "mean_revenue" / "query_success_rate" (and a few aliases).
    static MetricKind from_name(const std::string& name);

    MetricKind with_stderr(StderrMethod method) const;

    MetricTag tag() const noexcept { return tag_; }
    const std::string& name() const noexcept { return name_; }
    StderrMethod stderr_method() const noexcept { return stderr_; }
    /// The estimator `Auto` resolves to for this metric.
    StderrMethod resolved_stderr() const noexcept;
    const Functional& functional() const noexcept { return fn_; }

private:
    MetricKind(MetricTag tag, std::string name, Functional fn)
        : tag_(tag), name_(std::move(name)), fn_(std::move(fn)) {}

    MetricTag tag_;
    std::string name_;
    Functional fn_;
    StderrMethod stderr_ = StderrMethod::Auto;
};

struct MetricEstimate {
    double theta_hat = 0.0;
    double sigma = 0.0;  ///< standard error of theta_hat
};

double compute_metric(std::span<const SessionRecord> records, const MetricKind& kind);

/// Delta-method standard error of the ratio of sums R = sum(s) / sum(q),
/// sqrt((var(s) - 2R cov(s,q) + R^2 var(q)) / (N qbar^2)) with plug-in
/// (divisor N) moments.
double stderr_delta_ratio(std::span<const SessionRecord> records);

/// Leave-one-out jackknife standard error of the metric.
double stderr_jackknife(std::span<const SessionRecord> records, const MetricKind& kind);

/// Standard error by the metric's configured estimator.
double stderr_of(std::span<const SessionRecord> records, const MetricKind& kind);

/// theta_hat and its standard error. sigma may be zero on constant blocks;
/// throws DegenerateBlock when the metric itself is undefined.
MetricEstimate estimate(std::span<const SessionRecord> records, const MetricKind& kind);

/// (theta_hat - theta) / sigma. Throws ZeroSigma when sigma is not positive.
double studentize(const MetricEstimate& estimate, double theta);

/// The distinct records of a block (compared on queries, successes and
/// revenue) with their multiplicities, in a canonical order that does not
/// depend on the order of the input. Built-in metrics only look at these
/// three fields, so a block and its table give identical statistics.
struct AtomTable {
    std::vector<SessionRecord> atoms;
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;

    std::size_t size() const noexcept { return atoms.size(); }
};

AtomTable compress(std::span<const SessionRecord> records);

/// Built-in metric on a multiset given as atoms with per-atom multiplicities.
/// Returns NaN where undefined (zero total weight, zero query denominator).
double weighted_metric(std::span<const SessionRecord> atoms,
                       std::span<const std::uint32_t> weights,
                       MetricTag tag);

/// Built-in standard error on the same representation. Returns NaN where
/// undefined (fewer than two records, degenerate leave-one-out values).
double weighted_stderr(std::span<const SessionRecord> atoms,
                       std::span<const std::uint32_t> weights,
                       const MetricKind& kind);

}  // namespace bmsprt
