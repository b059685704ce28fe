#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bmsprt/metrics.hpp"
#include "bmsprt/rng.hpp"
#include "bmsprt/session.hpp"

namespace bmsprt {

struct SilvermanRule {};

struct FixedBandwidth {
    double h = 0.0;
};

using BandwidthRule = std::variant<SilvermanRule, FixedBandwidth>;

struct BootstrapConfig {
    std::size_t resamples = 1000;  ///< B
    BandwidthRule bandwidth = SilvermanRule{};
    std::uint64_t seed = 0;

    /// Throws ConfigError for B < 100 or a nonpositive fixed bandwidth.
    void validate() const;
};

/// Gaussian kernel density estimate over a fixed set of centers. Immutable
/// once built; evaluation happens in log space so tail points never underflow.
class KdeDensity {
public:
    KdeDensity(std::vector<double> centers, double bandwidth);

    double bandwidth() const noexcept { return h_; }
    /// Centers in ascending order.
    std::span<const double> centers() const noexcept { return centers_; }
    /// 1 / (B h sqrt(2 pi))
    double normalization() const noexcept;

    double operator()(double x) const;
    double log_density(double x) const;
    /// out[i] = log_density(xs[i]); the spans must have equal length.
    void log_density(std::span<const double> xs, std::span<double> out) const;

private:
    std::vector<double> centers_;
    double h_;
    double inv_h_;
    double log_norm_;
};

/// 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to sd when the IQR is zero.
/// Throws AllSamplesEqual when the samples have no spread.
double silverman_bandwidth(std::span<const double> samples);

/// Fits g*(x) = 1/(B h) sum_b phi((x - s_b) / h).
KdeDensity fit_kde(std::span<const double> samples, const BandwidthRule& rule);

inline double kde_eval(const KdeDensity& density, double x) { return density(x); }

/// N draws with replacement, uniform over the records of `block`.
Block resample(const Block& block, Rng& rng);

/// Multinomial resampling counts over an AtomTable: counts[j] is how often
/// atom j appears in a size-`total` resample drawn uniformly with replacement
/// from the original records.
class MultinomialResampler {
public:
    explicit MultinomialResampler(const AtomTable& table);

    void draw(Rng& rng, std::span<std::uint32_t> counts) const;

private:
    std::uint32_t total_;
    bool by_binomials_;
    std::vector<std::uint32_t> order_;       // atoms by descending count
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint32_t> atom_of_;     // record slot -> atom
};

/// Bootstrap replicates (T(x*), sigma(T(x*))) of one block. Built-in metrics
/// are resampled through multinomial counts over distinct records; custom
/// metrics through explicit record resamples.
class ReplicateSampler {
public:
    ReplicateSampler(std::span<const SessionRecord> block, const MetricKind& kind);

    /// Estimate on the block itself. Throws DegenerateBlock if the metric is
    /// undefined; sigma may be zero.
    MetricEstimate original() const;

    /// One replicate. A non-finite theta_hat or a sigma that is not positive
    /// marks a degenerate resample.
    MetricEstimate draw(Rng& rng);

private:
    std::span<const SessionRecord> block_;
    const MetricKind* kind_;
    AtomTable table_;
    std::optional<MultinomialResampler> multinomial_;
    std::vector<std::uint32_t> weights_;
    std::vector<SessionRecord> scratch_;
    bool builtin_;
};

/// Redraw cap for degenerate resamples is this many times B in total.
inline constexpr std::size_t kRedrawFactor = 100;

/// s*_b = (T(x*b) - theta_hat) / sigma(T(x*b)) for b = 1..B.
std::vector<double> bootstrap_studentized_samples(std::span<const SessionRecord> block,
                                                  const MetricKind& kind,
                                                  const BootstrapConfig& cfg,
                                                  Rng& rng);

}  // namespace bmsprt
