#include "bmsprt/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bmsprt/errors.hpp"
#include "kernel_sum.hpp"

namespace bmsprt {

namespace {

// Uniform integers in [0, n) from the two 32-bit halves of each engine output
// (multiply-shift with rejection, so the draw is exactly uniform).
class IndexDraw {
public:
    IndexDraw(Rng& rng, std::uint32_t n) : rng_(rng), n_(n), threshold_((0u - n) % n) {}

    std::uint32_t operator()() {
        for (;;) {
            if (!have_half_) {
                bits_ = rng_();
                have_half_ = true;
            } else {
                bits_ >>= 32;
                have_half_ = false;
            }
            const std::uint64_t m = (bits_ & 0xffffffffULL) * n_;
            if (static_cast<std::uint32_t>(m) >= threshold_) return static_cast<std::uint32_t>(m >> 32);
        }
    }

private:
    Rng& rng_;
    std::uint64_t n_;
    std::uint32_t threshold_;
    std::uint64_t bits_ = 0;
    bool have_half_ = false;
};

double quantile_type7(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void BootstrapConfig::validate() const {
    if (resamples < 100) {
        throw ConfigError("bootstrap resample count B must be at least 100, got " + std::to_string(resamples));
    }
    if (const auto* fixed = std::get_if<FixedBandwidth>(&bandwidth)) {
        if (!(fixed->h > 0.0) || !std::isfinite(fixed->h)) throw ConfigError("fixed KDE bandwidth must be positive");
    }
}

KdeDensity::KdeDensity(std::vector<double> centers, double bandwidth)
    : centers_(std::move(centers)), h_(bandwidth) {
    if (centers_.empty()) throw std::invalid_argument("KDE needs at least one center");
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw std::invalid_argument("KDE bandwidth must be positive");
    for (double c : centers_) {
        if (!std::isfinite(c)) throw std::invalid_argument("KDE centers must be finite");
    }
    std::sort(centers_.begin(), centers_.end());
    inv_h_ = 1.0 / h_;
    log_norm_ = -std::log(static_cast<double>(centers_.size()) * h_) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double KdeDensity::normalization() const noexcept { return std::exp(log_norm_); }

double KdeDensity::operator()(double x) const { return std::exp(log_density(x)); }

// Shifting every exponent by that of the nearest center keeps the largest
// term at exactly one, so the sum neither underflows nor loses the tail.
double KdeDensity::log_density(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("KDE evaluated at a non-finite point");
    const auto it = std::lower_bound(centers_.begin(), centers_.end(), x);
    double nearest = std::numeric_limits<double>::infinity();
    if (it != centers_.end()) nearest = *it - x;
    if (it != centers_.begin()) nearest = std::min(nearest, x - *(it - 1));
    const double zmin = nearest * inv_h_;
    const double shift = 0.5 * zmin * zmin;
    const double sum = detail::shifted_gaussian_sum(centers_.data(), centers_.size(), x, inv_h_, shift);
    return log_norm_ - shift + std::log(sum);
}

void KdeDensity::log_density(std::span<const double> xs, std::span<double> out) const {
    if (xs.size() != out.size()) throw std::invalid_argument("log_density: size mismatch");
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = log_density(xs[i]);
}

double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw AllSamplesEqual("Silverman bandwidth needs at least two samples");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw AllSamplesEqual("bootstrap samples have zero spread");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeDensity fit_kde(std::span<const double> samples, const BandwidthRule& rule) {
    if (samples.empty()) throw AllSamplesEqual("no samples to fit");
    const double h = std::holds_alternative<FixedBandwidth>(rule) ? std::get<FixedBandwidth>(rule).h
                                                                  : silverman_bandwidth(samples);
    return KdeDensity({samples.begin(), samples.end()}, h);
}

Block resample(const Block& block, Rng& rng) {
    Block out{block.index, {}};
    if (block.records.empty()) return out;
    out.records.reserve(block.size());
    IndexDraw draw(rng, static_cast<std::uint32_t>(block.size()));
    for (std::size_t i = 0; i < block.size(); ++i) out.records.push_back(block.records[draw()]);
    return out;
}

MultinomialResampler::MultinomialResampler(const AtomTable& table)
    : total_(static_cast<std::uint32_t>(table.total)), counts_(table.counts) {
    // Conditional binomials cost one draw per atom, index draws one per
    // record; each binomial is worth roughly a hundred index draws.
    by_binomials_ = table.size() * 100 <= table.total;
    if (by_binomials_) {
        order_.resize(table.size());
        std::iota(order_.begin(), order_.end(), 0u);
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return counts_[a] > counts_[b]; });
    } else {
        atom_of_.reserve(table.total);
        for (std::uint32_t j = 0; j < table.size(); ++j) atom_of_.insert(atom_of_.end(), counts_[j], j);
    }
}

void MultinomialResampler::draw(Rng& rng, std::span<std::uint32_t> counts) const {
    std::fill(counts.begin(), counts.end(), 0u);
    if (total_ == 0) return;
    if (!by_binomials_) {
        IndexDraw index(rng, total_);
        for (std::uint32_t i = 0; i < total_; ++i) ++counts[atom_of_[index()]];
        return;
    }
    std::binomial_distribution<std::uint32_t> binom;
    using Param = std::binomial_distribution<std::uint32_t>::param_type;
    std::uint32_t left = total_;
    std::uint32_t mass = total_;
    for (std::size_t k = 0; k < order_.size() && left > 0; ++k) {
        const std::uint32_t j = order_[k];
        if (counts_[j] == mass) {
            counts[j] = left;
            break;
        }
        const std::uint32_t x = binom(rng, Param(left, static_cast<double>(counts_[j]) / mass));
        counts[j] = x;
        left -= x;
        mass -= counts_[j];
    }
}

ReplicateSampler::ReplicateSampler(std::span<const SessionRecord> block, const MetricKind& kind)
    : block_(block), kind_(&kind), builtin_(kind.tag() != MetricTag::Custom) {
    if (block.empty()) throw DegenerateBlock("cannot resample an empty block");
    if (builtin_) {
        table_ = compress(block);
        weights_.resize(table_.size());
        multinomial_.emplace(table_);
    } else {
        scratch_.resize(block.size());
    }
}

MetricEstimate ReplicateSampler::original() const {
    if (!builtin_) return estimate(block_, *kind_);
    const double theta = weighted_metric(table_.atoms, table_.counts, kind_->tag());
    const double sigma = weighted_stderr(table_.atoms, table_.counts, *kind_);
    if (!std::isfinite(theta) || !std::isfinite(sigma)) {
        throw DegenerateBlock(kind_->name() + " or its standard error is undefined on this block");
    }
    return {theta, sigma};
}

MetricEstimate ReplicateSampler::draw(Rng& rng) {
    if (builtin_) {
        multinomial_->draw(rng, weights_);
        return {weighted_metric(table_.atoms, weights_, kind_->tag()),
                weighted_stderr(table_.atoms, weights_, *kind_)};
    }
    IndexDraw index(rng, static_cast<std::uint32_t>(block_.size()));
    for (auto& slot : scratch_) slot = block_[index()];
    try {
        return estimate(scratch_, *kind_);
    } catch (const DegenerateBlock&) {
        return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
}

std::vector<double> bootstrap_studentized_samples(std::span<const SessionRecord> block,
                                                  const MetricKind& kind,
                                                  const BootstrapConfig& cfg,
                                                  Rng& rng) {
    cfg.validate();
    ReplicateSampler sampler(block, kind);
    const MetricEstimate orig = sampler.original();
    if (!(orig.sigma > 0.0)) throw DegenerateBlock("block has zero standard error");

    std::vector<double> out;
    out.reserve(cfg.resamples);
    const std::size_t cap = kRedrawFactor * cfg.resamples;
    for (std::size_t attempts = 0; out.size() < cfg.resamples; ++attempts) {
        if (attempts >= cap) throw DegenerateBlock("too many degenerate resamples");
        const MetricEstimate rep = sampler.draw(rng);
        if (!std::isfinite(rep.theta_hat) || !(rep.sigma > 0.0)) continue;
        out.push_back((rep.theta_hat - orig.theta_hat) / rep.sigma);
    }
    return out;
}

}  // namespace bmsprt
