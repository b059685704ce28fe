#include "bmsprt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmsprt/errors.hpp"
#include "bmsprt/split.hpp"

namespace bmsprt {

namespace {

// x log(x / n) with 0 log 0 = 0
double xlogp(double x, double n) { return x > 0.0 ? x * std::log(x / n) : 0.0; }

double bernoulli_loglik_at_mle(double s, double n) {
    if (n <= 0.0) return 0.0;
    return xlogp(s, n) + xlogp(n - s, n);
}

}  // namespace

double two_sided_normal_p(double z) noexcept { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double z_test(const MetricEstimate& a, const MetricEstimate& b) {
    const double pooled = std::sqrt(a.sigma * a.sigma + b.sigma * b.sigma);
    if (!(pooled > 0.0)) throw DegenerateBlock("z-test with zero pooled variance");
    return two_sided_normal_p((b.theta_hat - a.theta_hat) / pooled);
}

double z_test(std::span<const SessionRecord> group_a,
              std::span<const SessionRecord> group_b,
              const MetricKind& kind) {
    return z_test(estimate(group_a, kind), estimate(group_b, kind));
}

ChasingResult chasing_significance(std::span<const SessionRecord> records,
                                   const std::vector<bool>& assignment,
                                   std::size_t looks,
                                   double alpha,
                                   const MetricKind& kind) {
    if (looks == 0) throw std::invalid_argument("need at least one look");
    const auto [group_a, group_b] = apply_split(records, assignment);
    ChasingResult out;
    std::size_t in_a = 0, in_b = 0, seen = 0;
    for (std::size_t j = 1; j <= looks; ++j) {
        const std::size_t cutoff = j * records.size() / looks;
        for (; seen < cutoff; ++seen) (assignment[seen] ? in_b : in_a) += 1;
        double p = 1.0;
        try {
            p = z_test(std::span(group_a).first(in_a), std::span(group_b).first(in_b), kind);
        } catch (const DegenerateBlock&) {
            // too little data at this look
        }
        out.min_p = std::min(out.min_p, p);
        if (j == looks) out.final_p = p;
    }
    out.ever_rejected = out.min_p <= alpha;
    return out;
}

ChasingResult chasing_significance_trial(std::span<const SessionRecord> records,
                                         std::size_t looks,
                                         double alpha,
                                         const MetricKind& kind,
                                         Rng& rng) {
    return chasing_significance(records, split_assignment(records.size(), rng), looks, alpha, kind);
}

double maxsprt_bernoulli_llr(double successes_a, double n_a, double successes_b, double n_b) {
    if (successes_a < 0.0 || successes_a > n_a || successes_b < 0.0 || successes_b > n_b) {
        throw std::invalid_argument("success counts must lie in [0, n]");
    }
    const double split = bernoulli_loglik_at_mle(successes_a, n_a) + bernoulli_loglik_at_mle(successes_b, n_b);
    const double pooled = bernoulli_loglik_at_mle(successes_a + successes_b, n_a + n_b);
    return std::max(0.0, split - pooled);
}

MaxSprtOutcome run_maxsprt(std::span<const SessionRecord> group_a,
                           std::span<const SessionRecord> group_b,
                           const MaxSprtConfig& cfg,
                           double offset) {
    if (cfg.block_size == 0) throw std::invalid_argument("block size must be positive");
    MaxSprtOutcome out;
    double sa = 0.0, na = 0.0, sb = 0.0, nb = 0.0;
    std::size_t horizon = std::min(group_a.size(), group_b.size()) / cfg.block_size;
    if (cfg.max_samples > 0) horizon = std::min(horizon, cfg.max_samples / cfg.block_size);
    for (std::size_t k = 0; k < horizon; ++k) {
        for (std::size_t i = k * cfg.block_size; i < (k + 1) * cfg.block_size; ++i) {
            sa += group_a[i].successful_queries;
            na += group_a[i].queries;
            sb += group_b[i].successful_queries;
            nb += group_b[i].queries;
        }
        ++out.blocks;
        const double shifted_b = std::clamp(sb + offset * nb, 0.0, nb);
        const double llr = maxsprt_bernoulli_llr(sa, na, shifted_b, nb);
        out.max_llr = std::max(out.max_llr, llr);
        if (llr > cfg.threshold) {
            out.rejected = true;
            break;
        }
    }
    return out;
}

double simulate_null_max_llr(const MaxSprtConfig& cfg, std::uint64_t seed, std::uint64_t trial) {
    if (cfg.block_size == 0) throw std::invalid_argument("block size must be positive");
    const auto block = static_cast<std::uint32_t>(cfg.block_size);
    std::binomial_distribution<std::uint32_t> draw(block, cfg.p0);
    const std::uint64_t trial_seed = derive_seed(seed, trial);
    double sa = 0.0, sb = 0.0, n = 0.0, best = 0.0;
    for (std::size_t k = 0; k < cfg.max_samples / cfg.block_size; ++k) {
        Rng rng = make_rng(trial_seed, k);
        sa += draw(rng);
        sb += draw(rng);
        n += block;
        best = std::max(best, maxsprt_bernoulli_llr(sa, n, sb, n));
    }
    return best;
}

std::vector<double> maxsprt_threshold_grid(std::size_t points) {
    if (points < 2) throw std::invalid_argument("grid needs at least two points");
    const double lo = std::log(2.0), hi = std::log(1e4);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return grid;
}

MaxSprtCalibration calibrate_maxsprt_threshold(const MaxSprtConfig& cfg,
                                               double alpha,
                                               std::size_t trials,
                                               std::uint64_t seed,
                                               const std::vector<double>& grid) {
    if (trials < 200) throw ConfigError("threshold calibration needs at least 200 trials");
    if (!(cfg.p0 > 0.0 && cfg.p0 < 1.0)) throw ConfigError("p0 must lie in (0, 1)");
    MaxSprtCalibration out;
    out.null_max_llr.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) out.null_max_llr.push_back(simulate_null_max_llr(cfg, seed, t));
    for (double g : grid) {
        const auto crossings = std::count_if(out.null_max_llr.begin(), out.null_max_llr.end(),
                                             [g](double m) { return m > g; });
        const double rate = static_cast<double>(crossings) / static_cast<double>(trials);
        if (rate <= alpha) {
            out.threshold = g;
            out.type1 = rate;
            return out;
        }
    }
    throw CalibrationFailed("no threshold on the grid keeps the simulated type-1 rate at or below alpha");
}

double maxsprt_type1(const MaxSprtConfig& cfg, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) return 0.0;
    std::size_t crossings = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        if (simulate_null_max_llr(cfg, seed, t) > cfg.threshold) ++crossings;
    }
    return static_cast<double>(crossings) / static_cast<double>(trials);
}

}  // namespace bmsprt
