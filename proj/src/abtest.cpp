#include "bmsprt/abtest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmsprt/errors.hpp"

namespace bmsprt {

AbSummary ab_summary(const AbBlockPair& pair, const MetricKind& kind, const BootstrapConfig& cfg, Rng& rng) {
    cfg.validate();
    if (pair.control.size() != pair.variation.size()) {
        throw std::invalid_argument("control and variation blocks must have the same size");
    }
    ReplicateSampler control(pair.control, kind);
    ReplicateSampler variation(pair.variation, kind);
    const MetricEstimate x = control.original();
    const MetricEstimate y = variation.original();
    if (!(x.sigma > 0.0) || !(y.sigma > 0.0)) throw DegenerateBlock("a group block has zero standard error");

    const double diff = y.theta_hat - x.theta_hat;
    std::vector<double> studentized;
    studentized.reserve(cfg.resamples);
    const std::size_t cap = kRedrawFactor * cfg.resamples;
    for (std::size_t attempts = 0; studentized.size() < cfg.resamples; ++attempts) {
        if (attempts >= cap) throw DegenerateBlock("too many degenerate paired resamples");
        const MetricEstimate xs = control.draw(rng);
        const MetricEstimate ys = variation.draw(rng);
        if (!std::isfinite(xs.theta_hat) || !std::isfinite(ys.theta_hat)) continue;
        const double se = std::sqrt(xs.sigma * xs.sigma + ys.sigma * ys.sigma);
        if (!(se > 0.0)) continue;
        studentized.push_back((ys.theta_hat - xs.theta_hat - diff) / se);
    }

    return AbSummary{
        BlockSummary{pair.index, diff + pair.offset, std::sqrt(x.sigma * x.sigma + y.sigma * y.sigma),
                     fit_kde(studentized, cfg.bandwidth)},
        x.theta_hat, y.theta_hat, pair.offset};
}

std::vector<AbBlockPair> pair_blocks(std::span<const SessionRecord> group_a,
                                     std::span<const SessionRecord> group_b,
                                     std::size_t block_size,
                                     double offset) {
    if (block_size == 0) throw std::invalid_argument("block size must be positive");
    const std::size_t n = std::min(group_a.size(), group_b.size()) / block_size;
    std::vector<AbBlockPair> pairs;
    pairs.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        pairs.push_back({k, group_a.subspan(k * block_size, block_size), group_b.subspan(k * block_size, block_size),
                         offset});
    }
    return pairs;
}

AbTestResult run_ab_test(std::span<const AbBlockPair> pairs,
                         const MetricKind& kind,
                         MsprtState state,
                         const AbTestOptions& options,
                         const AbRecordSink& sink) {
    options.bootstrap.validate();
    AbTestResult result;
    result.decision = state.decide(options.alpha);
    for (const AbBlockPair& pair : pairs) {
        if (options.stop_on_reject && result.decision.rejected()) break;
        AbUpdateRecord rec;
        rec.offset = pair.offset;
        rec.update.block_index = pair.index;
        Rng rng = make_rng(options.bootstrap.seed, pair.index);
        try {
            AbSummary s = ab_summary(pair, kind, options.bootstrap, rng);
            state.update(s.summary);
            rec.update.theta_hat = s.summary.theta_hat;
            rec.update.sigma = s.summary.sigma;
            rec.metric_a = s.metric_a;
            rec.metric_b = s.metric_b;
        } catch (const DegenerateBlock&) {
            state.skip(pair.index);
        } catch (const AllSamplesEqual&) {
            state.skip(pair.index);
        }
        result.decision = state.decide(options.alpha);
        rec.update.log_L = state.log_likelihood_ratio();
        rec.update.p_value = state.p_value();
        rec.update.decision = result.decision.tag;
        result.p_trajectory.push_back(rec.update.p_value);
        ++result.pairs_processed;
        if (sink) sink(rec);
        result.records.push_back(std::move(rec));
    }
    result.skipped_blocks = state.skipped_blocks();
    result.final_log_L = state.log_likelihood_ratio();
    return result;
}

AbTestResult run_ab_test(std::span<const Block> stream_a,
                         std::span<const Block> stream_b,
                         const MetricKind& kind,
                         const Prior& prior,
                         const AbTestOptions& options,
                         const AbRecordSink& sink) {
    std::vector<AbBlockPair> pairs;
    const std::size_t n = std::min(stream_a.size(), stream_b.size());
    for (std::size_t k = 0; k < n; ++k) {
        pairs.push_back({k, stream_a[k].view(), stream_b[k].view(), options.offset});
    }
    return run_ab_test(pairs, kind, MsprtState::init(options.theta0, prior), options, sink);
}

}  // namespace bmsprt
