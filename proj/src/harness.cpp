#include "bmsprt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "bmsprt/errors.hpp"
#include "bmsprt/split.hpp"

namespace bmsprt {

void SyntheticConfig::validate() const {
    if (n_sessions == 0) throw ConfigError("n_sessions must be positive");
    std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, CorrelatedQueries>) {
                if (!(m.mean_queries >= 1.0)) throw ConfigError("mean_queries must be at least 1");
                if (!(m.beta_a > 0.0 && m.beta_b > 0.0)) throw ConfigError("beta parameters must be positive");
            } else if constexpr (std::is_same_v<M, ZeroInflatedRevenue>) {
                if (!(m.p_zero > 0.0 && m.p_zero < 1.0)) throw ConfigError("p_zero must lie in (0, 1)");
                if (!(m.log_sd > 0.0) || !std::isfinite(m.log_mean)) throw ConfigError("bad log-normal parameters");
            } else {
                if (!(m.p > 0.0 && m.p < 1.0)) throw ConfigError("Bernoulli p must lie in (0, 1)");
            }
        },
        model);
}

std::string model_name(const SessionModel& model) {
    switch (model.index()) {
        case 0:
            return "correlated";
        case 1:
            return "revenue";
        default:
            return "bernoulli";
    }
}

std::vector<SessionRecord> generate_sessions(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<SessionRecord> out(cfg.n_sessions);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].timestamp = kSyntheticEpochMs + static_cast<std::int64_t>(i) * 500;

    if (const auto* m = std::get_if<CorrelatedQueries>(&cfg.model)) {
        std::gamma_distribution<double> ga(m->beta_a, 1.0), gb(m->beta_b, 1.0);
        std::geometric_distribution<std::uint32_t> extra(1.0 / m->mean_queries);
        for (auto& r : out) {
            const double x = ga(rng), y = gb(rng);
            const double p = x / (x + y);
            r.queries = 1 + extra(rng);
            r.successful_queries = std::binomial_distribution<std::uint32_t>(r.queries, p)(rng);
        }
    } else if (const auto* m = std::get_if<ZeroInflatedRevenue>(&cfg.model)) {
        std::bernoulli_distribution zero(m->p_zero);
        std::lognormal_distribution<double> amount(m->log_mean, m->log_sd);
        for (auto& r : out) r.revenue = zero(rng) ? 0.0 : amount(rng);
    } else {
        std::bernoulli_distribution success(std::get<BernoulliSessions>(cfg.model).p);
        for (auto& r : out) {
            r.queries = 1;
            r.successful_queries = success(rng) ? 1 : 0;
        }
    }
    return out;
}

BootstrapMsprtTest::BootstrapMsprtTest(BootstrapMsprtSettings settings) : settings_(std::move(settings)) {
    if (settings_.block_size < 2) throw ConfigError("block size must be at least 2");
    if (!(settings_.alpha > 0.0 && settings_.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    settings_.bootstrap.validate();
    prior_samples_ = settings_.prior.draw();
}

AbTestResult BootstrapMsprtTest::run_detailed(std::span<const SessionRecord> group_a,
                                              std::span<const SessionRecord> group_b,
                                              double offset,
                                              std::size_t trial_id,
                                              bool stop_on_reject) const {
    AbTestOptions opts;
    opts.alpha = settings_.alpha;
    opts.offset = offset;
    opts.bootstrap = settings_.bootstrap;
    opts.bootstrap.seed = derive_seed(settings_.bootstrap.seed, trial_id);
    opts.stop_on_reject = stop_on_reject;
    const auto pairs = pair_blocks(group_a, group_b, settings_.block_size, offset);
    return run_ab_test(pairs, settings_.metric, MsprtState(0.0, prior_samples_), opts);
}

TrialOutcome BootstrapMsprtTest::run(std::span<const SessionRecord> group_a,
                                     std::span<const SessionRecord> group_b,
                                     double offset,
                                     std::size_t trial_id) const {
    const AbTestResult r = run_detailed(group_a, group_b, offset, trial_id);
    TrialOutcome out;
    out.final_p = r.decision.p_value;
    out.rejected = r.decision.rejected();
    out.samples_consumed = out.rejected ? 2 * settings_.block_size * (r.decision.at_block + 1)
                                        : group_a.size() + group_b.size();
    return out;
}

TrialOutcome MaxSprtTest::run(std::span<const SessionRecord> group_a,
                              std::span<const SessionRecord> group_b,
                              double offset,
                              std::size_t) const {
    const MaxSprtOutcome r = run_maxsprt(group_a, group_b, cfg_, offset);
    TrialOutcome out;
    out.final_p = std::numeric_limits<double>::quiet_NaN();
    out.rejected = r.rejected;
    out.samples_consumed = r.rejected ? 2 * cfg_.block_size * r.blocks : group_a.size() + group_b.size();
    return out;
}

double auto_tau(std::span<const SessionRecord> reference, const MetricKind& kind, double fraction) {
    const double ref = std::fabs(compute_metric(reference, kind));
    if (!(ref > 0.0)) throw ConfigError("reference metric value is zero; set tau explicitly");
    return fraction * ref;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    workers.clear();
    if (error) std::rethrow_exception(error);
}

std::vector<TrialResult> run_aa_trials(std::span<const SessionRecord> records,
                                       const SequentialTest& test,
                                       std::size_t n_trials,
                                       std::uint64_t split_seed,
                                       double offset,
                                       std::size_t threads) {
    if (n_trials == 0) throw ConfigError("need at least one trial");
    if (records.size() < 2) throw DataError("A/A trials need at least two records");
    std::vector<TrialResult> results(n_trials);
    parallel_for(n_trials, threads, [&](std::size_t t) {
        Rng rng = make_rng(split_seed, t);
        const auto [a, b] = random_split(records, rng);
        const TrialOutcome o = test.run(a, b, offset, t);
        results[t] = TrialResult{t, o.final_p, o.rejected, o.samples_consumed, offset};
    });
    return results;
}

std::vector<ChasingResult> run_chasing_trials(std::span<const SessionRecord> records,
                                              const MetricKind& kind,
                                              std::size_t looks,
                                              double alpha,
                                              std::size_t n_trials,
                                              std::uint64_t split_seed,
                                              std::size_t threads) {
    std::vector<ChasingResult> results(n_trials);
    parallel_for(n_trials, threads, [&](std::size_t t) {
        Rng rng = make_rng(split_seed, t);
        results[t] = chasing_significance_trial(records, looks, alpha, kind, rng);
    });
    return results;
}

std::vector<QqPoint> qq_points(std::span<const double> p_values) {
    if (p_values.empty()) throw std::invalid_argument("Q-Q points need at least one p-value");
    std::vector<double> sorted(p_values.begin(), p_values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<QqPoint> out(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        out[i] = {(static_cast<double>(i) + 0.5) / n, sorted[i]};
    }
    return out;
}

double empirical_cdf(std::span<const double> p_values, double alpha) {
    if (p_values.empty()) return 0.0;
    const auto hits = std::count_if(p_values.begin(), p_values.end(), [alpha](double p) { return p <= alpha; });
    return static_cast<double>(hits) / static_cast<double>(p_values.size());
}

std::vector<double> final_p_values(std::span<const TrialResult> results) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.final_p);
    return out;
}

double rejection_rate(std::span<const TrialResult> results) {
    if (results.empty()) return 0.0;
    const auto hits = std::count_if(results.begin(), results.end(), [](const TrialResult& r) { return r.rejected; });
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double avg_duration(std::span<const TrialResult> results) {
    if (results.empty()) throw std::invalid_argument("average duration of no trials");
    double sum = 0.0;
    for (const auto& r : results) sum += static_cast<double>(r.samples_consumed);
    return sum / static_cast<double>(results.size());
}

std::vector<PowerPoint> power_curve(std::span<const SessionRecord> records,
                                    std::span<const double> offsets,
                                    const SequentialTest& test,
                                    std::size_t n_trials,
                                    std::uint64_t split_seed,
                                    std::size_t threads) {
    if (offsets.empty()) throw ConfigError("power curve needs at least one offset");
    std::vector<PowerPoint> out;
    for (double offset : offsets) {
        const auto trials = run_aa_trials(records, test, n_trials, split_seed, offset, threads);
        out.push_back({offset, rejection_rate(trials), n_trials, avg_duration(trials)});
    }
    return out;
}

BlockSizeSweep block_size_sweep(std::span<const SessionRecord> records,
                                std::span<const std::size_t> block_sizes,
                                const TestFactory& make_test,
                                std::size_t n_trials,
                                std::uint64_t split_seed,
                                std::span<const double> alphas,
                                std::size_t threads) {
    BlockSizeSweep sweep;
    for (std::size_t size : block_sizes) {
        const auto test = make_test(size);
        BlockSizeReport report;
        report.block_size = size;
        report.trials = run_aa_trials(records, *test, n_trials, split_seed, 0.0, threads);
        const auto p = final_p_values(report.trials);
        report.qq = qq_points(p);
        report.controls_type1 = true;
        for (double a : alphas) {
            const double c = empirical_cdf(p, a);
            report.cdf.emplace_back(a, c);
            if (c > a) report.controls_type1 = false;
        }
        sweep.reports.push_back(std::move(report));
    }
    for (const auto& r : sweep.reports) {
        if (r.controls_type1 && (!sweep.selected || r.block_size < *sweep.selected)) sweep.selected = r.block_size;
    }
    return sweep;
}

}  // namespace bmsprt
