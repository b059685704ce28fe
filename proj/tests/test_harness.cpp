#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "bmsprt/errors.hpp"
#include "bmsprt/harness.hpp"
#include "support.hpp"

using namespace bmsprt;

namespace {

// p-value fixed per block size, for exercising the sweep's selection rule.
class FixedP final : public SequentialTest {
public:
    explicit FixedP(std::vector<double> ps) : ps_(std::move(ps)) {}

    TrialOutcome run(std::span<const SessionRecord> a,
                     std::span<const SessionRecord> b,
                     double,
                     std::size_t trial) const override {
        const double p = ps_[trial % ps_.size()];
        return {p, p <= 0.05, a.size() + b.size()};
    }

    std::string name() const override { return "fixed"; }

private:
    std::vector<double> ps_;
};

BootstrapMsprtSettings small_settings(double tau) {
    BootstrapMsprtSettings s;
    s.block_size = 500;
    s.prior.tau = tau;
    s.prior.samples = 1000;
    s.prior.seed = 4;
    s.bootstrap.resamples = 200;
    s.bootstrap.seed = 5;
    return s;
}

bool same(const std::vector<TrialResult>& x, const std::vector<TrialResult>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool p_equal = x[i].final_p == y[i].final_p || (std::isnan(x[i].final_p) && std::isnan(y[i].final_p));
        if (x[i].trial_id != y[i].trial_id || !p_equal || x[i].rejected != y[i].rejected ||
            x[i].samples_consumed != y[i].samples_consumed) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("harness") {
    TEST_CASE("Bernoulli generator rate") {
        const auto recs = testing::bernoulli(100'000, 0.05, 1);
        double s = 0;
        for (const auto& r : recs) {
            REQUIRE(r.queries == 1);
            s += r.successful_queries;
        }
        CHECK(std::fabs(s / 1e5 - 0.05) < 0.003);
    }

    TEST_CASE("zero-inflated revenue generator") {
        SyntheticConfig cfg;
        cfg.n_sessions = 100'000;
        cfg.model = ZeroInflatedRevenue{};
        cfg.seed = 2;
        const auto recs = generate_sessions(cfg);
        std::size_t zeros = 0;
        for (const auto& r : recs) {
            REQUIRE(is_valid(r));
            zeros += r.revenue == 0.0;
        }
        CHECK(std::fabs(zeros / 1e5 - 0.9) < 0.01);
    }

    TEST_CASE("correlated queries are overdispersed") {
        const auto recs = testing::correlated(100'000, 3);
        double sq = 0, ss = 0;
        for (const auto& r : recs) {
            REQUIRE(is_valid(r));
            sq += r.queries;
            ss += r.successful_queries;
        }
        const double p = ss / sq;
        double pearson = 0, binom = 0;
        for (const auto& r : recs) {
            const double e = r.successful_queries - p * r.queries;
            pearson += e * e;
            binom += r.queries * p * (1 - p);
        }
        CHECK(pearson / binom > 1.2);
    }

    TEST_CASE("generator is deterministic and validates") {
        CHECK(testing::correlated(1000, 9) == testing::correlated(1000, 9));
        CHECK(testing::correlated(1000, 9) != testing::correlated(1000, 10));
        SyntheticConfig bad;
        bad.model = BernoulliSessions{1.5};
        CHECK_THROWS_AS(generate_sessions(bad), ConfigError);
        bad.model = BernoulliSessions{0.5};
        bad.n_sessions = 0;
        CHECK_THROWS_AS(generate_sessions(bad), ConfigError);
    }

    TEST_CASE("auto tau") {
        const std::vector<SessionRecord> recs{testing::qs(4, 1), testing::qs(6, 4)};
        CHECK(auto_tau(recs, MetricKind::query_success_rate()) == doctest::Approx(0.015));
        CHECK_THROWS_AS(auto_tau(std::vector{testing::rev(0)}, MetricKind::mean_revenue()), ConfigError);
    }

    TEST_CASE("Q-Q points") {
        const std::vector<double> one{0.5};
        const auto q1 = qq_points(one);
        REQUIRE(q1.size() == 1);
        CHECK(q1[0].uniform_q == 0.5);
        CHECK(q1[0].empirical_q == 0.5);

        std::vector<double> grid;
        for (int i = 0; i < 10; ++i) grid.push_back((9 - i + 0.5) / 10.0);
        for (const auto& pt : qq_points(grid)) CHECK(pt.empirical_q == doctest::Approx(pt.uniform_q));

        const std::vector<double> ones(7, 1.0);
        for (const auto& pt : qq_points(ones)) {
            CHECK(pt.empirical_q == 1.0);
            CHECK(pt.empirical_q > pt.uniform_q);
        }
        CHECK_THROWS_AS(qq_points(std::vector<double>{}), std::invalid_argument);
    }

    TEST_CASE("empirical CDF and aggregates") {
        const std::vector<double> p{0.01, 0.04, 0.05, 0.5, 1.0};
        CHECK(empirical_cdf(p, 0.05) == doctest::Approx(0.6));
        CHECK(empirical_cdf(p, 0.001) == 0.0);
        std::vector<TrialResult> t{{0, 1.0, false, 1000, 0}, {1, 0.01, true, 200, 0}};
        CHECK(rejection_rate(t) == 0.5);
        CHECK(avg_duration(t) == 600.0);
        CHECK_THROWS_AS(avg_duration(std::vector<TrialResult>{}), std::invalid_argument);
    }

    TEST_CASE("durations: exhausted and immediate rejection") {
        const auto recs = testing::bernoulli(20'000, 0.05, 4);
        MaxSprtConfig cfg;
        cfg.threshold = 1e9;
        cfg.max_samples = 20'000;
        const MaxSprtTest never(cfg);
        const auto t = run_aa_trials(recs, never, 5, 1);
        CHECK(avg_duration(t) == 20'000.0);

        cfg.threshold = 0.5;
        const MaxSprtTest eager(cfg);
        const auto r = run_aa_trials(recs, eager, 5, 1, 0.5);
        for (const auto& x : r) CHECK(x.rejected);
        // records of both groups in the first block pair
        CHECK(avg_duration(r) == 2.0 * cfg.block_size);
    }

    TEST_CASE("single trial and trial ordering") {
        const auto recs = testing::correlated(4000, 5);
        const BootstrapMsprtTest test(small_settings(0.01));
        const auto one = run_aa_trials(recs, test, 1, 3);
        REQUIRE(one.size() == 1);
        CHECK(one[0].trial_id == 0);
        CHECK(one[0].samples_consumed <= recs.size());
        CHECK(one[0].rejected == (one[0].final_p <= 0.05));
    }

    TEST_CASE("parallel and sequential trials are identical") {
        const auto recs = testing::correlated(6000, 6);
        const BootstrapMsprtTest test(small_settings(0.01));
        const auto seq = run_aa_trials(recs, test, 12, 8, 0.005, 1);
        const auto par = run_aa_trials(recs, test, 12, 8, 0.005, 4);
        CHECK(same(seq, par));
        for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i].trial_id == i);

        MaxSprtConfig cfg;
        cfg.threshold = 3.0;
        cfg.max_samples = 3000;
        const MaxSprtTest m(cfg);
        CHECK(same(run_aa_trials(recs, m, 20, 2, 0.0, 1), run_aa_trials(recs, m, 20, 2, 0.0, 3)));

        const auto c1 = run_chasing_trials(recs, MetricKind::query_success_rate(), 10, 0.05, 20, 2, 1);
        const auto c3 = run_chasing_trials(recs, MetricKind::query_success_rate(), 10, 0.05, 20, 2, 3);
        for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].min_p == c3[i].min_p);
    }

    TEST_CASE("parallel_for propagates errors") {
        std::atomic<int> ran{0};
        CHECK_THROWS_AS(parallel_for(100, 4,
                                     [&](std::size_t i) {
                                         ++ran;
                                         if (i == 10) throw DataError("boom");
                                     }),
                        DataError);
        std::vector<int> hit(50, 0);
        parallel_for(50, 3, [&](std::size_t i) { hit[i] += 1; });
        for (int h : hit) CHECK(h == 1);
    }

    TEST_CASE("power curve at zero offset is the type-1 estimate") {
        const auto recs = testing::correlated(4000, 7);
        const BootstrapMsprtTest test(small_settings(0.01));
        const std::vector<double> offsets{0.0, 0.05};
        const auto curve = power_curve(recs, offsets, test, 6, 9);
        const auto null = run_aa_trials(recs, test, 6, 9);
        REQUIRE(curve.size() == 2);
        CHECK(curve[0].rejection_rate == rejection_rate(null));
        CHECK(curve[0].avg_duration == avg_duration(null));
        CHECK(curve[1].rejection_rate >= curve[0].rejection_rate);
        CHECK(curve[1].avg_duration <= curve[0].avg_duration);
        CHECK_THROWS_AS(power_curve(recs, std::vector<double>{}, test, 6, 9), ConfigError);
    }

    TEST_CASE("block-size sweep picks the smallest size that controls type-1") {
        const auto recs = testing::bernoulli(2000, 0.3, 8);
        // size 100 is anti-conservative, 200 and 400 control type-1
        const TestFactory factory = [](std::size_t size) -> std::unique_ptr<SequentialTest> {
            if (size == 100) return std::make_unique<FixedP>(std::vector<double>{0.001, 0.5, 0.9, 0.02});
            return std::make_unique<FixedP>(std::vector<double>{0.2, 0.5, 0.9, 1.0});
        };
        const std::vector<std::size_t> sizes{400, 100, 200};
        const std::vector<double> alphas{0.01, 0.05, 0.1};
        const auto sweep = block_size_sweep(recs, sizes, factory, 8, 1, alphas);
        REQUIRE(sweep.reports.size() == 3);
        CHECK_FALSE(sweep.reports[1].controls_type1);
        REQUIRE(sweep.selected.has_value());
        CHECK(*sweep.selected == 200);
        CHECK(sweep.reports[0].qq.size() == 8);
    }
}
