#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "bmsprt/baselines.hpp"
#include "bmsprt/errors.hpp"
#include "bmsprt/split.hpp"
#include "support.hpp"

using namespace bmsprt;

namespace {

// max over a 10^6-point grid of s log p + (n - s) log(1 - p)
double grid_max_loglik(double s, double n) {
    const int points = 1'000'000;
    double best = -INFINITY;
    for (int i = 1; i < points; ++i) {
        const double p = static_cast<double>(i) / points;
        best = std::max(best, s * std::log(p) + (n - s) * std::log1p(-p));
    }
    return best;
}

std::vector<SessionRecord> revenues(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> d(2.0, 3.0);
    std::vector<SessionRecord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(testing::rev(d(rng)));
    return out;
}

}  // namespace

TEST_SUITE("baselines") {
    TEST_CASE("z-test on identical groups") {
        const auto a = revenues(500, 1);
        CHECK(z_test(a, a, MetricKind::mean_revenue()) == 1.0);
    }

    TEST_CASE("z-test quantile identity") {
        const MetricEstimate a{1.0, 0.3}, b{1.0 + 1.959964 * 0.5, 0.4};
        CHECK(z_test(a, b) == doctest::Approx(0.05).epsilon(1e-6 / 0.05));
        CHECK(std::fabs(z_test(a, b) - 0.05) < 1e-6);

        // the same on records: shifting a group moves its mean, not its standard error
        const auto x = revenues(400, 2);
        const auto kind = MetricKind::mean_revenue();
        const auto ex = estimate(x, kind);
        const double pooled = std::sqrt(2.0) * ex.sigma;
        auto y = x;
        for (auto& r : y) r.revenue += 1.959964 * pooled;
        CHECK(std::fabs(z_test(x, y, kind) - 0.05) < 1e-6);
    }

    TEST_CASE("z-test matches the textbook normal CDF and is symmetric") {
        const auto a = revenues(300, 3);
        const auto b = revenues(300, 4);
        const auto kind = MetricKind::mean_revenue();
        const auto ea = estimate(a, kind), eb = estimate(b, kind);
        const double z = (eb.theta_hat - ea.theta_hat) / std::sqrt(ea.sigma * ea.sigma + eb.sigma * eb.sigma);
        const double textbook = 2.0 * (1.0 - 0.5 * (1.0 + std::erf(std::fabs(z) / std::sqrt(2.0))));
        CHECK(std::fabs(z_test(a, b, kind) - textbook) < 1e-9);
        CHECK(z_test(a, b, kind) == z_test(b, a, kind));
        CHECK_THROWS_AS(z_test(MetricEstimate{1, 0}, MetricEstimate{2, 0}), DegenerateBlock);
    }

    TEST_CASE("chasing significance") {
        const auto recs = testing::correlated(20'000, 5);
        const auto kind = MetricKind::query_success_rate();
        Rng rng(8);
        const auto assign = split_assignment(recs.size(), rng);
        const auto [a, b] = apply_split(recs, assign);

        const ChasingResult one = chasing_significance(recs, assign, 1, 0.05, kind);
        CHECK(one.min_p == z_test(a, b, kind));
        CHECK(one.final_p == one.min_p);

        const ChasingResult many = chasing_significance(recs, assign, 15, 0.05, kind);
        CHECK(many.min_p <= many.final_p);
        CHECK(many.final_p == doctest::Approx(one.final_p).epsilon(1e-12));
        CHECK(many.ever_rejected == (many.min_p <= 0.05));
    }

    TEST_CASE("MaxSPRT LLR on equal rates is zero") {
        CHECK(maxsprt_bernoulli_llr(5, 100, 5, 100) == 0.0);
        CHECK(maxsprt_bernoulli_llr(0, 100, 0, 100) == 0.0);
        CHECK(maxsprt_bernoulli_llr(100, 100, 100, 100) == 0.0);
        CHECK(maxsprt_bernoulli_llr(3, 60, 5, 100) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_THROWS_AS(maxsprt_bernoulli_llr(7, 5, 1, 5), std::invalid_argument);
    }

    TEST_CASE("MaxSPRT LLR matches a grid-search oracle") {
        const double oracle = grid_max_loglik(10, 100) + grid_max_loglik(30, 100) - grid_max_loglik(40, 200);
        CHECK(std::fabs(maxsprt_bernoulli_llr(10, 100, 30, 100) - oracle) < 1e-6);
    }

    TEST_CASE("MaxSPRT LLR is nonnegative") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 2000; ++i) {
            const std::uint32_t na = 1 + rng() % 200, nb = 1 + rng() % 200;
            const double sa = rng() % (na + 1), sb = rng() % (nb + 1);
            REQUIRE(maxsprt_bernoulli_llr(sa, na, sb, nb) >= 0.0);
        }
    }

    TEST_CASE("MaxSPRT threshold calibration") {
        MaxSprtConfig cfg;
        cfg.p0 = 0.05;
        cfg.max_samples = 20'000;
        cfg.block_size = 1000;
        const auto cal = calibrate_maxsprt_threshold(cfg, 0.05, 400, 11);
        CHECK(cal.threshold > 0.0);
        CHECK(cal.type1 <= 0.05);
        cfg.threshold = cal.threshold;
        // out-of-sample recheck with a binomial margin
        CHECK(maxsprt_type1(cfg, 400, 12345) <= 0.05 + 2 * std::sqrt(0.05 * 0.95 / 400));

        // more looks can only add crossings at a fixed threshold
        MaxSprtConfig longer = cfg;
        longer.max_samples = 40'000;
        CHECK(maxsprt_type1(longer, 300, 77) >= maxsprt_type1(cfg, 300, 77));

        const auto grid = maxsprt_threshold_grid();
        CHECK(grid.size() == 64);
        CHECK(grid.front() == doctest::Approx(std::log(2.0)));
        CHECK(grid.back() == doctest::Approx(std::log(1e4)));
        CHECK(calibrate_maxsprt_threshold(cfg, 1.0, 200, 1).threshold == grid.front());
        CHECK_THROWS_AS(calibrate_maxsprt_threshold(cfg, 0.05, 100, 1), ConfigError);
        CHECK_THROWS_AS(calibrate_maxsprt_threshold(cfg, 0.0, 200, 1, {0.1, 0.2}), CalibrationFailed);
    }

    TEST_CASE("MaxSPRT on records") {
        const auto recs = testing::bernoulli(40'000, 0.05, 3);
        Rng rng(4);
        const auto [a, b] = random_split(recs, rng);
        MaxSprtConfig cfg;
        cfg.threshold = 4.0;
        cfg.max_samples = 20'000;
        const MaxSprtOutcome big = run_maxsprt(a, b, cfg, 0.05);
        CHECK(big.rejected);
        CHECK(big.blocks <= 3);
        const MaxSprtOutcome none = run_maxsprt(a, a, cfg, 0.0);
        CHECK_FALSE(none.rejected);
        CHECK(none.max_llr == 0.0);
        CHECK(none.blocks == std::min(a.size(), cfg.max_samples) / cfg.block_size);
    }
}
