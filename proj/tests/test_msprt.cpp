#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "bmsprt/errors.hpp"
#include "bmsprt/msprt.hpp"

using namespace bmsprt;

namespace {

BlockSummary summary(std::size_t k, double theta_hat, double sigma, KdeDensity g) {
    return BlockSummary{k, theta_hat, sigma, std::move(g)};
}

// One prior sample at `at` and a single standard-normal kernel: after one
// block with theta_hat = at and sigma = 1, log L = at^2 / 2.
MsprtState state_with_log_l(double log_l) {
    const double a = std::sqrt(2.0 * log_l);
    MsprtState s(0.0, {a});
    s.update(summary(0, a, 1.0, KdeDensity({0.0}, 1.0)));
    return s;
}

double logsumexp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

TEST_SUITE("msprt") {
    TEST_CASE("prior validation and draws") {
        Prior p;
        p.tau = 0.0;
        CHECK_THROWS_AS(p.validate(), ConfigError);
        p.tau = 0.2;
        p.samples = 999;
        CHECK_THROWS_AS(p.validate(), ConfigError);
        p.samples = 10'000;
        p.seed = 7;
        const auto a = p.draw();
        CHECK(a == p.draw());
        REQUIRE(a.size() == 10'000);
        const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 1e4;
        CHECK(std::fabs(mean) <= 4 * p.tau / std::sqrt(1e4));
    }

    TEST_CASE("fresh state") {
        Prior p;
        p.tau = 0.1;
        const MsprtState s = MsprtState::init(0.0, p);
        CHECK(s.p_value() == 1.0);
        CHECK(s.log_likelihood_ratio() == 0.0);
        CHECK(s.decide(0.05).tag == DecisionTag::Continue);
        CHECK(s.blocks_seen() == 0);
    }

    TEST_CASE("p-value from the running maximum") {
        CHECK(p_value_from_max_log_lr(std::log(2.0)) == doctest::Approx(0.5));
        CHECK(p_value_from_max_log_lr(-1.0) == 1.0);
        CHECK(p_value_from_max_log_lr(std::log(100.0)) == doctest::Approx(0.01));
    }

    TEST_CASE("decision thresholds") {
        const MsprtState reject = state_with_log_l(std::log(25.0));
        CHECK(reject.max_log_likelihood_ratio() == doctest::Approx(std::log(25.0)));
        const Decision d = reject.decide(0.05);
        CHECK(d.tag == DecisionTag::RejectNull);
        CHECK(d.at_block == 0);
        CHECK(d.p_value == doctest::Approx(0.04));

        const MsprtState keep = state_with_log_l(std::log(10.0));
        CHECK(keep.decide(0.05).tag == DecisionTag::Continue);
        CHECK(keep.p_value() == doctest::Approx(0.1));
        CHECK_THROWS_AS(keep.decide(1.0), std::invalid_argument);
    }

    TEST_CASE("point-mass prior at theta0 keeps L at one") {
        MsprtState s(0.25, std::vector<double>(1000, 0.25));
        std::mt19937_64 rng(3);
        std::normal_distribution<double> d;
        for (std::size_t k = 0; k < 30; ++k) {
            std::vector<double> c(200);
            for (auto& v : c) v = d(rng);
            s.update(summary(k, 0.25 + 0.1 * d(rng), 0.05 + 0.01 * k, fit_kde(c, SilvermanRule{})));
            REQUIRE(s.log_likelihood_ratio() == 0.0);
        }
        CHECK(s.p_value() == 1.0);
    }

    TEST_CASE("evidence near a prior sample raises L") {
        MsprtState s(0.0, {2.0});
        const double before = s.log_likelihood_ratio();
        s.update(summary(0, 2.0, 0.5, KdeDensity({0.0}, 1.0)));
        CHECK(s.log_likelihood_ratio() > before);
    }

    TEST_CASE("log L matches a direct mixture computation") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> d;
        std::vector<double> prior(1000);
        for (auto& v : prior) v = 0.3 * d(rng);
        MsprtState s(0.0, prior);
        std::vector<BlockSummary> blocks;
        for (std::size_t k = 0; k < 6; ++k) {
            std::vector<double> c(300);
            for (auto& v : c) v = d(rng) + 0.2 * d(rng) * d(rng);
            blocks.push_back(summary(k, 0.1 + 0.2 * d(rng), 0.2 + 0.05 * k, fit_kde(c, SilvermanRule{})));
            s.update(blocks.back());
        }
        std::vector<double> terms;
        for (double th : prior) {
            double t = 0;
            for (const auto& b : blocks) t += b.density.log_density((b.theta_hat - th) / b.sigma);
            terms.push_back(t);
        }
        double den = 0;
        for (const auto& b : blocks) den += b.density.log_density(b.theta_hat / b.sigma);
        const double expect = logsumexp(terms) - std::log(1000.0) - den;
        CHECK(s.log_likelihood_ratio() == doctest::Approx(expect).epsilon(1e-9));
    }

    TEST_CASE("p-values never increase and stay in (0, 1]") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> d;
        Prior p;
        p.tau = 0.5;
        p.samples = 2000;
        MsprtState s = MsprtState::init(0.0, p);
        double last = 1.0;
        for (std::size_t k = 0; k < 200; ++k) {
            std::vector<double> c(200);
            for (auto& v : c) v = d(rng);
            s.update(summary(k, 0.3 * d(rng), 0.3, fit_kde(c, SilvermanRule{})));
            const double pv = s.p_value();
            REQUIRE(pv > 0.0);
            REQUIRE(pv <= 1.0);
            REQUIRE(pv <= last);
            last = pv;
        }
    }

    TEST_CASE("rejection is sticky and reports the first crossing") {
        MsprtState s(0.0, {3.0});
        const KdeDensity g({0.0}, 1.0);
        s.update(summary(0, 1.5, 1.0, g));  // log L = 0
        s.update(summary(1, 3.0, 1.0, g));  // log L = 4.5 > log 20
        REQUIRE(s.decide(0.05).rejected());
        s.update(summary(2, -3.0, 1.0, g));  // strong evidence the other way
        CHECK(s.log_likelihood_ratio() < std::log(20.0));
        const Decision d = s.decide(0.05);
        CHECK(d.rejected());
        CHECK(d.at_block == 1);
    }

    TEST_CASE("skipped blocks contribute a factor of one") {
        MsprtState s(0.0, {1.0, -1.0});
        const KdeDensity g({0.0}, 1.0);
        s.update(summary(0, 0.4, 1.0, g));
        const double l = s.log_likelihood_ratio();
        s.skip(1);
        CHECK(s.log_likelihood_ratio() == l);
        CHECK(s.skipped_blocks() == 1);
        CHECK(s.blocks_seen() == 1);
        CHECK_THROWS_AS(s.update(summary(1, 0.4, 1.0, g)), std::invalid_argument);
        CHECK_THROWS_AS(s.update(summary(2, 0.4, 0.0, g)), ZeroSigma);
    }
}
