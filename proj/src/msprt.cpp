#include "bmsprt/msprt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmsprt/errors.hpp"
#include "kernel_sum.hpp"

namespace bmsprt {

void Prior::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("prior tau must be positive");
    if (!std::isfinite(mean)) throw ConfigError("prior mean must be finite");
    if (samples < 1000) throw ConfigError("prior Monte Carlo sample count M must be at least 1000");
}

std::vector<double> Prior::draw() const {
    validate();
    Rng rng(seed);
    std::normal_distribution<double> normal(mean, tau);
    std::vector<double> out(samples);
    for (auto& v : out) v = normal(rng);
    return out;
}

std::string to_string(DecisionTag tag) {
    return tag == DecisionTag::RejectNull ? "RejectNull" : "Continue";
}

double p_value_from_max_log_lr(double max_log_l) noexcept {
    return max_log_l <= 0.0 ? 1.0 : std::exp(-max_log_l);
}

MsprtState::MsprtState(double theta0, std::vector<double> prior_samples)
    : theta0_(theta0), prior_(std::move(prior_samples)) {
    if (prior_.empty()) throw std::invalid_argument("mixture needs at least one prior sample");
    if (!std::isfinite(theta0_)) throw std::invalid_argument("theta0 must be finite");
    log_num_.assign(prior_.size(), 0.0);
    scratch_.resize(prior_.size());
}

MsprtState MsprtState::init(double theta0, const Prior& prior) {
    return MsprtState(theta0, prior.draw());
}

void MsprtState::consume_index(std::size_t block_index) {
    if (last_index_ && block_index <= *last_index_) {
        throw std::invalid_argument("block " + std::to_string(block_index) + " was already consumed");
    }
    last_index_ = block_index;
}

void MsprtState::update(const BlockSummary& summary) {
    if (!(summary.sigma > 0.0)) throw ZeroSigma("block summary has zero standard error");
    if (!std::isfinite(summary.theta_hat)) throw std::invalid_argument("theta_hat must be finite");
    consume_index(summary.block_index);

    const double inv_sigma = 1.0 / summary.sigma;
    for (std::size_t m = 0; m < prior_.size(); ++m) scratch_[m] = (summary.theta_hat - prior_[m]) * inv_sigma;
    summary.density.log_density(scratch_, scratch_);
    for (std::size_t m = 0; m < prior_.size(); ++m) log_num_[m] += scratch_[m];
    log_den_ += summary.density.log_density((summary.theta_hat - theta0_) * inv_sigma);

    const double top = *std::max_element(log_num_.begin(), log_num_.end());
    const double lse = top + std::log(detail::shifted_exp_sum(log_num_.data(), log_num_.size(), top));
    log_l_ = lse - std::log(static_cast<double>(prior_.size())) - log_den_;
    max_log_l_ = std::max(max_log_l_, log_l_);
    ++blocks_seen_;
    history_.emplace_back(summary.block_index, max_log_l_);
}

void MsprtState::skip(std::size_t block_index) {
    consume_index(block_index);
    ++skipped_;
    history_.emplace_back(block_index, max_log_l_);
}

double MsprtState::p_value() const noexcept { return p_value_from_max_log_lr(max_log_l_); }

Decision MsprtState::decide(double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    Decision d;
    d.p_value = p_value();
    if (d.p_value <= alpha) {
        d.tag = DecisionTag::RejectNull;
        for (const auto& [index, max_log_l] : history_) {
            if (p_value_from_max_log_lr(max_log_l) <= alpha) {
                d.at_block = index;
                break;
            }
        }
    } else if (!history_.empty()) {
        d.at_block = history_.back().first;
    }
    return d;
}

}  // namespace bmsprt
