#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmsprt/bootstrap.hpp"

namespace bmsprt {

/// Normal prior N(mean, tau^2) on the tested parameter, integrated by M Monte
/// Carlo draws.
struct Prior {
    double mean = 0.0;
    double tau = 1.0;
    std::size_t samples = 5000;  ///< M
    std::uint64_t seed = 0;

    /// Throws ConfigError unless tau > 0 and M >= 1000.
    void validate() const;
    std::vector<double> draw() const;
};

/// Per-block inputs to the likelihood: theta_hat, its standard error and the
/// bootstrap density g* of the studentized statistic.
struct BlockSummary {
    std::size_t block_index = 0;
    double theta_hat = 0.0;
    double sigma = 0.0;
    KdeDensity density;
};

enum class DecisionTag { Continue, RejectNull };

struct Decision {
    DecisionTag tag = DecisionTag::Continue;
    std::size_t at_block = 0;  ///< first rejecting block, or the last block seen
    double p_value = 1.0;

    bool rejected() const noexcept { return tag == DecisionTag::RejectNull; }
};

std::string to_string(DecisionTag tag);

/// Running state of the bootstrap mixture SPRT.
///
/// Keeps, for every prior draw theta_m, the log-likelihood of all blocks seen
/// so far evaluated at the studentized deviation (theta_hat_k - theta_m) /
/// sigma_k, and the same quantity at theta0. The mixture likelihood ratio is
///
///   log L_n = logsumexp_m(log_num_m) - log M - log_den
///
/// and the always-valid p-value is min(1, 1 / max_{t<=n} L_t). Blocks whose
/// standard error is zero are skipped and contribute a factor of one.
class MsprtState {
public:
    MsprtState(double theta0, std::vector<double> prior_samples);

    static MsprtState init(double theta0, const Prior& prior);

    /// Folds in one block. Block indices must strictly increase.
    /// Throws ZeroSigma when summary.sigma is not positive.
    void update(const BlockSummary& summary);

    /// Records a block that contributes no likelihood (degenerate block).
    void skip(std::size_t block_index);

    double theta0() const noexcept { return theta0_; }
    const std::vector<double>& prior_samples() const noexcept { return prior_; }
    const std::vector<double>& log_numerators() const noexcept { return log_num_; }
    double log_denominator() const noexcept { return log_den_; }

    double log_likelihood_ratio() const noexcept { return log_l_; }
    double max_log_likelihood_ratio() const noexcept { return max_log_l_; }
    /// Blocks folded into the likelihood; skipped blocks are counted separately.
    std::size_t blocks_seen() const noexcept { return blocks_seen_; }
    std::size_t skipped_blocks() const noexcept { return skipped_; }

    double p_value() const noexcept;

    /// RejectNull iff p_value() <= alpha. Since the p-value never increases
    /// the decision is sticky; at_block reports the first crossing.
    Decision decide(double alpha) const;

private:
    void consume_index(std::size_t block_index);

    double theta0_;
    std::vector<double> prior_;
    std::vector<double> log_num_;
    std::vector<double> scratch_;
    double log_den_ = 0.0;
    double log_l_ = 0.0;
    double max_log_l_ = 0.0;
    std::size_t blocks_seen_ = 0;
    std::size_t skipped_ = 0;
    std::optional<std::size_t> last_index_;
    // (block index, running max log L) after every update or skip
    std::vector<std::pair<std::size_t, double>> history_;
};

/// min{1, exp(-max_log_l)}
double p_value_from_max_log_lr(double max_log_l) noexcept;

/// One JSON-lines record per processed block.
struct UpdateRecord {
    std::size_t block_index = 0;
    std::optional<double> theta_hat;
    std::optional<double> sigma;
    double log_L = 0.0;
    double p_value = 1.0;
    DecisionTag decision = DecisionTag::Continue;
};

}  // namespace bmsprt
