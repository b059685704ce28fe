#include "bmsprt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bmsprt/errors.hpp"

namespace bmsprt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Unit weights when `w` is empty.
struct Weighted {
    std::span<const SessionRecord> rec;
    std::span<const std::uint32_t> w;

    std::size_t size() const noexcept { return rec.size(); }
    double weight(std::size_t i) const noexcept { return w.empty() ? 1.0 : static_cast<double>(w[i]); }
    double total() const noexcept {
        if (w.empty()) return static_cast<double>(rec.size());
        double n = 0.0;
        for (auto x : w) n += x;
        return n;
    }
};

double value_of(const SessionRecord& r, MetricTag tag) {
    return tag == MetricTag::MeanRevenue ? r.revenue : static_cast<double>(r.successful_queries);
}

double metric_value(const Weighted& d, MetricTag tag) {
    if (tag == MetricTag::MeanRevenue) {
        double n = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double w = d.weight(i);
            n += w;
            sum += w * d.rec[i].revenue;
        }
        return n > 0.0 ? sum / n : kNaN;
    }
    double sq = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = d.weight(i);
        sq += w * d.rec[i].queries;
        ss += w * d.rec[i].successful_queries;
    }
    return sq > 0.0 ? ss / sq : kNaN;
}

double closed_form_mean_se(const Weighted& d) {
    const double n = d.total();
    if (n < 2.0) return kNaN;
    const double mean = metric_value(d, MetricTag::MeanRevenue);
    double ss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double dev = d.rec[i].revenue - mean;
        ss += d.weight(i) * dev * dev;
    }
    return std::sqrt(ss / (n - 1.0) / n);
}

// The residuals s_i - R q_i sum to zero, so their mean square equals
// var(s) - 2R cov(s,q) + R^2 var(q) without the cancellation of raw moments.
// Plug-in (divisor N) moments: this is the linearized variance of R under the
// empirical distribution, the same quantity the bootstrap approximates.
double delta_ratio_se(const Weighted& d) {
    const double n = d.total();
    if (n < 2.0) return kNaN;
    double sq = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = d.weight(i);
        sq += w * d.rec[i].queries;
        ss += w * d.rec[i].successful_queries;
    }
    if (sq <= 0.0) return kNaN;
    const double qbar = sq / n;
    // s_i sq - ss q_i is an exact integer for count weights, so a block of
    // equal ratios gives exactly zero instead of a rounding residue.
    double resid = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double r = (d.rec[i].successful_queries * sq - ss * d.rec[i].queries) / sq;
        resid += d.weight(i) * r * r;
    }
    return std::sqrt(resid / n / n) / qbar;
}

// Leave-one-out values follow from the block totals in O(1) each.
double builtin_jackknife_se(const Weighted& d, MetricTag tag) {
    const double n = d.total();
    if (n < 2.0) return kNaN;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = d.weight(i);
        num += w * value_of(d.rec[i], tag);
        den += w * (tag == MetricTag::MeanRevenue ? 1.0 : d.rec[i].queries);
    }
    auto loo = [&](const SessionRecord& r) {
        const double dn = den - (tag == MetricTag::MeanRevenue ? 1.0 : r.queries);
        return dn > 0.0 ? (num - value_of(r, tag)) / dn : kNaN;
    };
    double mean = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.weight(i) == 0.0) continue;
        const double v = loo(d.rec[i]);
        if (!std::isfinite(v)) return kNaN;
        mean += d.weight(i) * v;
    }
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.weight(i) == 0.0) continue;
        const double dev = loo(d.rec[i]) - mean;
        ss += d.weight(i) * dev * dev;
    }
    return std::sqrt((n - 1.0) / n * ss);
}

double eval_custom(const MetricKind& kind, std::span<const SessionRecord> records) {
    try {
        return kind.functional()(records);
    } catch (const DegenerateBlock&) {
        return kNaN;
    }
}

double custom_jackknife_se(std::span<const SessionRecord> records, const MetricKind& kind) {
    const std::size_t n = records.size();
    if (n < 2) return kNaN;
    // Leave-one-out buffers differ from one i to the next in a single slot.
    std::vector<SessionRecord> buf(records.begin() + 1, records.end());
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) buf[i - 1] = records[i - 1];
        loo[i] = eval_custom(kind, buf);
        if (!std::isfinite(loo[i])) return kNaN;
    }
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return std::sqrt((static_cast<double>(n) - 1.0) / static_cast<double>(n) * ss);
}

double builtin_stderr(const Weighted& d, const MetricKind& kind) {
    switch (kind.resolved_stderr()) {
        case StderrMethod::DeltaMethod:
            return delta_ratio_se(d);
        case StderrMethod::ClosedForm:
            return closed_form_mean_se(d);
        default:
            return builtin_jackknife_se(d, kind.tag());
    }
}

}  // namespace

MetricKind MetricKind::mean_revenue() {
    return MetricKind(MetricTag::MeanRevenue, "mean_revenue", {});
}

MetricKind MetricKind::query_success_rate() {
    return MetricKind(MetricTag::QuerySuccessRate, "query_success_rate", {});
}

MetricKind MetricKind::custom(std::string name, Functional fn) {
    if (!fn) throw ConfigError("custom metric needs a functional");
    return MetricKind(MetricTag::Custom, std::move(name), std::move(fn));
}

MetricKind MetricKind::from_name(const std::string& name) {
    if (name == "mean_revenue" || name == "revenue") return mean_revenue();
    if (name == "query_success_rate" || name == "qsr" || name == "success_rate") {
        return query_success_rate();
    }
    throw ConfigError("unknown metric '" + name + "'");
}

MetricKind MetricKind::with_stderr(StderrMethod method) const {
    const bool ok = method == StderrMethod::Auto || method == StderrMethod::Jackknife ||
                    (method == StderrMethod::DeltaMethod && tag_ == MetricTag::QuerySuccessRate) ||
                    (method == StderrMethod::ClosedForm && tag_ == MetricTag::MeanRevenue);
    if (!ok) throw ConfigError("standard-error estimator does not apply to metric " + name_);
    MetricKind out = *this;
    out.stderr_ = method;
    return out;
}

StderrMethod MetricKind::resolved_stderr() const noexcept {
    if (stderr_ != StderrMethod::Auto) return stderr_;
    switch (tag_) {
        case MetricTag::QuerySuccessRate:
            return StderrMethod::DeltaMethod;
        case MetricTag::MeanRevenue:
            return StderrMethod::ClosedForm;
        default:
            return StderrMethod::Jackknife;
    }
}

double compute_metric(std::span<const SessionRecord> records, const MetricKind& kind) {
    if (records.empty()) throw DegenerateBlock("metric of an empty block");
    const double v = kind.tag() == MetricTag::Custom ? eval_custom(kind, records)
                                                     : metric_value({records, {}}, kind.tag());
    if (!std::isfinite(v)) throw DegenerateBlock(kind.name() + " is undefined on this block");
    return v;
}

double stderr_delta_ratio(std::span<const SessionRecord> records) {
    if (records.size() < 2) throw DegenerateBlock("delta method needs at least two records");
    const double se = delta_ratio_se({records, {}});
    if (!std::isfinite(se)) throw DegenerateBlock("ratio denominator is zero");
    return se;
}

double stderr_jackknife(std::span<const SessionRecord> records, const MetricKind& kind) {
    if (records.size() < 2) throw DegenerateBlock("jackknife needs at least two records");
    const double se = kind.tag() == MetricTag::Custom ? custom_jackknife_se(records, kind)
                                                      : builtin_jackknife_se({records, {}}, kind.tag());
    if (!std::isfinite(se)) throw DegenerateBlock("a leave-one-out value of " + kind.name() + " is undefined");
    return se;
}

double stderr_of(std::span<const SessionRecord> records, const MetricKind& kind) {
    switch (kind.resolved_stderr()) {
        case StderrMethod::DeltaMethod:
            return stderr_delta_ratio(records);
        case StderrMethod::ClosedForm: {
            if (records.size() < 2) throw DegenerateBlock("standard error needs at least two records");
            return closed_form_mean_se({records, {}});
        }
        default:
            return stderr_jackknife(records, kind);
    }
}

MetricEstimate estimate(std::span<const SessionRecord> records, const MetricKind& kind) {
    return {compute_metric(records, kind), stderr_of(records, kind)};
}

double studentize(const MetricEstimate& est, double theta) {
    if (!(est.sigma > 0.0)) throw ZeroSigma("cannot studentize with a zero standard error");
    return (est.theta_hat - theta) / est.sigma;
}

AtomTable compress(std::span<const SessionRecord> records) {
    auto key_less = [](const SessionRecord& a, const SessionRecord& b) {
        if (a.queries != b.queries) return a.queries < b.queries;
        if (a.successful_queries != b.successful_queries) return a.successful_queries < b.successful_queries;
        return a.revenue < b.revenue;
    };
    std::vector<SessionRecord> sorted(records.begin(), records.end());
    std::sort(sorted.begin(), sorted.end(), key_less);

    AtomTable table;
    table.total = sorted.size();
    for (const auto& r : sorted) {
        if (!table.atoms.empty() && !key_less(table.atoms.back(), r)) {
            ++table.counts.back();
            continue;
        }
        SessionRecord atom = r;
        atom.timestamp = 0;
        table.atoms.push_back(atom);
        table.counts.push_back(1);
    }
    return table;
}

double weighted_metric(std::span<const SessionRecord> atoms,
                       std::span<const std::uint32_t> weights,
                       MetricTag tag) {
    if (tag == MetricTag::Custom) throw ConfigError("weighted evaluation needs a built-in metric");
    return metric_value({atoms, weights}, tag);
}

double weighted_stderr(std::span<const SessionRecord> atoms,
                       std::span<const std::uint32_t> weights,
                       const MetricKind& kind) {
    if (kind.tag() == MetricTag::Custom) throw ConfigError("weighted evaluation needs a built-in metric");
    return builtin_stderr({atoms, weights}, kind);
}

}  // namespace bmsprt
