#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl_bind.h>

#include <string>
#include <vector>

#include "bmsprt/abtest.hpp"
#include "bmsprt/baselines.hpp"
#include "bmsprt/bootstrap.hpp"
#include "bmsprt/cli.hpp"
#include "bmsprt/errors.hpp"
#include "bmsprt/harness.hpp"
#include "bmsprt/io.hpp"
#include "bmsprt/metrics.hpp"
#include "bmsprt/msprt.hpp"

namespace py = pybind11;
using namespace bmsprt;

using Sessions = std::vector<SessionRecord>;
PYBIND11_MAKE_OPAQUE(Sessions)

namespace {

MetricKind metric_of(const std::string& name, const std::string& stderr_method) {
    MetricKind kind = MetricKind::from_name(name);
    if (stderr_method == "auto") return kind;
    if (stderr_method == "delta") return kind.with_stderr(StderrMethod::DeltaMethod);
    if (stderr_method == "closed_form") return kind.with_stderr(StderrMethod::ClosedForm);
    if (stderr_method == "jackknife") return kind.with_stderr(StderrMethod::Jackknife);
    throw ConfigError("unknown stderr method: " + stderr_method);
}

BandwidthRule bandwidth_of(std::optional<double> h) {
    if (h) return FixedBandwidth{*h};
    return SilvermanRule{};
}

Sessions from_arrays(py::array_t<std::uint32_t, py::array::forcecast> queries,
                     py::array_t<std::uint32_t, py::array::forcecast> successful_queries,
                     py::array_t<double, py::array::forcecast> revenue,
                     std::optional<py::array_t<std::int64_t, py::array::forcecast>> timestamp) {
    const auto n = static_cast<std::size_t>(queries.size());
    if (static_cast<std::size_t>(successful_queries.size()) != n || static_cast<std::size_t>(revenue.size()) != n ||
        (timestamp && static_cast<std::size_t>(timestamp->size()) != n)) {
        throw std::invalid_argument("arrays must have equal length");
    }
    auto q = queries.unchecked<1>();
    auto s = successful_queries.unchecked<1>();
    auto r = revenue.unchecked<1>();
    Sessions out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {timestamp ? timestamp->at(i) : static_cast<std::int64_t>(i), q(i), s(i), r(i)};
        if (!is_valid(out[i])) throw DataError("record " + std::to_string(i) + " violates the session invariants");
    }
    return out;
}

py::dict to_arrays(const Sessions& recs) {
    const auto n = static_cast<py::ssize_t>(recs.size());
    const std::vector<py::ssize_t> shape{n};
    py::array_t<std::int64_t> ts(shape);
    py::array_t<std::uint32_t> q(shape), s(shape);
    py::array_t<double> r(shape);
    auto t_ = ts.mutable_unchecked<1>();
    auto q_ = q.mutable_unchecked<1>();
    auto s_ = s.mutable_unchecked<1>();
    auto r_ = r.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < n; ++i) {
        t_(i) = recs[i].timestamp;
        q_(i) = recs[i].queries;
        s_(i) = recs[i].successful_queries;
        r_(i) = recs[i].revenue;
    }
    py::dict d;
    d["ts"] = ts;
    d["queries"] = q;
    d["successful_queries"] = s;
    d["revenue"] = r;
    return d;
}

Sessions synth(std::size_t n, const std::string& model, double p, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n_sessions = n;
    cfg.seed = seed;
    if (model == "correlated") {
        cfg.model = CorrelatedQueries{};
    } else if (model == "revenue") {
        cfg.model = ZeroInflatedRevenue{};
    } else if (model == "bernoulli") {
        cfg.model = BernoulliSessions{p};
    } else {
        throw ConfigError("unknown model: " + model);
    }
    return generate_sessions(cfg);
}

BootstrapMsprtSettings settings_of(const std::string& metric,
                                   std::size_t block_size,
                                   double alpha,
                                   double tau,
                                   std::size_t resamples,
                                   std::size_t prior_samples,
                                   std::uint64_t seed_bootstrap,
                                   std::uint64_t seed_prior) {
    BootstrapMsprtSettings s;
    s.metric = MetricKind::from_name(metric);
    s.block_size = block_size;
    s.alpha = alpha;
    s.prior.tau = tau;
    s.prior.samples = prior_samples;
    s.prior.seed = seed_prior;
    s.bootstrap.resamples = resamples;
    s.bootstrap.seed = seed_bootstrap;
    return s;
}

py::dict result_dict(const AbTestResult& r) {
    py::dict d;
    d["decision"] = to_string(r.decision.tag);
    d["at_block"] = r.decision.at_block;
    d["p_value"] = r.decision.p_value;
    d["p_trajectory"] = r.p_trajectory;
    d["pairs_processed"] = r.pairs_processed;
    d["skipped_blocks"] = r.skipped_blocks;
    d["final_log_L"] = r.final_log_L;
    py::list recs;
    for (const auto& rec : r.records) recs.append(py::module_::import("json").attr("loads")(to_json(rec).dump()));
    d["records"] = recs;
    return d;
}

py::list trials_list(const std::vector<TrialResult>& trials) {
    py::list out;
    for (const auto& t : trials) {
        py::dict d;
        d["trial_id"] = t.trial_id;
        d["final_p"] = t.final_p;
        d["rejected"] = t.rejected;
        d["samples_consumed"] = t.samples_consumed;
        d["offset"] = t.offset;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_bmsprt, m) {
    m.doc() = "Bootstrap mixture SPRT for sequential A/B testing";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DegenerateBlock>(m, "DegenerateBlock", error);
    py::register_exception<ZeroSigma>(m, "ZeroSigma", error);
    py::register_exception<AllSamplesEqual>(m, "AllSamplesEqual", error);
    py::register_exception<CalibrationFailed>(m, "CalibrationFailed", error);
    py::register_exception<ConfigError>(m, "ConfigError", error);
    auto data_error = py::register_exception<DataError>(m, "DataError", error);
    py::register_exception<MissingHeader>(m, "MissingHeader", data_error);
    py::register_exception<MalformedRow>(m, "MalformedRow", data_error);

    py::class_<SessionRecord>(m, "SessionRecord")
        .def(py::init([](std::int64_t ts, std::uint32_t q, std::uint32_t s, double rev) {
                 SessionRecord r{ts, q, s, rev};
                 if (!is_valid(r)) throw DataError("record violates the session invariants");
                 return r;
             }),
             py::arg("ts"), py::arg("queries"), py::arg("successful_queries"), py::arg("revenue"))
        .def_readonly("ts", &SessionRecord::timestamp)
        .def_readonly("queries", &SessionRecord::queries)
        .def_readonly("successful_queries", &SessionRecord::successful_queries)
        .def_readonly("revenue", &SessionRecord::revenue)
        .def(py::self == py::self)
        .def("__repr__", [](const SessionRecord& r) {
            return "SessionRecord(ts=" + std::to_string(r.timestamp) + ", queries=" + std::to_string(r.queries) +
                   ", successful_queries=" + std::to_string(r.successful_queries) +
                   ", revenue=" + format_double(r.revenue) + ")";
        });

    py::bind_vector<Sessions>(m, "Sessions")
        .def("to_arrays", &to_arrays, "Columns as numpy arrays.")
        .def("to_csv", [](const Sessions& s) { return sessions_csv(s); });

    m.def("from_arrays", &from_arrays, py::arg("queries"), py::arg("successful_queries"), py::arg("revenue"),
          py::arg("ts") = py::none());
    m.def("read_csv", [](const std::string& path) { return parse_csv(std::filesystem::path(path)); },
          py::arg("path"));
    m.def("synth", &synth, py::arg("n"), py::arg("model") = "correlated", py::arg("p") = 0.05, py::arg("seed") = 0,
          "Synthetic sessions: model is 'correlated', 'revenue' or 'bernoulli'.");

    m.def(
        "compute_metric",
        [](const Sessions& r, const std::string& metric) { return compute_metric(r, MetricKind::from_name(metric)); },
        py::arg("records"), py::arg("metric") = "query_success_rate");
    m.def(
        "estimate",
        [](const Sessions& r, const std::string& metric, const std::string& method) {
            const auto e = estimate(r, metric_of(metric, method));
            return py::make_tuple(e.theta_hat, e.sigma);
        },
        py::arg("records"), py::arg("metric") = "query_success_rate", py::arg("stderr") = "auto",
        "(theta_hat, sigma) for one block.");
    m.def("stderr_delta_ratio", [](const Sessions& r) { return stderr_delta_ratio(r); }, py::arg("records"));
    m.def(
        "stderr_jackknife",
        [](const Sessions& r, const std::string& metric) { return stderr_jackknife(r, MetricKind::from_name(metric)); },
        py::arg("records"), py::arg("metric") = "query_success_rate");

    py::class_<KdeDensity>(m, "KdeDensity")
        .def(py::init<std::vector<double>, double>(), py::arg("centers"), py::arg("bandwidth"))
        .def_property_readonly("bandwidth", &KdeDensity::bandwidth)
        .def_property_readonly("centers",
                               [](const KdeDensity& k) { return std::vector<double>(k.centers().begin(), k.centers().end()); })
        .def("__call__", py::overload_cast<double>(&KdeDensity::operator(), py::const_), py::arg("x"))
        .def("log_density", py::overload_cast<double>(&KdeDensity::log_density, py::const_), py::arg("x"))
        .def(
            "log_density_many",
            [](const KdeDensity& k, py::array_t<double, py::array::forcecast> xs) {
                std::vector<double> in(xs.data(), xs.data() + xs.size()), out(in.size());
                k.log_density(in, out);
                return py::array_t<double>(std::vector<py::ssize_t>{static_cast<py::ssize_t>(out.size())}, out.data());
            },
            py::arg("xs"));
    m.def("silverman_bandwidth", [](const std::vector<double>& s) { return silverman_bandwidth(s); },
          py::arg("samples"));
    m.def(
        "fit_kde",
        [](const std::vector<double>& s, std::optional<double> h) { return fit_kde(s, bandwidth_of(h)); },
        py::arg("samples"), py::arg("bandwidth") = py::none(), "Gaussian KDE; Silverman bandwidth unless given.");
    m.def(
        "bootstrap_studentized_samples",
        [](const Sessions& block, const std::string& metric, std::size_t resamples, std::uint64_t seed) {
            BootstrapConfig cfg;
            cfg.resamples = resamples;
            cfg.seed = seed;
            cfg.validate();
            Rng rng = make_rng(seed, 0);
            return bootstrap_studentized_samples(block, MetricKind::from_name(metric), cfg, rng);
        },
        py::arg("block"), py::arg("metric") = "query_success_rate", py::arg("resamples") = 1000, py::arg("seed") = 0);

    py::class_<MsprtState>(m, "MsprtState")
        .def(py::init([](double theta0, double tau, std::size_t samples, double mean, std::uint64_t seed) {
                 Prior p;
                 p.mean = mean;
                 p.tau = tau;
                 p.samples = samples;
                 p.seed = seed;
                 return MsprtState::init(theta0, p);
             }),
             py::arg("theta0"), py::arg("tau"), py::arg("samples") = 5000, py::arg("mean") = 0.0, py::arg("seed") = 0)
        .def_static(
            "from_prior_samples",
            [](double theta0, std::vector<double> samples) { return MsprtState(theta0, std::move(samples)); },
            py::arg("theta0"), py::arg("prior_samples"))
        .def(
            "update",
            [](MsprtState& s, std::size_t index, double theta_hat, double sigma, const KdeDensity& g) {
                s.update(BlockSummary{index, theta_hat, sigma, g});
            },
            py::arg("block_index"), py::arg("theta_hat"), py::arg("sigma"), py::arg("density"))
        .def("skip", &MsprtState::skip, py::arg("block_index"))
        .def_property_readonly("log_L", &MsprtState::log_likelihood_ratio)
        .def_property_readonly("max_log_L", &MsprtState::max_log_likelihood_ratio)
        .def_property_readonly("blocks_seen", &MsprtState::blocks_seen)
        .def_property_readonly("skipped_blocks", &MsprtState::skipped_blocks)
        .def("p_value", &MsprtState::p_value)
        .def(
            "decide",
            [](const MsprtState& s, double alpha) {
                const Decision d = s.decide(alpha);
                return py::make_tuple(to_string(d.tag), d.at_block, d.p_value);
            },
            py::arg("alpha") = 0.05, "(decision, at_block, p_value)");

    m.def(
        "run_ab_test",
        [](const Sessions& a, const Sessions& b, const std::string& metric, std::size_t block_size, double alpha,
           double tau, std::size_t resamples, std::size_t prior_samples, double offset, std::uint64_t seed_bootstrap,
           std::uint64_t seed_prior, bool stop_on_reject) {
            const BootstrapMsprtTest test(
                settings_of(metric, block_size, alpha, tau, resamples, prior_samples, seed_bootstrap, seed_prior));
            py::gil_scoped_release release;
            AbTestResult r = test.run_detailed(a, b, offset, 0, stop_on_reject);
            py::gil_scoped_acquire acquire;
            return result_dict(r);
        },
        py::arg("a"), py::arg("b"), py::arg("metric") = "query_success_rate", py::arg("block_size") = 1000,
        py::arg("alpha") = 0.05, py::arg("tau"), py::arg("resamples") = 1000, py::arg("prior_samples") = 5000,
        py::arg("offset") = 0.0, py::arg("seed_bootstrap") = 3, py::arg("seed_prior") = 4,
        py::arg("stop_on_reject") = true, "One sequential A/B run of the bootstrap mixture SPRT.");

    m.def(
        "auto_tau",
        [](const Sessions& r, const std::string& metric, double fraction) {
            return auto_tau(r, MetricKind::from_name(metric), fraction);
        },
        py::arg("records"), py::arg("metric") = "query_success_rate", py::arg("fraction") = 0.03);

    m.def(
        "aa_trials",
        [](const Sessions& recs, std::size_t trials, const std::string& metric, std::size_t block_size, double alpha,
           double tau, std::size_t resamples, std::size_t prior_samples, double offset, std::uint64_t seed_split,
           std::uint64_t seed_bootstrap, std::uint64_t seed_prior, std::size_t threads) {
            const BootstrapMsprtTest test(
                settings_of(metric, block_size, alpha, tau, resamples, prior_samples, seed_bootstrap, seed_prior));
            std::vector<TrialResult> out;
            {
                py::gil_scoped_release release;
                out = run_aa_trials(recs, test, trials, seed_split, offset, threads);
            }
            return trials_list(out);
        },
        py::arg("records"), py::arg("trials"), py::arg("metric") = "query_success_rate", py::arg("block_size") = 1000,
        py::arg("alpha") = 0.05, py::arg("tau"), py::arg("resamples") = 1000, py::arg("prior_samples") = 5000,
        py::arg("offset") = 0.0, py::arg("seed_split") = 2, py::arg("seed_bootstrap") = 3, py::arg("seed_prior") = 4,
        py::arg("threads") = 1, "Post A/A (or offset) trials on random splits of one dataset.");

    m.def(
        "z_test",
        [](const Sessions& a, const Sessions& b, const std::string& metric) {
            return z_test(a, b, MetricKind::from_name(metric));
        },
        py::arg("a"), py::arg("b"), py::arg("metric") = "query_success_rate");
    m.def("maxsprt_llr", &maxsprt_bernoulli_llr, py::arg("successes_a"), py::arg("n_a"), py::arg("successes_b"),
          py::arg("n_b"));
    m.def(
        "calibrate_maxsprt_threshold",
        [](double p0, std::size_t max_samples, std::size_t block_size, double alpha, std::size_t trials,
           std::uint64_t seed) {
            MaxSprtConfig cfg;
            cfg.p0 = p0;
            cfg.max_samples = max_samples;
            cfg.block_size = block_size;
            const auto c = calibrate_maxsprt_threshold(cfg, alpha, trials, seed);
            return py::make_tuple(c.threshold, c.type1);
        },
        py::arg("p0"), py::arg("max_samples"), py::arg("block_size") = 1000, py::arg("alpha") = 0.05,
        py::arg("trials") = 1000, py::arg("seed") = 5, "(threshold, simulated type-1).");

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "bmsprt");
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            return cli::main(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");
}
