#include "bmsprt/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "bmsprt/abtest.hpp"
#include "bmsprt/baselines.hpp"
#include "bmsprt/errors.hpp"
#include "bmsprt/harness.hpp"
#include "bmsprt/io.hpp"
#include "bmsprt/split.hpp"

namespace bmsprt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kCdfAlphas[] = {0.01, 0.05, 0.1};

const char* kSamplesConsumed =
    "records of both groups up to and including the rejecting block pair; every record of the split when the test "
    "does not reject";

// Collects result files and writes them only once the run has succeeded.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string contents) { files_.emplace_back(name, std::move(contents)); }

    void commit() const {
        fs::create_directories(dir_);
        for (const auto& [name, contents] : files_) write_file_atomic(dir_ / name, contents);
        for (const auto& [name, contents] : files_) std::cout << "wrote " << (dir_ / name).string() << '\n';
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

struct Dataset {
    std::vector<SessionRecord> a;
    std::vector<SessionRecord> b;  ///< empty unless a second input was given
    json source;
};

double parse_real(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ConfigError("bad " + what + ": '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("empty entry in list '" + text + "'");
        out.push_back(item.substr(b, e - b + 1));
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

std::string default_model(const std::string& sub) { return sub == "compare-maxsprt" ? "bernoulli" : "correlated"; }

std::size_t default_sessions(const std::string& sub) { return sub == "compare-maxsprt" ? 100'000 : 200'000; }

// The Bernoulli comparison uses the prior scale picked by post A/A runs on that data.
double tau_fraction(const std::string& sub, const RunConfig& cfg) {
    return cfg.tau_fraction.value_or(sub == "compare-maxsprt" ? 0.10 : 0.03);
}

SyntheticConfig synthetic_config(const std::string& sub, const RunConfig& cfg) {
    SyntheticConfig sc;
    sc.n_sessions = cfg.n_sessions.value_or(default_sessions(sub));
    sc.seed = cfg.seed_data;
    const std::string model = cfg.model.value_or(default_model(sub));
    if (model == "correlated") {
        sc.model = CorrelatedQueries{};
    } else if (model == "revenue") {
        sc.model = ZeroInflatedRevenue{};
    } else if (model == "bernoulli") {
        sc.model = BernoulliSessions{cfg.bernoulli_p};
    } else {
        throw ConfigError("unknown model '" + model + "' (expected correlated, revenue or bernoulli)");
    }
    sc.validate();
    return sc;
}

json synthetic_json(const SyntheticConfig& sc) {
    json j = {{"kind", "synthetic"}, {"model", model_name(sc.model)}, {"n_sessions", sc.n_sessions}};
    if (const auto* m = std::get_if<CorrelatedQueries>(&sc.model)) {
        j["mean_queries"] = m->mean_queries;
        j["beta_a"] = m->beta_a;
        j["beta_b"] = m->beta_b;
    } else if (const auto* m = std::get_if<ZeroInflatedRevenue>(&sc.model)) {
        j["p_zero"] = m->p_zero;
        j["log_mean"] = m->log_mean;
        j["log_sd"] = m->log_sd;
    } else {
        j["p"] = std::get<BernoulliSessions>(sc.model).p;
    }
    return j;
}

Dataset load_data(const std::string& sub, const RunConfig& cfg) {
    Dataset d;
    if (!cfg.input.empty()) {
        if (cfg.model || cfg.n_sessions) throw ConfigError("--model/--n cannot be combined with --input");
        d.a = parse_csv(fs::path(cfg.input));
        d.source = {{"kind", "csv"}, {"path", cfg.input}, {"records", d.a.size()}};
        if (!cfg.input_b.empty()) {
            d.b = parse_csv(fs::path(cfg.input_b));
            d.source["path_b"] = cfg.input_b;
            d.source["records_b"] = d.b.size();
        }
        return d;
    }
    if (!cfg.input_b.empty()) throw ConfigError("--input-b requires --input");
    const SyntheticConfig sc = synthetic_config(sub, cfg);
    d.a = generate_sessions(sc);
    d.source = synthetic_json(sc);
    return d;
}

MetricKind metric_of(const RunConfig& cfg) {
    MetricKind kind = MetricKind::from_name(cfg.metric);
    static const std::map<std::string, StderrMethod> methods = {{"auto", StderrMethod::Auto},
                                                                {"delta", StderrMethod::DeltaMethod},
                                                                {"closed_form", StderrMethod::ClosedForm},
                                                                {"jackknife", StderrMethod::Jackknife}};
    const auto it = methods.find(cfg.stderr_method);
    if (it == methods.end()) throw ConfigError("unknown stderr method '" + cfg.stderr_method + "'");
    return kind.with_stderr(it->second);
}

BandwidthRule bandwidth_of(const RunConfig& cfg) {
    if (cfg.bandwidth == "silverman") return SilvermanRule{};
    const double h = parse_real(cfg.bandwidth, "bandwidth");
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
    return FixedBandwidth{h};
}

double resolve_tau(const std::string& sub,
                   const RunConfig& cfg,
                   std::span<const SessionRecord> reference,
                   const MetricKind& kind) {
    if (cfg.tau == "auto") {
        const double f = tau_fraction(sub, cfg);
        if (!(f > 0.0)) throw ConfigError("tau fraction must be positive");
        return auto_tau(reference, kind, f);
    }
    const double tau = parse_real(cfg.tau, "tau");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive or 'auto'");
    return tau;
}

BootstrapMsprtSettings settings_of(const RunConfig& cfg, const MetricKind& kind, double tau, std::size_t block) {
    BootstrapMsprtSettings s;
    s.metric = kind;
    s.block_size = block;
    s.alpha = cfg.alpha;
    s.prior.mean = cfg.prior_mean;
    s.prior.tau = tau;
    s.prior.samples = cfg.prior_samples;
    s.prior.seed = cfg.seed_prior;
    s.prior.validate();
    s.bootstrap.resamples = cfg.resamples;
    s.bootstrap.bandwidth = bandwidth_of(cfg);
    s.bootstrap.seed = cfg.seed_bootstrap;
    s.bootstrap.validate();
    return s;
}

void check_common(const RunConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (cfg.block_size < 2) throw ConfigError("block size must be at least 2");
    if (cfg.trials == 0) throw ConfigError("trials must be positive");
    if (cfg.looks == 0) throw ConfigError("looks must be positive");
}

// Thread count is deliberately absent: it never changes results.
json metadata(const std::string& sub, const RunConfig& cfg, const MetricKind& kind, double tau, const json& source) {
    json j;
    j["subcommand"] = sub;
    j["version"] = "0.1.0";
    j["input"] = source;
    j["seeds"] = {{"data", cfg.seed_data},
                  {"split", cfg.seed_split},
                  {"bootstrap", cfg.seed_bootstrap},
                  {"prior", cfg.seed_prior},
                  {"calibration", cfg.seed_calibration}};
    j["config"] = {{"metric", kind.name()},
                   {"stderr", cfg.stderr_method},
                   {"block_size", cfg.block_size},
                   {"alpha", cfg.alpha},
                   {"tau", tau},
                   {"tau_spec", cfg.tau},
                   {"tau_fraction", tau_fraction(sub, cfg)},
                   {"prior_mean", cfg.prior_mean},
                   {"B", cfg.resamples},
                   {"M", cfg.prior_samples},
                   {"bandwidth", cfg.bandwidth},
                   {"trials", cfg.trials},
                   {"looks", cfg.looks}};
    j["samples_consumed"] = kSamplesConsumed;
    return j;
}

json cdf_json(std::span<const double> p) {
    json j = json::array();
    for (double a : kCdfAlphas) j.push_back({{"alpha", a}, {"cdf", empirical_cdf(p, a)}});
    return j;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

void run_synth(const RunConfig& cfg) {
    if (!cfg.input.empty()) throw ConfigError("synth does not read --input");
    const SyntheticConfig sc = synthetic_config("synth", cfg);
    const auto records = generate_sessions(sc);
    json meta = {{"subcommand", "synth"},
                 {"version", "0.1.0"},
                 {"input", synthetic_json(sc)},
                 {"seeds", {{"data", cfg.seed_data}}}};
    Outputs out(cfg.out);
    out.add("sessions.csv", sessions_csv(records));
    out.add("run_metadata.json", pretty(meta));
    out.commit();
    std::cout << "synth: " << records.size() << " sessions (" << model_name(sc.model) << ")\n";
}

void run_test(const RunConfig& cfg) {
    check_common(cfg);
    const Dataset data = load_data("test", cfg);
    const MetricKind kind = metric_of(cfg);
    const double tau = resolve_tau("test", cfg, data.a, kind);
    const BootstrapMsprtTest test(settings_of(cfg, kind, tau, cfg.block_size));

    std::vector<SessionRecord> a, b;
    if (data.b.empty()) {
        Rng rng = make_rng(cfg.seed_split, 0);
        std::tie(a, b) = random_split(data.a, rng);
    } else {
        a = data.a;
        b = data.b;
    }
    const AbTestResult r = test.run_detailed(a, b, cfg.offset, 0, !cfg.full_trajectory);

    std::string lines;
    for (const auto& rec : r.records) lines += to_json(rec).dump() + "\n";
    const std::size_t consumed = r.decision.rejected() ? 2 * cfg.block_size * (r.decision.at_block + 1) : a.size() + b.size();

    json meta = metadata("test", cfg, kind, tau, data.source);
    meta["config"]["offset"] = cfg.offset;
    meta["config"]["split"] = data.b.empty() ? "random" : "inputs";
    meta["result"] = {{"decision", to_string(r.decision.tag)},
                      {"at_block", r.decision.at_block},
                      {"p_value", r.decision.p_value},
                      {"pairs_processed", r.pairs_processed},
                      {"skipped_blocks", r.skipped_blocks},
                      {"samples_consumed", consumed}};
    Outputs out(cfg.out);
    out.add("trajectory.jsonl", lines);
    out.add("run_metadata.json", pretty(meta));
    out.commit();
    std::cout << "test: " << to_string(r.decision.tag) << " at block " << r.decision.at_block
              << ", p = " << format_double(r.decision.p_value) << '\n';
}

void run_aa(const RunConfig& cfg) {
    check_common(cfg);
    const Dataset data = load_data("aa", cfg);
    if (!data.b.empty()) throw ConfigError("aa splits a single input; drop --input-b");
    const MetricKind kind = metric_of(cfg);
    const double tau = resolve_tau("aa", cfg, data.a, kind);
    const BootstrapMsprtTest test(settings_of(cfg, kind, tau, cfg.block_size));

    const auto trials = run_aa_trials(data.a, test, cfg.trials, cfg.seed_split, 0.0, cfg.threads);
    const auto p = final_p_values(trials);
    const auto chasing = run_chasing_trials(data.a, kind, cfg.looks, cfg.alpha, cfg.trials, cfg.seed_split, cfg.threads);
    std::size_t ever = 0, single = 0;
    for (const auto& c : chasing) {
        ever += c.ever_rejected;
        single += c.final_p <= cfg.alpha;
    }
    const double n = static_cast<double>(cfg.trials);

    json meta = metadata("aa", cfg, kind, tau, data.source);
    meta["result"] = {{"rejection_fraction", rejection_rate(trials)},
                      {"cdf", cdf_json(p)},
                      {"ztest_chasing_rejection_fraction", static_cast<double>(ever) / n},
                      {"ztest_single_look_rejection_fraction", static_cast<double>(single) / n}};
    Outputs out(cfg.out);
    out.add("qq_points.csv", qq_csv(qq_points(p)));
    out.add("trials.csv", trials_csv(trials));
    out.add("run_metadata.json", pretty(meta));
    out.commit();
    std::cout << "aa: rejection fraction " << format_double(rejection_rate(trials)) << " over " << cfg.trials
              << " trials\n";
}

void run_power(const RunConfig& cfg) {
    check_common(cfg);
    const Dataset data = load_data("power", cfg);
    if (!data.b.empty()) throw ConfigError("power splits a single input; drop --input-b");
    const MetricKind kind = metric_of(cfg);
    const double tau = resolve_tau("power", cfg, data.a, kind);
    const auto offsets = parse_offsets(cfg.offsets.value_or("0,0.5tau,1tau,2tau,5tau"), tau);
    const BootstrapMsprtTest test(settings_of(cfg, kind, tau, cfg.block_size));

    std::vector<PowerPoint> points;
    std::vector<TrialResult> all;
    for (double off : offsets) {
        const auto trials = run_aa_trials(data.a, test, cfg.trials, cfg.seed_split, off, cfg.threads);
        points.push_back({off, rejection_rate(trials), cfg.trials, avg_duration(trials)});
        all.insert(all.end(), trials.begin(), trials.end());
    }

    json meta = metadata("power", cfg, kind, tau, data.source);
    meta["config"]["offsets"] = offsets;
    Outputs out(cfg.out);
    out.add("power.csv", power_csv(points));
    out.add("duration.csv", duration_csv(points));
    out.add("trials.csv", trials_csv(all));
    out.add("run_metadata.json", pretty(meta));
    out.commit();
    for (const auto& pt : points) {
        std::cout << "power: offset " << format_double(pt.offset) << " rejection " << format_double(pt.rejection_rate)
                  << " duration " << format_double(pt.avg_duration) << '\n';
    }
}

void run_blocksize(const RunConfig& cfg) {
    check_common(cfg);
    const Dataset data = load_data("blocksize", cfg);
    if (!data.b.empty()) throw ConfigError("blocksize splits a single input; drop --input-b");
    const MetricKind kind = metric_of(cfg);
    const double tau = resolve_tau("blocksize", cfg, data.a, kind);
    const auto sizes = parse_sizes(cfg.block_sizes);
    for (std::size_t s : sizes) settings_of(cfg, kind, tau, s);  // validate before running anything

    const TestFactory factory = [&](std::size_t size) -> std::unique_ptr<SequentialTest> {
        return std::make_unique<BootstrapMsprtTest>(settings_of(cfg, kind, tau, size));
    };
    const auto sweep = block_size_sweep(data.a, sizes, factory, cfg.trials, cfg.seed_split, kCdfAlphas, cfg.threads);

    std::string table = "block_size,alpha,cdf,controls_type1\n";
    Outputs out(cfg.out);
    json reports = json::array();
    for (const auto& r : sweep.reports) {
        for (const auto& [a, c] : r.cdf) {
            table += std::to_string(r.block_size) + "," + format_double(a) + "," + format_double(c) + "," +
                     (r.controls_type1 ? "true" : "false") + "\n";
        }
        out.add("qq_points_" + std::to_string(r.block_size) + ".csv", qq_csv(r.qq));
        out.add("trials_" + std::to_string(r.block_size) + ".csv", trials_csv(r.trials));
        reports.push_back({{"block_size", r.block_size},
                           {"rejection_fraction", rejection_rate(r.trials)},
                           {"avg_duration", avg_duration(r.trials)},
                           {"controls_type1", r.controls_type1}});
    }
    json meta = metadata("blocksize", cfg, kind, tau, data.source);
    meta["config"]["block_sizes"] = sizes;
    meta["result"] = {{"reports", reports}, {"selected_block_size", nullptr}};
    if (sweep.selected) meta["result"]["selected_block_size"] = *sweep.selected;
    out.add("blocksize.csv", table);
    out.add("run_metadata.json", pretty(meta));
    out.commit();
    if (sweep.selected) {
        std::cout << "blocksize: smallest size controlling type-1 is " << *sweep.selected << '\n';
    } else {
        std::cout << "blocksize: no tested size controls type-1\n";
    }
}

void run_compare(const RunConfig& cfg) {
    check_common(cfg);
    const Dataset data = load_data("compare-maxsprt", cfg);
    if (!data.b.empty()) throw ConfigError("compare-maxsprt splits a single input; drop --input-b");
    const MetricKind kind = metric_of(cfg);
    if (kind.tag() != MetricTag::QuerySuccessRate) throw ConfigError("compare-maxsprt needs the query_success_rate metric");
    const double tau = resolve_tau("compare-maxsprt", cfg, data.a, kind);
    const auto offsets = parse_offsets(cfg.offsets.value_or("0,0.002,0.004,0.006,0.008"), tau);
    const BootstrapMsprtTest boot(settings_of(cfg, kind, tau, cfg.block_size));

    MaxSprtConfig mc;
    mc.p0 = cfg.p0.value_or(compute_metric(data.a, kind));
    mc.max_samples = data.a.size() / 2;
    mc.block_size = cfg.block_size;
    const MaxSprtCalibration cal =
        calibrate_maxsprt_threshold(mc, cfg.alpha, cfg.calibration_trials, cfg.seed_calibration);
    mc.threshold = cal.threshold;
    const MaxSprtTest maxsprt(mc);

    std::vector<PowerPoint> pb, pm;
    std::vector<TrialResult> tb, tm;
    for (double off : offsets) {
        const auto rb = run_aa_trials(data.a, boot, cfg.trials, cfg.seed_split, off, cfg.threads);
        const auto rm = run_aa_trials(data.a, maxsprt, cfg.trials, cfg.seed_split, off, cfg.threads);
        pb.push_back({off, rejection_rate(rb), cfg.trials, avg_duration(rb)});
        pm.push_back({off, rejection_rate(rm), cfg.trials, avg_duration(rm)});
        tb.insert(tb.end(), rb.begin(), rb.end());
        tm.insert(tm.end(), rm.begin(), rm.end());
    }

    json meta = metadata("compare-maxsprt", cfg, kind, tau, data.source);
    meta["config"]["offsets"] = offsets;
    meta["config"]["calibration_trials"] = cfg.calibration_trials;
    meta["maxsprt"] = {{"p0", mc.p0},
                       {"threshold", cal.threshold},
                       {"simulated_type1", cal.type1},
                       {"max_samples_per_arm", mc.max_samples},
                       {"block_size", mc.block_size}};
    Outputs out(cfg.out);
    out.add("power_bootstrap.csv", power_csv(pb));
    out.add("power_maxsprt.csv", power_csv(pm));
    out.add("duration_bootstrap.csv", duration_csv(pb));
    out.add("duration_maxsprt.csv", duration_csv(pm));
    out.add("trials_bootstrap.csv", trials_csv(tb));
    out.add("trials_maxsprt.csv", trials_csv(tm));
    out.add("run_metadata.json", pretty(meta));
    out.commit();
    std::cout << "compare-maxsprt: threshold " << format_double(cal.threshold) << '\n';
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        std::cout << "offset " << format_double(offsets[i]) << ": bootstrap " << format_double(pb[i].rejection_rate)
                  << " / maxsprt " << format_double(pm[i].rejection_rate) << '\n';
    }
}

void log_error(const std::string& kind, const std::string& message, int code, const fs::path& out) {
    const json j = {{"level", "error"}, {"kind", kind}, {"exit_code", code}, {"message", message}};
    std::cerr << j.dump() << '\n';
    std::error_code ec;
    if (fs::is_directory(out, ec)) {
        std::ofstream log(out / "errors.jsonl", std::ios::app);
        log << j.dump() << '\n';
    }
}

}  // namespace

std::vector<double> parse_offsets(const std::string& text, double tau) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        if (item.size() > 3 && item.ends_with("tau")) {
            out.push_back(parse_real(item.substr(0, item.size() - 3), "offset") * tau);
        } else if (item == "tau") {
            out.push_back(tau);
        } else {
            out.push_back(parse_real(item, "offset"));
        }
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        std::size_t v = 0;
        const auto* end = item.data() + item.size();
        const auto [ptr, ec] = std::from_chars(item.data(), end, v);
        if (ec != std::errc() || ptr != end || v < 2) throw ConfigError("bad block size '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void run(const std::string& subcommand, const RunConfig& cfg) {
    if (subcommand == "synth") return run_synth(cfg);
    if (subcommand == "test") return run_test(cfg);
    if (subcommand == "aa") return run_aa(cfg);
    if (subcommand == "power") return run_power(cfg);
    if (subcommand == "blocksize") return run_blocksize(cfg);
    if (subcommand == "compare-maxsprt") return run_compare(cfg);
    throw ConfigError("unknown subcommand '" + subcommand + "'");
}

int main(int argc, char** argv) {
    CLI::App app{"Bootstrap mixture SPRT for sequential A/B tests", "bmsprt"};
    app.set_config("--config", "", "key=value file; command-line flags take precedence");
    app.require_subcommand(1, 1);

    RunConfig cfg;
    std::optional<std::string> model;
    std::optional<std::size_t> n_sessions;
    std::optional<std::string> offsets;
    std::optional<double> p0;
    std::optional<double> fraction;
    app.add_option("--metric", cfg.metric, "query_success_rate or mean_revenue")->capture_default_str();
    app.add_option("--stderr", cfg.stderr_method, "auto, delta, closed_form or jackknife")->capture_default_str();
    app.add_option("--block-size", cfg.block_size, "records per group per block")->capture_default_str();
    app.add_option("--alpha", cfg.alpha, "significance level")->capture_default_str();
    app.add_option("--tau", cfg.tau, "prior scale, a positive number or 'auto'")->capture_default_str();
    app.add_option("--tau-fraction", fraction, "auto tau as a fraction of the reference metric (0.03)");
    app.add_option("--prior-mean", cfg.prior_mean, "prior mean")->capture_default_str();
    app.add_option("--B", cfg.resamples, "bootstrap resamples per block")->capture_default_str();
    app.add_option("--M", cfg.prior_samples, "Monte Carlo prior draws")->capture_default_str();
    app.add_option("--bandwidth", cfg.bandwidth, "'silverman' or a fixed KDE bandwidth")->capture_default_str();
    app.add_option("--seed-data", cfg.seed_data)->capture_default_str();
    app.add_option("--seed-split", cfg.seed_split)->capture_default_str();
    app.add_option("--seed-bootstrap", cfg.seed_bootstrap)->capture_default_str();
    app.add_option("--seed-prior", cfg.seed_prior)->capture_default_str();
    app.add_option("--seed-calibration", cfg.seed_calibration)->capture_default_str();
    app.add_option("--input", cfg.input, "session CSV (ts,queries,successful_queries,revenue)");
    app.add_option("--input-b", cfg.input_b, "variation CSV for `test`; otherwise --input is split at random");
    app.add_option("--model", model, "synthetic model: correlated, revenue or bernoulli");
    app.add_option("--n", n_sessions, "synthetic sessions");
    app.add_option("--p", cfg.bernoulli_p, "Bernoulli success probability")->capture_default_str();
    app.add_option("--out", cfg.out, "output directory")->capture_default_str();
    app.add_option("--offsets", offsets, "comma list of offsets; '<k>tau' is a multiple of tau");
    app.add_option("--offset", cfg.offset, "offset added to the variation for `test`")->capture_default_str();
    app.add_option("--trials", cfg.trials, "A/A splits")->capture_default_str();
    app.add_option("--looks", cfg.looks, "z-test looks for the chasing-significance baseline")->capture_default_str();
    app.add_option("--block-sizes", cfg.block_sizes, "comma list for `blocksize`")->capture_default_str();
    app.add_option("--calibration-trials", cfg.calibration_trials, "null runs for the MaxSPRT threshold")
        ->capture_default_str();
    app.add_option("--p0", p0, "MaxSPRT null rate (default: rate on the data)");
    app.add_flag("--full-trajectory", cfg.full_trajectory, "keep updating after rejection in `test`");
    app.add_option("--threads", cfg.threads, "worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();

    const std::pair<const char*, const char*> subcommands[] = {
        {"test", "one sequential A/B run with a JSON-lines trajectory"},
        {"aa", "post A/A trials, Q-Q points and the chasing-significance baseline"},
        {"power", "rejection rate and duration over an offset grid"},
        {"blocksize", "post A/A sweep over block sizes"},
        {"synth", "write a synthetic session CSV"},
        {"compare-maxsprt", "bootstrap mixture SPRT vs a calibrated MaxSPRT on Bernoulli data"},
    };
    for (const auto& [name, help] : subcommands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        log_error("config_error", e.what(), kConfig, cfg.out);
        return kConfig;
    }
    cfg.model = model;
    cfg.n_sessions = n_sessions;
    cfg.offsets = offsets;
    cfg.p0 = p0;
    cfg.tau_fraction = fraction;

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        run(sub, cfg);
    } catch (const ConfigError& e) {
        log_error("config_error", e.what(), kConfig, cfg.out);
        return kConfig;
    } catch (const CalibrationFailed& e) {
        log_error("calibration_failed", e.what(), kConfig, cfg.out);
        return kConfig;
    } catch (const DataError& e) {
        log_error("data_error", e.what(), kData, cfg.out);
        return kData;
    } catch (const std::exception& e) {
        log_error("internal_error", e.what(), kInternal, cfg.out);
        return kInternal;
    }
    return kOk;
}

}  // namespace bmsprt::cli
