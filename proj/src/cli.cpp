#include "vcdp/cli.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "vcdp/baselines.hpp"
#include "vcdp/bootstrap.hpp"
#include "vcdp/error.hpp"
#include "vcdp/estimator.hpp"
#include "vcdp/gate.hpp"
#include "vcdp/panel.hpp"
#include "vcdp/parallel.hpp"
#include "vcdp/random.hpp"
#include "vcdp/report.hpp"
#include "vcdp/simulator.hpp"

namespace fs = std::filesystem;

namespace vcdp {
namespace {

// Files are rendered in memory first and only written once every one of
// them exists, so a failing command leaves no partial tables behind.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    void add_json(const std::string& name, const Json& doc) { add(name, doc.dump(2) + "\n"); }

    void commit(std::ostream& out) const {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + dir_.string() + "': " + ec.message());
        for (const auto& [name, content] : files_) write_text(content, dir_ / (name + ".tmp"));
        for (const auto& [name, content] : files_) {
            fs::rename(dir_ / (name + ".tmp"), dir_ / name, ec);
            if (ec) throw Error(ErrorCode::kIo, "cannot move '" + name + "' into place: " + ec.message());
        }
        out << "wrote " << files_.size() << " files to " << dir_.string() << "\n";
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

struct InputOptions {
    std::vector<std::string> group_sizes{"1:1"};
    bool no_shared_supply = false;
    bool gap = false;
    bool center = false;
};

struct FitFlags {
    std::string bandwidth = "auto";
    std::string kernel = "gaussian";
};

std::pair<std::int64_t, std::int64_t> parse_sizes(const std::string& text) {
    // N0:N1; a comma is accepted on the command line, where it is not a list separator.
    const auto comma = text.find_first_of(":,");
    try {
        if (comma == std::string::npos) throw std::invalid_argument(text);
        std::size_t used0 = 0, used1 = 0;
        const auto a = text.substr(0, comma), b = text.substr(comma + 1);
        const long long n0 = std::stoll(a, &used0), n1 = std::stoll(b, &used1);
        if (used0 != a.size() || used1 != b.size()) throw std::invalid_argument(text);
        if (n0 < 1 || n1 < 1) throw Error(ErrorCode::kNonPositiveSize, "group sizes must be positive: '" + text + "'");
        return {n0, n1};
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::kInvalidConfig, "group sizes must look like N0:N1: '" + text + "'");
    }
}

FitOptions parse_fit(const FitFlags& flags) {
    FitOptions f;
    if (flags.kernel == "gaussian") {
        f.kernel = KernelType::kGaussian;
    } else if (flags.kernel == "truncated-gaussian") {
        f.kernel = KernelType::kTruncatedGaussian;
    } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown kernel '" + flags.kernel + "'");
    }
    if (flags.bandwidth != "auto") {
        try {
            std::size_t used = 0;
            f.bandwidth = std::stod(flags.bandwidth, &used);
            if (used != flags.bandwidth.size()) throw std::invalid_argument(flags.bandwidth);
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::kInvalidBandwidth, "bandwidth must be 'auto' or a number: '" + flags.bandwidth + "'");
        }
        if (!(f.bandwidth > 0.0) || !std::isfinite(f.bandwidth)) {
            throw Error(ErrorCode::kInvalidBandwidth, "bandwidth must be positive");
        }
    }
    return f;
}

const char* kernel_label(KernelType k) { return k == KernelType::kGaussian ? "gaussian" : "truncated-gaussian"; }

Panel load_input(const std::string& path, std::pair<std::int64_t, std::int64_t> sizes, const InputOptions& opt) {
    const PanelSchema schema = infer_schema(path, sizes.first, sizes.second, !opt.no_shared_supply);
    Panel panel = load_panel(path, schema);
    if (opt.gap) panel = append_gap_covariate(panel);
    if (opt.center) panel = center_covariates(panel);
    return panel;
}

std::vector<Panel> load_inputs(const std::vector<std::string>& paths, const InputOptions& opt) {
    if (opt.group_sizes.size() != 1 && opt.group_sizes.size() != paths.size()) {
        throw Error(ErrorCode::kInvalidConfig, "give one --group-sizes for all panels or one per panel");
    }
    std::vector<Panel> panels;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto sizes = parse_sizes(opt.group_sizes[opt.group_sizes.size() == 1 ? 0 : i]);
        panels.push_back(load_input(paths[i], sizes, opt));
    }
    return panels;
}

Json input_meta(const Panel& panel, const InputOptions& opt) {
    const auto& s = panel.schema;
    return {{"city", panel.city},
            {"period", panel.period},
            {"n", s.n},
            {"m", s.m},
            {"p", s.p},
            {"q", s.q},
            {"p_h", s.p_h},
            {"n0", s.n0},
            {"n1", s.n1},
            {"shared_supply", s.shared_supply},
            {"gap_covariate", opt.gap},
            {"centered", opt.center}};
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& n : names) {
        const Method m = parse_method(n);
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw Error(ErrorCode::kInvalidConfig, "method '" + n + "' listed twice");
        }
        out.push_back(m);
    }
    if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no methods requested");
    return out;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
    if (!seed) throw Error(ErrorCode::kInvalidConfig, "a seed is required (--seed or 'seed' in the config file)");
    return *seed;
}

// ---- fit -------------------------------------------------------------------

struct FitCommand {
    std::string panel, out;
    InputOptions input;
    FitFlags fit;
};

void run_fit(const FitCommand& c, std::ostream& out) {
    const Panel panel = load_input(c.panel, parse_sizes(c.input.group_sizes.front()), c.input);
    const FitOptions opts = parse_fit(c.fit);
    const ModelFit fit = fit_model(panel, opts);
    double max_resid = 0.0;
    for (int g = 0; g < 2; ++g) {
        max_resid = std::max(max_resid, fit.eps[g].cwiseAbs().maxCoeff());
        if (fit.state_resid[g].size() > 0) max_resid = std::max(max_resid, fit.state_resid[g].cwiseAbs().maxCoeff());
    }
    Json meta = header("vcdp.fit_report");
    meta["input"] = input_meta(panel, c.input);
    meta["bandwidth"] = fit.bandwidth;
    meta["bandwidth_rule"] = opts.bandwidth > 0.0 ? "fixed" : "auto";
    meta["kernel"] = kernel_label(fit.kernel);
    meta["f_identified"] = fit.smoothed.groups[0].f_identified;
    meta["max_abs_residual"] = max_resid;
    meta["smoothed"] = {{"C0", to_json(fit.smoothed.groups[0])}, {"C1", to_json(fit.smoothed.groups[1])}};
    meta["raw"] = {{"C0", to_json(fit.raw.groups[0])}, {"C1", to_json(fit.raw.groups[1])}};

    Outputs files(c.out);
    files.add("coefficients.csv", coefficients_csv(fit.smoothed));
    files.add("residuals.csv", residuals_csv(fit));
    files.add("fitted.csv", fitted_csv(panel, fit));
    files.add_json("fit.json", meta);
    files.commit(out);
}

// ---- gate ------------------------------------------------------------------

struct GateCommand {
    std::string panel, out, policy = "experimental-exposure";
    InputOptions input;
    FitFlags fit;
};

void run_gate(const GateCommand& c, std::ostream& out) {
    const Panel panel = load_input(c.panel, parse_sizes(c.input.group_sizes.front()), c.input);
    const FitOptions opts = parse_fit(c.fit);
    const ExposurePolicy policy = parse_policy(c.policy);
    const ModelFit fit = fit_model(panel, opts);
    const GateResult g = gate_closed_form({fit.smoothed, plugin_means(panel)}, policy);
    Json doc = header("vcdp.gate_report");
    doc["input"] = input_meta(panel, c.input);
    doc["bandwidth"] = fit.bandwidth;
    doc["kernel"] = kernel_label(fit.kernel);
    doc["policy"] = policy_name(policy);
    doc["f_identified"] = fit.smoothed.groups[0].f_identified;
    doc["result"] = to_json(g);
    doc["naive_tau"] = naive_tau(fit.smoothed, group_means(panel));
    Outputs files(c.out);
    files.add_json("gate.json", doc);
    files.commit(out);
}

// ---- test ------------------------------------------------------------------

struct TestCommand {
    std::vector<std::string> panels, pre_panels;
    std::string out, policy = "experimental-exposure";
    std::vector<std::string> methods{"vcdp", "ttest", "did", "de"};
    int replicates = 200;
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    bool single_multiplier = false;
    bool pseudo_state_regressors = false;
    bool boot_dump = false;
    InputOptions input;
    FitFlags fit;
};

struct MethodCell {
    double estimate = 0.0;
    double p_value = 1.0;
    bool reject = false;
    Json detail;
};

void run_test(const TestCommand& c, std::ostream& out) {
    const std::vector<Method> methods = parse_methods(c.methods);
    const std::uint64_t seed = require_seed(c.seed);
    BootstrapConfig boot;
    boot.replicates = c.replicates;
    boot.alpha = c.alpha;
    boot.fit = parse_fit(c.fit);
    boot.seed = seed;
    boot.policy = parse_policy(c.policy);
    boot.single_multiplier = c.single_multiplier;
    boot.pseudo_state_regressors = c.pseudo_state_regressors;
    boot.workers = resolve_workers(c.workers);
    boot.validate();

    const std::vector<Panel> panels = load_inputs(c.panels, c.input);
    const bool want_did = std::find(methods.begin(), methods.end(), Method::kDid) != methods.end();
    std::vector<Panel> pres;
    if (want_did) {
        if (c.pre_panels.size() != panels.size()) {
            throw Error(ErrorCode::kMissingPrePeriod, "DiD needs one --pre-panel per --panel");
        }
        pres = load_inputs(c.pre_panels, c.input);
    }

    std::vector<std::string> labels;
    for (std::size_t r = 0; r < panels.size(); ++r) {
        std::string label = panels[r].city;
        if (std::count_if(panels.begin(), panels.end(), [&](const Panel& p) { return p.city == label; }) > 1) {
            label += "#" + std::to_string(r + 1);
        }
        labels.push_back(label);
    }
    if (std::find(labels.begin(), labels.end(), "all") != labels.end()) {
        throw Error(ErrorCode::kInvalidConfig, "'all' is reserved for the combined column");
    }

    std::vector<Functional> functionals;
    for (Method m : methods) {
        if (m == Method::kVcdp) functionals.push_back(Functional::kGate);
        if (m == Method::kDe) functionals.push_back(Functional::kNaiveTau);
    }
    auto functional_of = [](Method m) { return m == Method::kVcdp ? Functional::kGate : Functional::kNaiveTau; };

    std::vector<std::int64_t> sizes;
    std::vector<std::map<Functional, TestResult>> boot_results(panels.size());
    std::vector<std::map<Method, MethodCell>> cells(panels.size());
    Json cities = Json::array();
    Outputs files(c.out);
    for (std::size_t r = 0; r < panels.size(); ++r) {
        const Panel& panel = panels[r];
        sizes.push_back(panel.schema.total_size());
        if (!functionals.empty()) {
            const auto results = bootstrap_functionals(panel, boot, functionals);
            for (std::size_t k = 0; k < functionals.size(); ++k) boot_results[r][functionals[k]] = results[k];
        }
        Json city;
        city["city"] = labels[r];
        city["input"] = input_meta(panel, c.input);
        Json res = Json::object();
        for (Method m : methods) {
            MethodCell cell;
            if (m == Method::kVcdp || m == Method::kDe) {
                const TestResult& t = boot_results[r].at(functional_of(m));
                cell = {t.estimate, t.p_value, t.reject, to_json(t)};
                if (c.boot_dump) files.add("boot_" + std::string(method_name(m)) + "_" + labels[r] + ".csv", boot_csv(t.boot_stats));
            } else {
                const BaselineResult b = m == Method::kTTest ? t_test(panel) : did(pres[r], panel);
                cell = {b.estimate, b.p_value, b.p_value < boot.alpha, to_json(b)};
            }
            cells[r][m] = cell;
            res[method_name(m)] = cell.detail;
        }
        city["results"] = res;
        cities.push_back(city);
    }

    // Combined column: bootstrap tests combine replicate by replicate, the
    // day-level baselines run on size-weighted day totals.
    std::map<Method, MethodCell> all;
    for (Method m : methods) {
        MethodCell cell;
        if (m == Method::kVcdp || m == Method::kDe) {
            std::vector<TestResult> per_city;
            for (const auto& br : boot_results) per_city.push_back(br.at(functional_of(m)));
            const TestResult t = combine_cities(per_city, sizes);
            cell = {t.estimate, t.p_value, t.reject, to_json(t)};
        } else if (panels.size() == 1) {
            cell = cells[0][m];
        } else if (m == Method::kTTest) {
            const BaselineResult b = t_test_totals(weighted_daily_totals(panels, Group::kTreated),
                                                   weighted_daily_totals(panels, Group::kControl));
            cell = {b.estimate, b.p_value, b.p_value < boot.alpha, to_json(b)};
        } else {
            const BaselineResult b = did_totals(
                weighted_daily_totals(pres, Group::kTreated), weighted_daily_totals(pres, Group::kControl),
                weighted_daily_totals(panels, Group::kTreated), weighted_daily_totals(panels, Group::kControl));
            cell = {b.estimate, b.p_value, b.p_value < boot.alpha, to_json(b)};
        }
        all[m] = cell;
    }

    Json doc = header("vcdp.test_report");
    doc["config"] = {{"methods", c.methods},
                     {"replicates", boot.replicates},
                     {"alpha", boot.alpha},
                     {"seed", seed},
                     {"bandwidth_rule", boot.fit.bandwidth > 0.0 ? "fixed" : "auto"},
                     {"kernel", kernel_label(boot.fit.kernel)},
                     {"policy", policy_name(boot.policy)},
                     {"single_multiplier", boot.single_multiplier},
                     {"pseudo_state_regressors", boot.pseudo_state_regressors},
                     {"gap_covariate", c.input.gap},
                     {"centered", c.input.center}};
    doc["cities"] = cities;
    Json agg;
    agg["sizes"] = sizes;
    Json agg_res = Json::object();
    for (Method m : methods) agg_res[method_name(m)] = all[m].detail;
    agg["results"] = agg_res;
    doc["all"] = agg;

    auto table = [&](bool p_values) {
        std::string s = "method";
        for (const auto& l : labels) s += "," + l;
        s += ",all\n";
        for (Method m : methods) {
            s += method_name(m);
            for (std::size_t r = 0; r < panels.size(); ++r) {
                s += "," + format_number(p_values ? cells[r][m].p_value : cells[r][m].estimate);
            }
            s += "," + format_number(p_values ? all[m].p_value : all[m].estimate) + "\n";
        }
        return s;
    };
    files.add_json("test.json", doc);
    files.add("pvalues.csv", table(true));
    files.add("estimates.csv", table(false));
    files.commit(out);
}

// ---- simulate / power ---------------------------------------------------------

struct SimCommand {
    std::string base, out, policy = "experimental-exposure";
    int n = 14;
    std::vector<double> etas{0.0, 3.0, 6.0, 9.0, 12.0};
    int reps = 500;
    int replicates = 200;
    double alpha = 0.05;
    std::vector<std::string> methods{"vcdp", "ttest", "did", "de"};
    std::optional<std::uint64_t> seed;
    int keep_boot = 5;
    int bins = 40;
    int workers = 0;
    bool single_multiplier = false;
    FitFlags fit;
};

void run_simulate(const SimCommand& c, bool power, std::ostream& out, std::ostream& err) {
    ScenarioConfig cfg;
    cfg.n = c.n;
    cfg.etas = c.etas;
    cfg.reps = c.reps;
    cfg.boot.replicates = c.replicates;
    cfg.boot.alpha = c.alpha;
    cfg.boot.fit = parse_fit(c.fit);
    cfg.boot.policy = parse_policy(c.policy);
    cfg.boot.single_multiplier = c.single_multiplier;
    cfg.methods = parse_methods(c.methods);
    cfg.seed = require_seed(c.seed);
    cfg.keep_boot = c.keep_boot;
    cfg.workers = resolve_workers(c.workers);
    const BaseModel base = load_base(c.base);

    const auto start = std::chrono::steady_clock::now();
    const ReplicationReport report = replicate(base, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // Wall-clock time depends on the machine, so it stays out of the files.
    err << "replicate: " << cfg.reps << " reps x " << cfg.etas.size() << " eta values in " << seconds << " s ("
        << seconds / static_cast<double>(cfg.reps * cfg.etas.size()) << " s per replication, " << cfg.workers
        << " workers)\n";

    Outputs files(c.out);
    files.add_json("report.json", to_json(report));
    files.add("runs.csv", runs_csv(report));
    files.add("boot.csv", boot_dump_csv(report));
    files.add("histogram.csv", histogram_csv(report, c.bins));
    if (power) files.add("power.csv", power_csv(report));
    files.commit(out);
}

// ---- synth-base ------------------------------------------------------------

struct SynthCommand {
    SynthConfig config;
    std::string effect_mode = "excess";
    std::string out;
    std::string from_panel;
    std::string group_sizes = "5000:5000";
    std::optional<std::uint64_t> seed;
    int sample_days = 0;
    double sample_eta = 0.0;
    FitFlags fit;
};

void run_synth(SynthCommand c, std::ostream& out) {
    const std::uint64_t seed = require_seed(c.seed);
    c.config.effect_mode = parse_effect_mode(c.effect_mode);
    BaseModel base;
    Json meta = header("vcdp.synth_meta");
    if (!c.from_panel.empty()) {
        const auto sizes = parse_sizes(c.group_sizes);
        const Panel panel = load_panel(c.from_panel, infer_schema(c.from_panel, sizes.first, sizes.second, true));
        FitBaseOptions fo;
        fo.fit = parse_fit(c.fit);
        fo.effect_mode = c.config.effect_mode;
        base = fit_base(panel, fo);
        meta["source"] = "fit_base";
        meta["panel"] = c.from_panel;
    } else {
        base = synth_base(c.config, seed);
        const auto& s = c.config;
        meta["source"] = "synth_base";
        meta["config"] = {{"m", s.m},
                          {"pool_days", s.pool_days},
                          {"n0", s.n0},
                          {"n1", s.n1},
                          {"outcome_sd", s.outcome_sd},
                          {"outcome_ar", s.outcome_ar},
                          {"day_sd", s.day_sd},
                          {"state_sd", s.state_sd},
                          {"state_day_sd", s.state_day_sd},
                          {"initial_sd", s.initial_sd},
                          {"noise_scale", s.noise_scale},
                          {"unit_gate", s.unit_gate},
                          {"path_variation", s.path_variation},
                          {"holiday_period", s.holiday_period},
                          {"effect_mode", effect_mode_name(s.effect_mode)}};
    }
    meta["seed"] = seed;
    meta["true_gate_per_unit_eta"] = true_gate(base, base.null_eta() + 1.0) - true_gate(base, base.null_eta());

    Outputs files(c.out);
    files.add_json("base.json", to_json(base));
    if (c.sample_days > 0) {
        // Sample panels: the experiment at sample_eta and an untreated pre-period.
        Panel exp = simulate(base, c.sample_days, c.sample_eta, derive_seed(seed, 101));
        exp.city = "synthetic";
        Panel pre = simulate(base, c.sample_days, base.null_eta(), derive_seed(seed, 102));
        pre.city = "synthetic";
        pre.period = "pre";
        files.add("panel.csv", panel_csv(exp));
        files.add("pre_panel.csv", panel_csv(pre));
        meta["sample"] = {{"days", c.sample_days}, {"eta", c.sample_eta}, {"true_gate", true_gate(base, c.sample_eta)}};
    }
    files.add_json("synth.json", meta);
    files.commit(out);
}

// ---- wiring ----------------------------------------------------------------

void add_input_options(CLI::App* cmd, InputOptions& in, bool multi) {
    cmd->add_option("--group-sizes", in.group_sizes,
                    multi ? "N0:N1 for all panels, or one per panel in order" : "N0:N1")
        ->capture_default_str();
    cmd->add_flag("--no-shared-supply", in.no_shared_supply, "do not require supply to agree across groups");
    cmd->add_flag("--gap", in.gap, "append max(demand - supply, 0) as the last outcome covariate");
    cmd->add_flag("--center", in.center, "center covariates on their all-subject means");
}

void add_fit_options(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--bandwidth", f.bandwidth, "kernel bandwidth or 'auto' (min(0.1, n^-0.3))")
        ->capture_default_str();
    cmd->add_option("--kernel", f.kernel, "gaussian | truncated-gaussian")->capture_default_str();
}

void emit_error(std::ostream& err, std::string_view code, const std::string& message) {
    Json e;
    e["error"] = {{"code", code}, {"message", message}};
    err << e.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Treatment-effect testing for two-sided market experiments with varying coefficient models", "vcdp"};
    app.set_config("--config", "", "INI file; [fit], [gate], [test], [simulate], [power], [synth-base] sections");
    app.require_subcommand(1);
    app.set_version_flag("--version", "vcdp 1.0");

    FitCommand fit_c;
    auto* fit = app.add_subcommand("fit", "fit the model; write coefficient paths, residuals and fitted values");
    fit->add_option("--panel", fit_c.panel, "panel CSV")->required();
    fit->add_option("--out,-o", fit_c.out, "output directory")->required();
    add_input_options(fit, fit_c.input, false);
    add_fit_options(fit, fit_c.fit);

    GateCommand gate_c;
    auto* gate = app.add_subcommand("gate", "closed-form GATE estimate with its decomposition");
    gate->add_option("--panel", gate_c.panel, "panel CSV")->required();
    gate->add_option("--out,-o", gate_c.out, "output directory")->required();
    gate->add_option("--policy", gate_c.policy, "experimental-exposure | strict")->capture_default_str();
    add_input_options(gate, gate_c.input, false);
    add_fit_options(gate, gate_c.fit);

    TestCommand test_c;
    auto* test = app.add_subcommand("test", "bootstrap test and baselines per city plus the combined column");
    test->add_option("--panel", test_c.panels, "experiment panel CSV, repeat per city")->required();
    test->add_option("--pre-panel", test_c.pre_panels, "pre-period panel CSV per city (DiD)");
    test->add_option("--out,-o", test_c.out, "output directory")->required();
    test->add_option("--methods", test_c.methods, "vcdp,ttest,did,de")->delimiter(',')->capture_default_str();
    test->add_option("--replicates,-B", test_c.replicates, "bootstrap replicates")->capture_default_str();
    test->add_option("--alpha", test_c.alpha, "significance level")->capture_default_str();
    test->add_option("--seed", test_c.seed, "random seed (required)");
    test->add_option("--workers", test_c.workers, "threads; 0 reads VCDP_WORKERS, default 1");
    test->add_option("--policy", test_c.policy, "experimental-exposure | strict")->capture_default_str();
    test->add_flag("--single-multiplier", test_c.single_multiplier, "one multiplier per day for all equations");
    test->add_flag("--pseudo-state-regressors", test_c.pseudo_state_regressors,
                   "re-estimate with pseudo states as regressors");
    test->add_flag("--boot-dump", test_c.boot_dump, "write the bootstrap statistics of each city");
    add_input_options(test, test_c.input, true);
    add_fit_options(test, test_c.fit);

    SimCommand sim_c;
    auto add_sim = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--base", sim_c.base, "base model JSON")->required();
        cmd->add_option("--out,-o", sim_c.out, "output directory")->required();
        cmd->add_option("--n", sim_c.n, "days per simulated experiment")->capture_default_str();
        cmd->add_option("--etas", sim_c.etas, "effect sizes")->delimiter(',')->capture_default_str();
        cmd->add_option("--reps", sim_c.reps, "replications per eta")->capture_default_str();
        cmd->add_option("--replicates,-B", sim_c.replicates, "bootstrap replicates")->capture_default_str();
        cmd->add_option("--alpha", sim_c.alpha, "significance level")->capture_default_str();
        cmd->add_option("--methods", sim_c.methods, "vcdp,ttest,did,de")->delimiter(',')->capture_default_str();
        cmd->add_option("--seed", sim_c.seed, "random seed (required)");
        cmd->add_option("--keep-boot", sim_c.keep_boot, "replications per eta whose T^b are kept")
            ->capture_default_str();
        cmd->add_option("--bins", sim_c.bins, "histogram bins")->capture_default_str();
        cmd->add_option("--workers", sim_c.workers, "threads; 0 reads VCDP_WORKERS, default 1");
        cmd->add_option("--policy", sim_c.policy, "experimental-exposure | strict")->capture_default_str();
        cmd->add_flag("--single-multiplier", sim_c.single_multiplier, "one multiplier per day for all equations");
        add_fit_options(cmd, sim_c.fit);
        return cmd;
    };
    auto* simulate_cmd = add_sim("simulate", "replicate simulated experiments; write report and plot data");
    auto* power_cmd = add_sim("power", "as simulate, plus the method x eta rejection-rate matrix");

    SynthCommand syn_c;
    auto* synth = app.add_subcommand("synth-base", "build a base model (synthetic or fitted to an A/A panel)");
    synth->add_option("--out,-o", syn_c.out, "output directory")->required();
    synth->add_option("--seed", syn_c.seed, "random seed (required)");
    synth->add_option("--from-panel", syn_c.from_panel, "fit the base to this A/A panel instead");
    synth->add_option("--group-sizes", syn_c.group_sizes, "N0:N1 of --from-panel")->capture_default_str();
    auto& sc = syn_c.config;
    synth->add_option("--m", sc.m, "intervals per day")->capture_default_str();
    synth->add_option("--pool-days", sc.pool_days, "residual pool size")->capture_default_str();
    synth->add_option("--n0", sc.n0, "control group size")->capture_default_str();
    synth->add_option("--n1", sc.n1, "treated group size")->capture_default_str();
    synth->add_option("--outcome-sd", sc.outcome_sd)->capture_default_str();
    synth->add_option("--outcome-ar", sc.outcome_ar)->capture_default_str();
    synth->add_option("--day-sd", sc.day_sd)->capture_default_str();
    synth->add_option("--state-sd", sc.state_sd)->capture_default_str();
    synth->add_option("--state-day-sd", sc.state_day_sd)->capture_default_str();
    synth->add_option("--initial-sd", sc.initial_sd)->capture_default_str();
    synth->add_option("--noise-scale", sc.noise_scale, "multiplies every noise source")->capture_default_str();
    synth->add_option("--unit-gate", sc.unit_gate, "GATE per unit eta")->capture_default_str();
    synth->add_option("--path-variation", sc.path_variation)->capture_default_str();
    synth->add_option("--holiday-period", sc.holiday_period)->capture_default_str();
    synth->add_option("--effect-mode", syn_c.effect_mode, "excess | literal")->capture_default_str();
    synth->add_option("--sample-days", syn_c.sample_days, "also write sample experiment and pre-period panels");
    synth->add_option("--sample-eta", syn_c.sample_eta, "effect size of the sample experiment")->capture_default_str();
    add_fit_options(synth, syn_c.fit);

    std::vector<std::string> argv_store = args;
    if (argv_store.empty()) argv_store.push_back("vcdp");
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        emit_error(err, "InvalidConfig", e.what());
        return 1;
    }

    try {
        if (*fit) run_fit(fit_c, out);
        if (*gate) run_gate(gate_c, out);
        if (*test) run_test(test_c, out);
        if (*simulate_cmd) run_simulate(sim_c, false, out, err);
        if (*power_cmd) run_simulate(sim_c, true, out, err);
        if (*synth) run_synth(syn_c, out);
    } catch (const Error& e) {
        emit_error(err, error_code_name(e.code()), e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error(err, "Internal", e.what());
        return 1;
    }
    return 0;
}

}  // namespace vcdp
