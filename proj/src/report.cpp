#include "vcdp/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vcdp/error.hpp"

namespace vcdp {

Json header(const std::string& schema_name) {
    Json j;
    j["schema"] = schema_name;
    j["version"] = kReportVersion;
    return j;
}

void check_header(const Json& doc, const std::string& schema_name) {
    if (!doc.is_object() || doc.value("schema", "") != schema_name || doc.value("version", -1) != kReportVersion) {
        throw Error(ErrorCode::kParse, "expected a '" + schema_name + "' document, version " +
                                           std::to_string(kReportVersion));
    }
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, ptr};
}

namespace {

Json vec_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json mat_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
    return rows;
}

Eigen::VectorXd vec_from(const Json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

Eigen::MatrixXd mat_from(const Json& rows, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != cols) {
            throw Error(ErrorCode::kParse, "matrix row " + std::to_string(r + 1) + " has the wrong width");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][c].get<double>();
    }
    return m;
}

Json doubles(const std::vector<double>& v) { return Json(v); }

Json spec_json(const CovariateSpec& s) {
    Json j;
    j["name"] = s.name;
    j["role"] = role_name(s.role);
    if (s.role == CovariateRole::kCalendar) {
        j["calendar"] = mat_json(s.calendar);
    } else {
        j["lo"] = vec_json(s.lo);
        j["hi"] = vec_json(s.hi);
    }
    return j;
}

CovariateSpec spec_from(const Json& j, int m) {
    CovariateSpec s;
    s.name = j.at("name").get<std::string>();
    s.role = parse_role(j.at("role").get<std::string>());
    if (s.role == CovariateRole::kCalendar) {
        s.calendar = mat_from(j.at("calendar"), m);
    } else {
        s.lo = vec_from(j.at("lo"));
        s.hi = vec_from(j.at("hi"));
    }
    return s;
}

template <class Fn>
auto parse_guard(Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("malformed JSON document: ") + e.what());
    }
}

}  // namespace

Json to_json(const GateResult& r) {
    Json j;
    j["gate"] = r.gate;
    j["decomposition"] = {{"direct", r.direct}, {"covariate", r.covariate}, {"interference", r.interference}};
    j["per_t"] = vec_json(r.per_t);
    return j;
}

Json to_json(const TestResult& r, bool include_boot) {
    Json j;
    j["statistic"] = functional_name(r.statistic);
    j["estimate"] = r.estimate;
    j["critical_value"] = r.critical_value;
    j["p_value"] = r.p_value;
    j["alpha"] = r.alpha;
    j["reject"] = r.reject;
    j["replicates"] = r.replicates;
    j["seed"] = r.seed;
    j["bandwidth"] = r.bandwidth;
    j["policy"] = policy_name(r.policy);
    j["f_identified"] = r.f_identified;
    j["single_multiplier"] = r.single_multiplier;
    j["pseudo_state_regressors"] = r.pseudo_state_regressors;
    if (r.decomposition) j["decomposition"] = to_json(*r.decomposition);
    if (include_boot) j["boot_stats"] = doubles(r.boot_stats);
    return j;
}

Json to_json(const BaselineResult& r) {
    Json j;
    j["method"] = method_name(r.method);
    j["estimate"] = r.estimate;
    j["p_value"] = r.p_value;
    Json d = Json::object();
    for (const auto& [k, v] : r.details) d[k] = v;
    j["details"] = d;
    return j;
}

Json to_json(const ScenarioConfig& c) {
    Json j;
    j["n"] = c.n;
    j["etas"] = doubles(c.etas);
    j["reps"] = c.reps;
    j["replicates"] = c.boot.replicates;
    j["alpha"] = c.boot.alpha;
    j["bandwidth"] = c.boot.fit.bandwidth > 0.0 ? Json(c.boot.fit.bandwidth) : Json("auto");
    j["kernel"] = c.boot.fit.kernel == KernelType::kGaussian ? "gaussian" : "truncated-gaussian";
    j["policy"] = policy_name(c.boot.policy);
    j["single_multiplier"] = c.boot.single_multiplier;
    j["pseudo_state_regressors"] = c.boot.pseudo_state_regressors;
    Json methods = Json::array();
    for (Method m : c.methods) methods.push_back(method_name(m));
    j["methods"] = methods;
    j["seed"] = c.seed;
    j["keep_boot"] = c.keep_boot;
    return j;
}

Json to_json(const ReplicationReport& report) {
    Json j = header("vcdp.replication_report");
    j["config"] = to_json(report.config);
    j["m"] = report.m;
    j["bandwidth"] = report.bandwidth;
    Json etas = Json::array();
    for (const auto& e : report.etas) {
        Json je;
        je["eta"] = e.eta;
        je["true_gate"] = e.true_gate;
        Json methods = Json::array();
        for (const auto& mr : e.methods) {
            Json jm;
            jm["method"] = method_name(mr.method);
            jm["rejection_rate"] = mr.rejection_rate();
            jm["p_values"] = doubles(mr.p_values);
            jm["estimates"] = doubles(mr.estimates);
            methods.push_back(jm);
        }
        je["methods"] = methods;
        Json boots = Json::array();
        for (const auto& b : e.boot_samples) boots.push_back(doubles(b));
        je["boot_samples"] = boots;
        etas.push_back(je);
    }
    j["etas"] = etas;
    return j;
}

Json to_json(const GroupCoefficients& c) {
    Json j;
    j["m"] = c.m;
    j["p"] = c.p;
    j["q"] = c.q;
    j["p_h"] = c.p_h;
    j["outcome"] = mat_json(c.outcome);
    j["state"] = mat_json(c.state);
    j["f_identified"] = c.f_identified;
    j["combined_exposure"] = c.combined_exposure;
    return j;
}

namespace {

GroupCoefficients coefficients_with_dims(const Json& j, int m, int p, int q, int p_h) {
    GroupCoefficients c(m, p, q, p_h);
    c.outcome = mat_from(j.at("outcome"), 1 + p + q);
    c.state = mat_from(j.at("state"), q * (2 + p_h + q));
    if (c.outcome.rows() != m || c.state.rows() != m - 1) {
        throw Error(ErrorCode::kParse, "coefficient paths do not have m rows");
    }
    c.f_identified = j.at("f_identified").get<bool>();
    c.combined_exposure = j.at("combined_exposure").get<double>();
    return c;
}

}  // namespace

GroupCoefficients coefficients_from_json(const Json& j) {
    return parse_guard([&] {
        return coefficients_with_dims(j, j.at("m").get<int>(), j.at("p").get<int>(), j.at("q").get<int>(),
                                      j.at("p_h").get<int>());
    });
}

Json to_json(const BaseModel& b) {
    Json j = header("vcdp.base_model");
    const auto& s = b.schema;
    j["schema_dims"] = {{"p", s.p}, {"q", s.q}, {"p_h", s.p_h}, {"m", s.m}, {"n0", s.n0}, {"n1", s.n1}};
    j["effect_mode"] = effect_mode_name(b.effect_mode);
    j["truth"] = to_json(b.truth);
    Json xs = Json::array(), xts = Json::array();
    for (const auto& sp : b.x_specs) xs.push_back(spec_json(sp));
    for (const auto& sp : b.xt_specs) xts.push_back(spec_json(sp));
    j["x_specs"] = xs;
    j["xt_specs"] = xts;
    Json pools;
    for (Group g : kGroups) {
        const int gi = index_of(g);
        pools[group_label(g)] = {{"eps", mat_json(b.pool_eps[gi])},
                                 {"state", mat_json(b.pool_state[gi])},
                                 {"s1", mat_json(b.pool_s1[gi])}};
    }
    j["pools"] = pools;
    return j;
}

BaseModel base_from_json(const Json& j) {
    check_header(j, "vcdp.base_model");
    return parse_guard([&] {
        BaseModel b;
        const auto& d = j.at("schema_dims");
        auto& s = b.schema;
        s.p = d.at("p").get<int>();
        s.q = d.at("q").get<int>();
        s.p_h = d.at("p_h").get<int>();
        s.m = d.at("m").get<int>();
        s.n0 = d.at("n0").get<std::int64_t>();
        s.n1 = d.at("n1").get<std::int64_t>();
        if (s.p < 0 || s.p_h < 0 || s.q < 1 || s.m < 2) throw Error(ErrorCode::kParse, "invalid base model dimensions");
        b.effect_mode = parse_effect_mode(j.at("effect_mode").get<std::string>());
        b.truth = coefficients_with_dims(j.at("truth"), s.m, s.p, s.q, s.p_h);
        for (const auto& x : j.at("x_specs")) b.x_specs.push_back(spec_from(x, s.m));
        for (const auto& x : j.at("xt_specs")) b.xt_specs.push_back(spec_from(x, s.m));
        for (Group g : kGroups) {
            const auto& p = j.at("pools").at(group_label(g));
            const int gi = index_of(g);
            b.pool_eps[gi] = mat_from(p.at("eps"), s.m);
            b.pool_state[gi] = mat_from(p.at("state"), (s.m - 1) * s.q);
            b.pool_s1[gi] = mat_from(p.at("s1"), s.q);
        }
        s.n = static_cast<int>(b.pool_eps[0].rows());
        b.validate();
        return b;
    });
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParse, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

void write_json(const Json& doc, const std::filesystem::path& path) { write_text(doc.dump(2) + "\n", path); }

void save_base(const BaseModel& base, const std::filesystem::path& path) {
    base.validate();
    write_json(to_json(base), path);
}

BaseModel load_base(const std::filesystem::path& path) { return base_from_json(read_json(path)); }

namespace {

class CsvWriter {
public:
    CsvWriter& field(const std::string& s) {
        sep();
        out_ += s;
        return *this;
    }
    CsvWriter& field(double v) { return field(format_number(v)); }
    CsvWriter& field(long long v) { return field(std::to_string(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }
    CsvWriter& empty() { return field(std::string()); }
    void end() {
        out_ += '\n';
        first_ = true;
    }
    std::string str() && { return std::move(out_); }

private:
    void sep() {
        if (!first_) out_ += ',';
        first_ = false;
    }
    std::string out_;
    bool first_ = true;
};

}  // namespace

std::string coefficients_csv(const CoefficientPaths& paths) {
    CsvWriter w;
    w.field("group").field("t").field("name").field("row").field("col").field("value");
    w.end();
    for (Group g : kGroups) {
        const auto& c = paths.group(g);
        const std::string label = group_label(g);
        auto put = [&](int t, const char* name, int row, int col, double v) {
            w.field(label).field(t + 1).field(name).field(row).field(col).field(v);
            w.end();
        };
        for (int t = 0; t < c.m; ++t) {
            put(t, "alpha0", 1, 1, c.alpha0(t));
            for (int j = 0; j < c.p; ++j) put(t, "alpha1", j + 1, 1, c.alpha1(t)(j));
            for (int j = 0; j < c.q; ++j) put(t, "alpha2", j + 1, 1, c.alpha2(t)(j));
        }
        for (int t = 0; t + 1 < c.m; ++t) {
            const auto g0 = c.gamma0(t), g1 = c.gamma1(t);
            const auto p0 = c.phi0(t), p1 = c.phi1(t);
            for (int nu = 0; nu < c.q; ++nu) put(t, "gamma0", nu + 1, 1, g0(nu));
            for (int nu = 0; nu < c.q; ++nu) put(t, "gamma1", nu + 1, 1, g1(nu));
            for (int nu = 0; nu < c.q; ++nu)
                for (int j = 0; j < c.p_h; ++j) put(t, "phi0", nu + 1, j + 1, p0(nu, j));
            for (int nu = 0; nu < c.q; ++nu)
                for (int j = 0; j < c.q; ++j) put(t, "phi1", nu + 1, j + 1, p1(nu, j));
        }
    }
    return std::move(w).str();
}

std::string residuals_csv(const ModelFit& fit) {
    const auto n = static_cast<int>(fit.eps[0].rows());
    const auto m = static_cast<int>(fit.eps[0].cols());
    const int q = m > 1 ? static_cast<int>(fit.state_resid[0].cols()) / (m - 1) : 0;
    CsvWriter w;
    w.field("day").field("t");
    for (Group g : kGroups) w.field("eps_" + group_label(g));
    for (Group g : kGroups)
        for (int nu = 0; nu < q; ++nu) w.field("E_" + group_label(g) + "_" + std::to_string(nu + 1));
    w.end();
    for (int d = 0; d < n; ++d) {
        for (int t = 0; t < m; ++t) {
            w.field(d + 1).field(t + 1);
            for (int gi = 0; gi < 2; ++gi) w.field(fit.eps[gi](d, t));
            for (int gi = 0; gi < 2; ++gi) {
                for (int nu = 0; nu < q; ++nu) {
                    // E(t) is the residual of the transition into interval t.
                    if (t == 0) {
                        w.empty();
                    } else {
                        w.field(fit.state_resid[gi](d, (t - 1) * q + nu));
                    }
                }
            }
            w.end();
        }
    }
    return std::move(w).str();
}

std::string fitted_csv(const Panel& panel, const ModelFit& fit) {
    const auto& s = panel.schema;
    CsvWriter w;
    w.field("day").field("t");
    for (Group g : kGroups) w.field("y_" + group_label(g)).field("fitted_" + group_label(g));
    w.end();
    for (int d = 0; d < s.n; ++d) {
        for (int t = 0; t < s.m; ++t) {
            w.field(d + 1).field(t + 1);
            for (Group g : kGroups) w.field(panel.group(g).y(d, t)).field(fit.fitted_y[index_of(g)](d, t));
            w.end();
        }
    }
    return std::move(w).str();
}

std::string boot_csv(const std::vector<double>& boot_stats) {
    CsvWriter w;
    w.field("b").field("t_b");
    w.end();
    for (std::size_t b = 0; b < boot_stats.size(); ++b) {
        w.field(static_cast<long long>(b + 1)).field(boot_stats[b]);
        w.end();
    }
    return std::move(w).str();
}

std::string runs_csv(const ReplicationReport& report) {
    CsvWriter w;
    for (const char* h : {"method", "eta", "rep", "p_value", "estimate", "reject"}) w.field(h);
    w.end();
    for (const auto& e : report.etas) {
        for (const auto& mr : e.methods) {
            for (std::size_t r = 0; r < mr.p_values.size(); ++r) {
                w.field(method_name(mr.method)).field(e.eta).field(static_cast<long long>(r + 1));
                w.field(mr.p_values[r]).field(mr.estimates[r]).field(static_cast<int>(mr.rejects[r]));
                w.end();
            }
        }
    }
    return std::move(w).str();
}

std::string boot_dump_csv(const ReplicationReport& report) {
    CsvWriter w;
    for (const char* h : {"eta", "rep", "b", "t_b"}) w.field(h);
    w.end();
    for (const auto& e : report.etas) {
        for (std::size_t r = 0; r < e.boot_samples.size(); ++r) {
            for (std::size_t b = 0; b < e.boot_samples[r].size(); ++b) {
                w.field(e.eta).field(static_cast<long long>(r + 1)).field(static_cast<long long>(b + 1));
                w.field(e.boot_samples[r][b]);
                w.end();
            }
        }
    }
    return std::move(w).str();
}

std::string power_csv(const ReplicationReport& report) {
    CsvWriter w;
    w.field("method");
    for (const auto& e : report.etas) w.field("eta=" + format_number(e.eta));
    w.end();
    w.field("true_gate");
    for (const auto& e : report.etas) w.field(e.true_gate);
    w.end();
    for (std::size_t k = 0; k < report.config.methods.size(); ++k) {
        w.field(method_name(report.config.methods[k]));
        for (const auto& e : report.etas) w.field(e.methods[k].rejection_rate());
        w.end();
    }
    return std::move(w).str();
}

std::string histogram_csv(const ReplicationReport& report, int bins) {
    CsvWriter w;
    for (const char* h : {"eta", "series", "bin", "lo", "hi", "density"}) w.field(h);
    w.end();
    std::size_t vcdp_index = report.config.methods.size();
    for (std::size_t k = 0; k < report.config.methods.size(); ++k)
        if (report.config.methods[k] == Method::kVcdp) vcdp_index = k;
    if (vcdp_index == report.config.methods.size() || bins < 1) return std::move(w).str();

    for (const auto& e : report.etas) {
        std::vector<double> centered = e.methods[vcdp_index].estimates;
        for (double& x : centered) x -= e.true_gate;
        std::vector<double> pooled;
        for (const auto& b : e.boot_samples) pooled.insert(pooled.end(), b.begin(), b.end());
        double lo = INFINITY, hi = -INFINITY;
        for (const auto* v : {&centered, &pooled}) {
            for (double x : *v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        }
        if (!(hi > lo)) hi = lo + 1.0;
        const double width = (hi - lo) / bins;
        auto emit = [&](const char* series, const std::vector<double>& v) {
            if (v.empty()) return;
            std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
            for (double x : v) {
                auto k = static_cast<long long>((x - lo) / width);
                k = std::clamp<long long>(k, 0, bins - 1);
                counts[static_cast<std::size_t>(k)] += 1.0;
            }
            for (int k = 0; k < bins; ++k) {
                w.field(e.eta).field(series).field(k + 1).field(lo + k * width).field(lo + (k + 1) * width);
                w.field(counts[static_cast<std::size_t>(k)] / (static_cast<double>(v.size()) * width));
                w.end();
            }
        };
        emit("estimate_error", centered);
        emit("bootstrap", pooled);
    }
    return std::move(w).str();
}

}  // namespace vcdp
