#include "lylab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lylab/experiments.hpp"

namespace lylab {

using nlohmann::json;

namespace {

constexpr const char* kFormatVersion = "1";
constexpr const char* kLibVersion = "1.0.0";

const std::vector<std::string> kExperiments = {
    "flow-spectrum",   "section-sample", "bunching", "splitting-check", "relation-check",
    "suspension-check", "simplicity-scan", "openness-probe", "birkhoff"};

using Diags = std::vector<std::string>;

void check_keys(const json& j, const std::string& path, const std::vector<std::string>& allowed,
                Diags& diags) {
    if (!j.is_object()) {
        diags.push_back(path + ": expected an object");
        return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            diags.push_back(path + ": unknown key \"" + it.key() + "\"");
    }
}

double require_positive(const json& j, const std::string& path, const std::string& key,
                        double dflt, Diags& diags) {
    double v = dflt;
    if (j.contains(key)) {
        if (!j.at(key).is_number()) {
            diags.push_back(path + "." + key + ": must be a number");
            return dflt;
        }
        v = j.at(key).get<double>();
    }
    if (!(v > 0.0)) diags.push_back(path + "." + key + ": must be positive");
    return v;
}

bool get_vec(const json& j, const std::string& path, const std::string& key, int n, VecX& out,
             Diags& diags) {
    if (!j.contains(key)) return false;
    const json& a = j.at(key);
    if (!a.is_array() || static_cast<int>(a.size()) != n) {
        diags.push_back(path + "." + key + ": must be an array of " + std::to_string(n) +
                        " numbers");
        return false;
    }
    out.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!a.at(i).is_number()) {
            diags.push_back(path + "." + key + ": must be an array of numbers");
            return false;
        }
        out[i] = a.at(i).get<double>();
    }
    return true;
}

VectorFieldSpec parse_flow(const json& cfg, Diags& diags, json& resolved) {
    VectorFieldSpec spec = VectorFieldSpec::lorenz();
    const std::string path = "flow";
    if (cfg.contains("flow")) {
        const json& f = cfg.at("flow");
        check_keys(f, path, {"kind", "sigma", "r", "b", "alpha_ss", "alpha_s", "alpha_u"}, diags);
        const std::string kind = f.is_object() ? f.value("kind", "lorenz") : "lorenz";
        if (kind == "lorenz") {
            spec = VectorFieldSpec::lorenz(f.value("sigma", 10.0), f.value("r", 28.0),
                                           f.value("b", 8.0 / 3.0));
        } else if (kind == "linear-singularity") {
            spec = VectorFieldSpec::linear_singularity(
                f.value("alpha_ss", -3.0), f.value("alpha_s", -1.0), f.value("alpha_u", 2.0));
            if (!(spec.alpha_ss < 0.0)) diags.push_back(path + ".alpha_ss: must be negative");
            if (!(spec.alpha_s < 0.0)) diags.push_back(path + ".alpha_s: must be negative");
            if (!(spec.alpha_u > 0.0)) diags.push_back(path + ".alpha_u: must be positive");
        } else {
            diags.push_back(path + ".kind: unknown vector field kind \"" + kind + "\"");
        }
    }
    json r;
    if (spec.kind == VectorFieldSpec::Kind::Lorenz) {
        r["kind"] = "lorenz";
        r["sigma"] = spec.sigma;
        r["r"] = spec.r;
        r["b"] = spec.b;
    } else {
        r["kind"] = "linear-singularity";
        r["alpha_ss"] = spec.alpha_ss;
        r["alpha_s"] = spec.alpha_s;
        r["alpha_u"] = spec.alpha_u;
    }
    resolved["flow"] = r;
    return spec;
}

IntegratorConfig parse_integrator(const json& cfg, Diags& diags, json& resolved) {
    IntegratorConfig ic;
    const std::string path = "integrator";
    if (cfg.contains("integrator")) {
        const json& f = cfg.at("integrator");
        check_keys(f, path, {"method", "abs_tol", "rel_tol", "max_step", "max_time", "fixed_dt"},
                   diags);
        if (f.is_object()) {
            const std::string method = f.value("method", "rk54");
            if (method == "rk54")
                ic.method = IntegratorConfig::Method::AdaptiveRK54;
            else if (method == "rk4")
                ic.method = IntegratorConfig::Method::FixedRK4;
            else
                diags.push_back(path + ".method: must be \"rk54\" or \"rk4\"");
            ic.abs_tol = require_positive(f, path, "abs_tol", ic.abs_tol, diags);
            ic.rel_tol = require_positive(f, path, "rel_tol", ic.rel_tol, diags);
            ic.max_step = require_positive(f, path, "max_step", ic.max_step, diags);
            ic.max_time = require_positive(f, path, "max_time", ic.max_time, diags);
            ic.fixed_dt = require_positive(f, path, "fixed_dt", ic.fixed_dt, diags);
        }
    }
    json r;
    r["method"] = ic.method == IntegratorConfig::Method::AdaptiveRK54 ? "rk54" : "rk4";
    r["abs_tol"] = ic.abs_tol;
    r["rel_tol"] = ic.rel_tol;
    r["max_step"] = ic.max_step;
    r["max_time"] = ic.max_time;
    r["fixed_dt"] = ic.fixed_dt;
    resolved["integrator"] = r;
    return ic;
}

CocycleGenerator parse_generator(const json& cfg, Diags& diags, json& resolved) {
    CocycleGenerator gen = CocycleGenerator::zero(2);
    if (cfg.contains("generator")) {
        const json& g = cfg.at("generator");
        check_keys(g, "generator", {"kind", "dim", "scalars", "traceless", "C0", "modes", "random"},
                   diags);
        try {
            if (g.is_object() && g.contains("random")) {
                const json& r = g.at("random");
                check_keys(r, "generator.random", {"dim", "n_modes", "seed", "amplitude",
                                                   "traceless"}, diags);
                gen = CocycleGenerator::random_trig(
                    r.value("dim", 2), r.value("n_modes", 3), r.value("seed", 1ULL),
                    r.value("amplitude", 1.0), r.value("traceless", false));
            } else {
                gen = CocycleGenerator::from_json(g);
            }
        } catch (const std::exception& e) {
            diags.push_back(std::string("generator: ") + e.what());
        }
    }
    resolved["generator"] = gen.to_json();
    return gen;
}

CrossSection parse_section(const json& cfg, const VectorFieldSpec& flow, Diags& diags,
                           json& resolved) {
    const std::string path = "section";
    json r;
    if (!cfg.contains("section")) {
        r["preset"] = "lorenz-classic";
        resolved["section"] = r;
        if (flow.kind == VectorFieldSpec::Kind::Lorenz) return CrossSection::lorenz_classic(flow);
        return CrossSection{};
    }
    const json& s = cfg.at("section");
    check_keys(s, path,
               {"preset", "base", "normal", "u1", "bounds", "direction", "gamma_center",
                "gamma_band_halfwidth"},
               diags);
    if (s.is_object() && s.contains("preset")) {
        const std::string preset = s.at("preset").get<std::string>();
        if (preset != "lorenz-classic") diags.push_back(path + ".preset: unknown preset");
        r["preset"] = preset;
        resolved["section"] = r;
        return flow.kind == VectorFieldSpec::Kind::Lorenz ? CrossSection::lorenz_classic(flow)
                                                          : CrossSection{};
    }
    VecX base(3), normal(3), u1(3), bounds(4);
    base << 0, 0, 27;
    normal << 0, 0, 1;
    u1 << 1, 0, 0;
    bounds << -20, 20, -25, 25;
    get_vec(s, path, "base", 3, base, diags);
    get_vec(s, path, "normal", 3, normal, diags);
    get_vec(s, path, "u1", 3, u1, diags);
    get_vec(s, path, "bounds", 4, bounds, diags);
    const int direction = s.value("direction", -1);
    if (direction < -1 || direction > 1) diags.push_back(path + ".direction: must be -1, 0 or 1");
    const double gamma_center = s.value("gamma_center", 0.0);
    const double gamma_hw = s.value("gamma_band_halfwidth", 1e-4);
    if (!(gamma_hw > 0.0)) diags.push_back(path + ".gamma_band_halfwidth: must be positive");

    r["base"] = {base[0], base[1], base[2]};
    r["normal"] = {normal[0], normal[1], normal[2]};
    r["u1"] = {u1[0], u1[1], u1[2]};
    r["bounds"] = {bounds[0], bounds[1], bounds[2], bounds[3]};
    r["direction"] = direction;
    r["gamma_center"] = gamma_center;
    r["gamma_band_halfwidth"] = gamma_hw;
    resolved["section"] = r;

    if (!diags.empty()) return CrossSection{};
    try {
        return CrossSection::make(flow, Vec3(base), Vec3(normal), Vec3(u1),
                                  SectionBounds{bounds[0], bounds[1], bounds[2], bounds[3]},
                                  direction, gamma_center, gamma_hw);
    } catch (const std::exception& e) {
        diags.push_back(path + ": " + e.what());
        return CrossSection{};
    }
}

struct ParamSpec {
    std::vector<std::string> allowed;
};

const std::vector<std::string>& allowed_params(const std::string& experiment) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"flow-spectrum", {"x0", "T", "renorm_dt", "transient", "gap_floor"}},
        {"section-sample", {"x0", "n_returns", "tau_min", "tau_max"}},
        {"bunching", {"theta", "eta", "t_grid", "n_points", "n_returns", "x0_section"}},
        {"splitting-check",
         {"x0", "T_forward", "T_backward", "n_samples", "sample_spacing", "t_grid", "theta"}},
        {"relation-check",
         {"x0_section", "n_returns", "T", "renorm_dt", "transient", "tau_min", "tau_max"}},
        {"suspension-check", {"x0_section", "n_returns", "tau_min", "tau_max"}},
        {"simplicity-scan",
         {"epsilon_grid", "n_seeds", "gap_floor", "T", "renorm_dt", "transient", "x0", "theta",
          "eta", "experiment_id"}},
        {"openness-probe",
         {"delta_grid", "n_seeds", "gap_floor", "T", "renorm_dt", "transient", "x0",
          "experiment_id"}},
        {"birkhoff", {"observables", "x0_list", "T", "transient"}},
    };
    static const std::vector<std::string> empty;
    const auto it = table.find(experiment);
    return it == table.end() ? empty : it->second;
}

void validate_params(const std::string& experiment, const json& params, Diags& diags) {
    const std::string path = "params";
    check_keys(params, path, allowed_params(experiment), diags);
    if (!params.is_object()) return;

    auto check_theta = [&](const char* key) {
        if (params.contains(key)) {
            const double th = params.at(key).get<double>();
            if (!(th > 0.0 && th < 1.0))
                diags.push_back(std::string(path) + "." + key + ": theta must lie in (0,1)");
        }
    };
    auto check_grid_ascending = [&](const char* key) {
        if (!params.contains(key)) return;
        const json& g = params.at(key);
        if (!g.is_array() || g.empty()) {
            diags.push_back(std::string(path) + "." + key + ": must be a non-empty array");
            return;
        }
        double prev = -std::numeric_limits<double>::infinity();
        for (const auto& v : g) {
            const double x = v.get<double>();
            if (x < 0.0) diags.push_back(std::string(path) + "." + key + ": must be non-negative");
            if (x < prev)
                diags.push_back(std::string(path) + "." + key + ": must be ascending");
            prev = x;
        }
    };

    check_theta("theta");
    check_grid_ascending("epsilon_grid");
    check_grid_ascending("delta_grid");
    if (params.contains("n_seeds") && params.at("n_seeds").get<int>() < 1)
        diags.push_back(path + std::string(".n_seeds: must be >= 1"));
    if (params.contains("n_returns") && params.at("n_returns").get<int>() < 1)
        diags.push_back(path + std::string(".n_returns: must be >= 1"));
    for (const char* key : {"T", "renorm_dt", "transient", "gap_floor", "tau_min", "tau_max",
                            "T_forward", "T_backward", "sample_spacing"}) {
        if (params.contains(key) && !(params.at(key).get<double>() > 0.0))
            diags.push_back(std::string(path) + "." + key + ": must be positive");
    }
    if (params.contains("t_grid")) {
        for (const auto& v : params.at("t_grid"))
            if (!(v.get<double>() > 0.0))
                diags.push_back(path + std::string(".t_grid: entries must be positive"));
    }
    if (params.contains("observables")) {
        for (const auto& v : params.at("observables")) {
            try {
                observable_from_name(v.get<std::string>());
            } catch (const std::exception& e) {
                diags.push_back(path + std::string(".observables: ") + e.what());
            }
        }
    }
}

json spectrum_to_json(const LyapunovSpectrum& s) {
    json j;
    j["exponents"] = s.exponents;
    j["half_widths"] = s.half_widths;
    j["gaps"] = s.gaps;
    j["horizon"] = s.horizon;
    j["renorm"] = s.renorm;
    j["nonconvergence"] = s.nonconvergence;
    return j;
}

json bunching_to_json(const BunchingReport& r) {
    json j;
    j["form"] = r.form == BunchingReport::Form::Flow ? "flow" : "map";
    j["theta"] = r.theta;
    j["eta"] = r.eta;
    j["gamma_star"] = r.gamma_star;
    j["margin"] = r.margin;
    j["verdict"] = r.verdict;
    j["n_samples"] = r.n_samples;
    j["times"] = r.times;
    if (r.form == BunchingReport::Form::Map) j["n_tau_le_1"] = r.n_tau_le_1;
    return j;
}

Vec3 vec3_param(const json& params, const char* key, const Vec3& dflt) {
    if (!params.contains(key)) return dflt;
    const auto& a = params.at(key);
    return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
}

Vec2 vec2_param(const json& params, const char* key, const Vec2& dflt) {
    if (!params.contains(key)) return dflt;
    const auto& a = params.at(key);
    return Vec2(a.at(0).get<double>(), a.at(1).get<double>());
}

std::vector<double> grid_param(const json& params, const char* key,
                               const std::vector<double>& dflt) {
    if (!params.contains(key)) return dflt;
    return params.at(key).get<std::vector<double>>();
}

// Attractor points spaced along one settled orbit.
std::vector<Vec3> orbit_points(const VectorFieldSpec& spec, const Vec3& x0, int n, double spacing,
                               const IntegratorConfig& cfg) {
    const Rhs rhs = [&spec](double, const VecX& y, VecX& dydt) {
        dydt = VecX(evaluate_field(spec, Vec3(y.head<3>())));
    };
    VecX y = integrate_ode(rhs, VecX(x0), 0.0, 20.0, cfg);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) {
        y = integrate_ode(rhs, y, 0.0, spacing, cfg);
        pts.push_back(Vec3(y.head<3>()));
    }
    return pts;
}

struct ExperimentOutput {
    json results;
    std::string aggregates_csv;
};

ExperimentOutput execute(const std::string& experiment, const json& params,
                         const VectorFieldSpec& flow, const IntegratorConfig& integ,
                         const CocycleGenerator& gen, const CrossSection& sec,
                         const RunnerOptions& opts) {
    ExperimentOutput out;
    std::ostringstream csv;
    csv.imbue(std::locale::classic());

    const int jobs = opts.jobs > 0
                         ? opts.jobs
                         : std::max(1u, std::thread::hardware_concurrency());

    if (experiment == "flow-spectrum") {
        const Vec3 x0 = vec3_param(params, "x0", Vec3(1.0, 1.0, 20.0));
        const double T = params.value("T", 1000.0);
        const double renorm_dt = params.value("renorm_dt", 0.5);
        const double transient = params.value("transient", std::max(0.05 * T, 50.0));
        const double gap_floor = params.value("gap_floor", 1e-4);
        const LyapunovSpectrum s =
            qr_lyapunov_flow(gen, flow, x0, T, renorm_dt, transient, integ);
        const SimplicityVerdict v = simplicity_verdict(s, gap_floor);
        out.results["spectrum"] = spectrum_to_json(s);
        out.results["verdict"] = {{"simple", v.simple},
                                  {"min_gap", v.min_gap},
                                  {"resolved", v.resolved}};
        csv << "index,exponent,half_width\n";
        for (std::size_t i = 0; i < s.exponents.size(); ++i)
            csv << i << ',' << s.exponents[i] << ',' << s.half_widths[i] << '\n';
    } else if (experiment == "section-sample") {
        const Vec2 x0 = vec2_param(params, "x0", Vec2(2.0, 5.0));
        const int n_returns = params.value("n_returns", 200);
        const double tau_min = params.value("tau_min", 0.05);
        const double tau_max = params.value("tau_max", 50.0);
        const auto samples = sample_returns(flow, sec, x0, n_returns, integ, tau_min, tau_max);
        const ReturnMapStats stats = return_time_stats(samples);
        out.results["stats"] = {{"n_samples", stats.n_samples},
                                {"mean_tau", stats.mean_tau},
                                {"min_tau", stats.min_tau},
                                {"max_tau", stats.max_tau},
                                {"censored_count", stats.censored_count}};
        std::ostringstream samples_csv;
        samples_csv.imbue(std::locale::classic());
        write_samples_csv(samples_csv, samples);
        csv << samples_csv.str();
    } else if (experiment == "bunching") {
        const double theta = params.value("theta", 0.5);
        const double eta = params.value("eta", 1.0);
        const auto t_grid = grid_param(params, "t_grid", {0.5, 1.0});
        const int n_points = params.value("n_points", 20);
        const int n_returns = params.value("n_returns", 50);
        const Vec2 x0s = vec2_param(params, "x0_section", Vec2(2.0, 5.0));

        const auto pts = orbit_points(flow, Vec3(1.0, 1.0, 20.0), n_points, 1.5, integ);
        const BunchingReport flow_rep =
            check_bunching_flow(gen, flow, pts, theta, eta, t_grid, integ);
        out.results["flow_report"] = bunching_to_json(flow_rep);

        const auto samples = sample_returns(flow, sec, x0s, n_returns, integ);
        const auto induced = induce_map_cocycle(gen, flow, sec, samples, integ);
        std::vector<std::pair<MatX, double>> pairs;
        for (const auto& [idx, a] : induced) pairs.emplace_back(a, samples[idx].tau);
        if (!pairs.empty()) {
            const BunchingReport map_rep = check_bunching_map(pairs, theta, eta);
            out.results["map_report"] = bunching_to_json(map_rep);
        }
        csv << "form,gamma_star,verdict,n_samples\n";
        csv << "flow," << flow_rep.gamma_star << ',' << (flow_rep.verdict ? 1 : 0) << ','
            << flow_rep.n_samples << '\n';
        if (out.results.contains("map_report"))
            csv << "map," << out.results["map_report"]["gamma_star"].get<double>() << ','
                << (out.results["map_report"]["verdict"].get<bool>() ? 1 : 0) << ','
                << out.results["map_report"]["n_samples"].get<int>() << '\n';
    } else if (experiment == "splitting-check") {
        const Vec3 x0 = vec3_param(params, "x0", Vec3(1.0, 1.0, 20.0));
        const double tf = params.value("T_forward", 20.0);
        const double tb = params.value("T_backward", 20.0);
        const int n_samples = params.value("n_samples", 200);
        const double spacing = params.value("sample_spacing", 0.2);
        const auto t_grid = grid_param(params, "t_grid", {0.5, 1.0});
        const double theta = params.value("theta", 0.9);
        const auto split = covariant_splitting(flow, x0, tf, tb, integ, n_samples, spacing);
        const auto rep = check_singular_hyperbolicity(split, flow, t_grid, theta, integ);
        out.results["report"] = {{"theta", rep.theta},
                                 {"n_checks", rep.n_checks},
                                 {"pass_fraction_domination", rep.pass_fraction_domination},
                                 {"pass_fraction_contraction", rep.pass_fraction_contraction},
                                 {"pass_fraction_volume", rep.pass_fraction_volume},
                                 {"pass_fraction_all", rep.pass_fraction_all},
                                 {"worst_domination_margin", rep.worst_domination_margin},
                                 {"worst_contraction_margin", rep.worst_contraction_margin},
                                 {"worst_volume_margin", rep.worst_volume_margin},
                                 {"theta_min_certified", rep.theta_min_certified},
                                 {"literal_domination_max", rep.literal_domination_max}};
        csv << "check,pass_fraction\n";
        csv << "domination," << rep.pass_fraction_domination << '\n';
        csv << "contraction," << rep.pass_fraction_contraction << '\n';
        csv << "volume," << rep.pass_fraction_volume << '\n';
    } else if (experiment == "relation-check") {
        const Vec2 x0s = vec2_param(params, "x0_section", Vec2(2.0, 5.0));
        const int n_returns = params.value("n_returns", 300);
        const double T = params.value("T", 1000.0);
        const double renorm_dt = params.value("renorm_dt", 0.5);
        const double transient = params.value("transient", 50.0);
        const double tau_min = params.value("tau_min", 0.05);
        const double tau_max = params.value("tau_max", 50.0);

        const auto samples = sample_returns(flow, sec, x0s, n_returns, integ, tau_min, tau_max);
        const ReturnMapStats stats = return_time_stats(samples);
        const auto induced = induce_map_cocycle(gen, flow, sec, samples, integ);
        std::vector<MatX> mats;
        for (const auto& [idx, a] : induced) mats.push_back(a);
        const LyapunovSpectrum map_spec = qr_lyapunov_map(mats);
        const LyapunovSpectrum flow_spec = qr_lyapunov_flow(
            gen, flow, sec.embed(x0s), T, renorm_dt, transient, integ);
        const auto errors = exponent_relation_check(flow_spec, map_spec, stats.mean_tau);
        out.results["flow_spectrum"] = spectrum_to_json(flow_spec);
        out.results["map_spectrum"] = spectrum_to_json(map_spec);
        out.results["mean_tau"] = stats.mean_tau;
        out.results["relative_errors"] = errors;
        csv << "index,flow_exponent,map_exponent,relative_error\n";
        for (std::size_t i = 0; i < errors.size(); ++i)
            csv << i << ',' << flow_spec.exponents[i] << ',' << map_spec.exponents[i] << ','
                << errors[i] << '\n';
    } else if (experiment == "suspension-check") {
        const Vec2 x0s = vec2_param(params, "x0_section", Vec2(2.0, 5.0));
        const int n_returns = params.value("n_returns", 100);
        const double tau_min = params.value("tau_min", 0.05);
        const double tau_max = params.value("tau_max", 50.0);
        const SuspensionReport rep =
            suspension_consistency(gen, flow, sec, x0s, n_returns, integ, tau_min, tau_max);
        out.results["report"] = {{"n_returns", rep.n_returns},
                                 {"s_n", rep.s_n},
                                 {"orbit_time", rep.orbit_time},
                                 {"time_rel_error", rep.time_rel_error},
                                 {"matrix_rel_error", rep.matrix_rel_error},
                                 {"exponent_error", rep.exponent_error}};
        csv << "n_returns,s_n,time_rel_error,matrix_rel_error,exponent_error\n";
        csv << rep.n_returns << ',' << rep.s_n << ',' << rep.time_rel_error << ','
            << rep.matrix_rel_error << ',' << rep.exponent_error << '\n';
    } else if (experiment == "simplicity-scan" || experiment == "openness-probe") {
        ScanConfig sc;
        sc.base_generator = gen;
        sc.flow = flow;
        sc.integrator = integ;
        sc.n_seeds = params.value("n_seeds", 10);
        sc.gap_floor = params.value("gap_floor", 1e-4);
        sc.horizon_T = params.value("T", 2000.0);
        sc.renorm_dt = params.value("renorm_dt", 1.0);
        sc.transient = params.value("transient", 50.0);
        sc.x0 = vec3_param(params, "x0", Vec3(1.0, 1.0, 20.0));
        sc.theta = params.value("theta", 0.5);
        sc.eta = params.value("eta", 1.0);
        sc.experiment_id = params.value("experiment_id", 1ULL);
        sc.seed_offset = opts.seed_offset;
        sc.jobs = jobs;

        if (experiment == "simplicity-scan") {
            sc.epsilon_grid = grid_param(params, "epsilon_grid", {0.05, 0.1, 0.2});
            const ScanResult res = simplicity_scan(sc);
            json records = json::array();
            for (const auto& r : res.records)
                records.push_back({{"seed", r.seed},
                                   {"epsilon", r.epsilon},
                                   {"min_gap", r.min_gap},
                                   {"simple", r.simple},
                                   {"resolved", r.resolved},
                                   {"failed", r.failed}});
            json aggs = json::array();
            csv << "epsilon,n_resolved,unresolved_count,failed_count,fraction_simple,"
                   "gap_q10,gap_q50,gap_q90\n";
            for (const auto& a : res.per_epsilon) {
                aggs.push_back({{"epsilon", a.epsilon},
                                {"n_resolved", a.n_resolved},
                                {"unresolved_count", a.unresolved_count},
                                {"failed_count", a.failed_count},
                                {"fraction_simple", a.fraction_simple},
                                {"gap_q10", a.gap_q10},
                                {"gap_q50", a.gap_q50},
                                {"gap_q90", a.gap_q90}});
                csv << a.epsilon << ',' << a.n_resolved << ',' << a.unresolved_count << ','
                    << a.failed_count << ',' << a.fraction_simple << ',' << a.gap_q10 << ','
                    << a.gap_q50 << ',' << a.gap_q90 << '\n';
            }
            out.results["records"] = records;
            out.results["per_epsilon"] = aggs;
            out.results["base_bunched"] = res.base_bunched;
            out.results["base_gamma_star"] = res.base_gamma_star;
            out.results["interpretation"] =
                "Sampled simplicity fractions are consistent with genericity of the simple "
                "spectrum; a scan can support but never certify density.";
        } else {
            const auto delta_grid = grid_param(params, "delta_grid", {0.0, 0.001, 0.01});
            const OpennessResult res = openness_probe(gen, sc, delta_grid, sc.n_seeds);
            json pts = json::array();
            csv << "delta,retention,min_gap_over_seeds,n_resolved\n";
            for (const auto& p : res.per_delta) {
                pts.push_back({{"delta", p.delta},
                               {"retention", p.retention},
                               {"min_gap_over_seeds", p.min_gap_over_seeds},
                               {"n_resolved", p.n_resolved}});
                csv << p.delta << ',' << p.retention << ',' << p.min_gap_over_seeds << ','
                    << p.n_resolved << '\n';
            }
            out.results["per_delta"] = pts;
            out.results["base_min_gap"] = res.base_min_gap;
            out.results["interpretation"] =
                "Retention approaching 1 at small delta is consistent with openness of the "
                "simple-spectrum set; sampling supports but cannot certify it.";
        }
    } else if (experiment == "birkhoff") {
        std::vector<std::string> names = {"x", "z", "z2"};
        if (params.contains("observables"))
            names = params.at("observables").get<std::vector<std::string>>();
        std::vector<Vec3> x0_list = {Vec3(1, 1, 20), Vec3(-3, 2, 15), Vec3(5, -5, 30)};
        if (params.contains("x0_list")) {
            x0_list.clear();
            for (const auto& a : params.at("x0_list"))
                x0_list.emplace_back(a.at(0).get<double>(), a.at(1).get<double>(),
                                     a.at(2).get<double>());
        }
        const double T = params.value("T", 500.0);
        const double transient = params.value("transient", 20.0);
        json reports = json::array();
        csv << "observable,max_pairwise_spread,empirical_std\n";
        for (const auto& name : names) {
            const BirkhoffReport rep =
                birkhoff_check(flow, observable_from_name(name), x0_list, T, integ, transient);
            reports.push_back({{"observable", name},
                               {"averages", rep.averages},
                               {"max_pairwise_spread", rep.max_pairwise_spread},
                               {"empirical_std", rep.empirical_std},
                               {"horizon", rep.horizon}});
            csv << name << ',' << rep.max_pairwise_spread << ',' << rep.empirical_std << '\n';
        }
        out.results["reports"] = reports;
    } else {
        throw ConfigError("unknown experiment: " + experiment);
    }

    out.aggregates_csv = csv.str();
    return out;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
    f << content;
}

}  // namespace

std::vector<std::string> known_experiments() { return kExperiments; }

std::vector<std::string> validate_config(const json& config) {
    Diags diags;
    check_keys(config, "(top level)",
               {"format_version", "experiment", "output_dir", "flow", "integrator", "generator",
                "section", "params"},
               diags);
    if (!config.is_object()) return diags;

    if (!config.contains("format_version"))
        diags.push_back("format_version: required key missing");
    else if (config.at("format_version").get<std::string>() != kFormatVersion)
        diags.push_back("format_version: unsupported version (expected \"" +
                        std::string(kFormatVersion) + "\")");

    std::string experiment;
    if (!config.contains("experiment")) {
        diags.push_back("experiment: required key missing");
    } else {
        experiment = config.at("experiment").get<std::string>();
        if (std::find(kExperiments.begin(), kExperiments.end(), experiment) ==
            kExperiments.end())
            diags.push_back("experiment: unknown experiment \"" + experiment + "\"");
    }
    if (!config.contains("output_dir")) diags.push_back("output_dir: required key missing");

    json resolved;
    const VectorFieldSpec flow = parse_flow(config, diags, resolved);
    parse_integrator(config, diags, resolved);
    parse_generator(config, diags, resolved);
    parse_section(config, flow, diags, resolved);
    if (!experiment.empty() && config.contains("params"))
        validate_params(experiment, config.at("params"), diags);
    return diags;
}

RunOutcome run_config(const json& config, const RunnerOptions& opts) {
    RunOutcome outcome;
    outcome.diagnostics = validate_config(config);
    if (!outcome.diagnostics.empty()) {
        outcome.exit_code = 2;
        return outcome;
    }

    const std::string experiment = config.at("experiment").get<std::string>();
    const std::string output_dir = opts.output_override.empty()
                                       ? config.at("output_dir").get<std::string>()
                                       : opts.output_override;

    Diags ignored;
    json resolved;
    resolved["format_version"] = kFormatVersion;
    resolved["experiment"] = experiment;
    resolved["output_dir"] = output_dir;
    const VectorFieldSpec flow = parse_flow(config, ignored, resolved);
    const IntegratorConfig integ = parse_integrator(config, ignored, resolved);
    const CocycleGenerator gen = parse_generator(config, ignored, resolved);
    const CrossSection sec = parse_section(config, flow, ignored, resolved);
    const json params = config.value("params", json::object());
    resolved["params"] = params;

    json manifest;
    manifest["config_resolved"] = resolved;
    manifest["versions"] = {{"format_version", kFormatVersion},
                            {"lylab", kLibVersion},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)}};
    manifest["seed_streams"] = {
        {"scheme", "splitmix64(experiment_id, seed + seed_offset, cell_index)"},
        {"seed_offset", opts.seed_offset}};
    // which form of the Lorenz z-equation this build integrates
    manifest["lorenz_form"] = "dz/dt = x*y - b*z";

    const auto t0 = std::chrono::steady_clock::now();
    int exit_code = 0;
    ExperimentOutput result;
    try {
        result = execute(experiment, params, flow, integ, gen, sec, opts);
    } catch (const ConfigError& e) {
        exit_code = 2;
        outcome.diagnostics.push_back(e.what());
    } catch (const std::exception& e) {
        exit_code = 3;
        outcome.diagnostics.push_back(e.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    manifest["wall_time_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    manifest["errors"] = outcome.diagnostics;
    manifest["exit_code"] = exit_code;

    std::filesystem::create_directories(output_dir);
    if (exit_code == 0) {
        json results;
        results["format_version"] = kFormatVersion;
        results["experiment"] = experiment;
        results["results"] = result.results;
        write_file(std::filesystem::path(output_dir) / "results.json", results.dump(2) + "\n");
        write_file(std::filesystem::path(output_dir) / "aggregates.csv", result.aggregates_csv);
    }
    write_file(std::filesystem::path(output_dir) / "manifest.json", manifest.dump(2) + "\n");

    outcome.exit_code = exit_code;
    return outcome;
}

json demo_config(const std::string& experiment) {
    if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end())
        throw ConfigError("unknown experiment: " + experiment);

    json cfg;
    cfg["format_version"] = kFormatVersion;
    cfg["experiment"] = experiment;
    cfg["output_dir"] = "out-" + experiment;
    cfg["flow"] = {{"kind", "lorenz"}};

    if (experiment == "flow-spectrum") {
        MatX g(2, 2);
        g << 2.0, 0.0, 0.0, -1.0;
        cfg["generator"] = CocycleGenerator::constant(g).to_json();
        cfg["params"] = {{"T", 200.0}, {"renorm_dt", 0.5}, {"transient", 10.0}};
    } else if (experiment == "section-sample") {
        cfg["params"] = {{"x0", {2.0, 5.0}}, {"n_returns", 100}};
    } else if (experiment == "bunching") {
        cfg["generator"] = {{"random",
                             {{"dim", 2}, {"n_modes", 3}, {"seed", 7}, {"amplitude", 0.1},
                              {"traceless", true}}}};
        cfg["params"] = {{"theta", 0.5}, {"eta", 1.0}, {"t_grid", {0.5, 1.0}},
                         {"n_points", 10}, {"n_returns", 30}};
    } else if (experiment == "splitting-check") {
        cfg["params"] = {{"n_samples", 100}, {"t_grid", {0.5, 1.0}}, {"theta", 0.9}};
    } else if (experiment == "relation-check") {
        cfg["generator"] = {{"random",
                             {{"dim", 2}, {"n_modes", 3}, {"seed", 11}, {"amplitude", 0.2},
                              {"traceless", true}}}};
        cfg["params"] = {{"n_returns", 300}, {"T", 400.0}};
    } else if (experiment == "suspension-check") {
        cfg["generator"] = {{"random",
                             {{"dim", 2}, {"n_modes", 3}, {"seed", 13}, {"amplitude", 0.2},
                              {"traceless", true}}}};
        cfg["params"] = {{"n_returns", 50}};
    } else if (experiment == "simplicity-scan") {
        cfg["generator"] = CocycleGenerator::zero(2).to_json();
        cfg["params"] = {{"epsilon_grid", {0.05, 0.1}}, {"n_seeds", 5}, {"T", 500.0},
                         {"gap_floor", 1e-4}};
    } else if (experiment == "openness-probe") {
        MatX g(2, 2);
        g << 1.0, 0.0, 0.0, -1.0;
        cfg["generator"] = CocycleGenerator::constant(g).to_json();
        cfg["params"] = {{"delta_grid", {0.0, 0.001, 0.01}}, {"n_seeds", 5}, {"T", 300.0},
                         {"gap_floor", 0.1}};
    } else if (experiment == "birkhoff") {
        cfg["params"] = {{"observables", {"x", "z"}}, {"T", 200.0}};
    }
    return cfg;
}

}  // namespace lylab
